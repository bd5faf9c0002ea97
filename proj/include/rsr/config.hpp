#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsr/discretization.hpp"
#include "rsr/geometry.hpp"
#include "rsr/supervision.hpp"
#include "rsr/synthetic.hpp"
#include "rsr/view_transform.hpp"

namespace rsr {

struct GridConfig {
    std::array<AxisRange, 3> ranges{AxisRange{-1.0, 0.9}, AxisRange{2.2, 7.1}, AxisRange{-0.2, 0.2}};
    std::array<double, 3> resolution{0.03, 0.03, 0.01};

    VoxelGrid make() const { return make_grid(ranges, resolution); }
};

struct BinConfig {
    int count = 80;
    double e_bound = 0.2;
    double alpha = 1.5;
    BinMode mode = BinMode::Shuttle;

    BinSpec make() const;
};

/// Everything a pipeline run needs besides weights and inputs.
struct PipelineConfig {
    std::string profile = "paper";
    GridConfig grid;
    CameraMount camera;
    DepthBinSpec depth;
    BinConfig bins;
    std::vector<std::size_t> scales{4, 8, 16};
    std::size_t feat_channels = 16;  // C_i per scale
    std::size_t groups = 8;          // N_g
    Fusion fusion = Fusion::Concat;
    double beta = 0.25;
    std::uint64_t seed = 0;
    // Weights directory; relative paths resolve against the config file.
    std::filesystem::path weights;

    // Synthetic inputs.
    double feature_noise = 0.01;
    bool texture = true;
    DepthEncoding oracle_depth = DepthEncoding::Linear;

    /// Fused voxel channel count C.
    std::size_t fused_channels() const;
    void validate() const;

    static PipelineConfig paper();
    static PipelineConfig desk();
    static PipelineConfig named(const std::string& profile);
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Reads a config file. Missing keys fall back to the profile named in
/// "profile" (default "paper"); the result is validated.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Rig& rig);
void from_json(const nlohmann::json& j, Rig& rig);
Rig load_rig(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const BinSpec& b);

DepthEncoding parse_depth_encoding(const std::string& name);
std::string to_string(DepthEncoding e);

}  // namespace rsr
