#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsr/geometry.hpp"
#include "rsr/tensor.hpp"

namespace rsr {

/// Uniform depth bins over [d_min, d_max]; bin k is centered at
/// d_min + (k + 0.5) * step.
struct DepthBinSpec {
    double d_min = 1.0;
    double d_max = 9.0;
    std::size_t bins = 64;

    void validate() const;
    double step() const noexcept { return (d_max - d_min) / static_cast<double>(bins); }
    double center(std::size_t k) const noexcept { return d_min + (static_cast<double>(k) + 0.5) * step(); }
    /// Continuous bin coordinate; integer values fall on bin centers.
    double coordinate(double depth) const noexcept { return (depth - d_min) / step() - 0.5; }
    /// Nearest bin, clamped to the valid range.
    std::size_t nearest(double depth) const noexcept;
};

/// Feature map layout at one backbone stride.
struct FeatureDims {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t stride = 1;

    static FeatureDims for_image(const CameraIntrinsics& k, std::size_t stride);
};

inline constexpr std::uint32_t kNoTap = 0xFFFFFFFFu;
inline constexpr std::size_t kFeatureTaps = 4;
inline constexpr std::size_t kDepthTaps = 8;

/// Precomputed per-voxel sampling plan. Feature taps index flattened pixels
/// (row * width + col); depth taps index flattened (pixel, depth bin) pairs.
/// Taps that fall outside the map keep their interpolation weight but carry
/// kNoTap and read as zero. Invalid voxels have all-zero weights.
struct ProjectionLUT {
    std::size_t nx = 0, ny = 0, nz = 0;
    FeatureDims feat;
    DepthBinSpec depth;

    std::vector<std::uint8_t> valid;
    std::vector<std::uint32_t> feat_index;  // kFeatureTaps per voxel
    std::vector<float> feat_weight;
    std::vector<std::uint32_t> depth_index;  // kDepthTaps per voxel
    std::vector<float> depth_weight;

    std::size_t voxel_count() const noexcept { return nx * ny * nz; }
    std::size_t valid_count() const noexcept;
};

ProjectionLUT build_lut(const VoxelGrid& grid, const CameraIntrinsics& k, const CameraExtrinsics& t,
                        const FeatureDims& feat, const DepthBinSpec& depth);

/// Depth-weighted voxel features from the LUT: for each valid voxel the
/// bilinearly sampled feature vector scaled by the trilinearly sampled depth
/// probability. F_img is (h, w, C_i), D_pre is (h, w, C_d); the result is
/// (N_x, N_y, N_z, C_i).
Tensor gather_voxels(const ProjectionLUT& lut, const Tensor& f_img, const Tensor& d_pre);

/// Same quantity computed per voxel with on-the-fly projection and float64
/// samplers. Used to check the LUT path.
Tensor sample_voxels_reference(const VoxelGrid& grid, const CameraIntrinsics& k, const CameraExtrinsics& t,
                               const FeatureDims& feat, const DepthBinSpec& depth, const Tensor& f_img,
                               const Tensor& d_pre);

enum class Fusion { Concat, Plus };

Fusion parse_fusion(const std::string& name);
std::string to_string(Fusion f);

Tensor fuse_multiscale(std::span<const Tensor> voxel_feats, Fusion mode = Fusion::Concat);

/// (N_x, N_y, N_z, C) -> (N_x, N_y, N_z * C); fused channel index is z * C + c.
Tensor flatten_to_bev(const Tensor& b);
Tensor unflatten_from_bev(const Tensor& bev, std::size_t nz);

/// Manifest `<stem>.json` plus little-endian blobs for flags, indices and weights.
void save_lut(const std::filesystem::path& stem, const ProjectionLUT& lut);
ProjectionLUT load_lut(const std::filesystem::path& stem);

}  // namespace rsr
