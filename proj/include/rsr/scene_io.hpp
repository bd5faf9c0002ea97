#pragma once

#include <filesystem>
#include <vector>

#include "rsr/config.hpp"
#include "rsr/mono.hpp"
#include "rsr/supervision.hpp"
#include "rsr/synthetic.hpp"

namespace rsr {

/// Everything rendered for one camera of a synthetic scene.
struct ViewData {
    Rig rig;
    Tensor image;                     // (H, W, 3)
    std::vector<Tensor> features;     // per scale (h, w, C_i)
    std::vector<Tensor> depth_prob;   // per scale (h, w, C_d), oracle encoding
    std::vector<DepthImage> depth;    // per scale, at feature-pixel centers

    /// Oracle injection: features and depth distributions, no image.
    ViewInputs oracle_inputs() const;
    ViewInputs image_inputs() const;
};

struct SceneData {
    SceneSpec scene;
    ElevationMap gt;
    ViewData left;
    ViewData right;
};

/// Scene parameters matching the config's ROI and elevation bound.
SceneParams scene_params_for(const PipelineConfig& config);

ViewData render_view(const SceneSpec& scene, const Rig& rig, const PipelineConfig& config, std::uint32_t camera_id);
SceneData render_scene(const SceneSpec& scene, const PipelineConfig& config, double dropout = 0.0);

/// Elevation and per-scale depth targets for the loss.
SupervisionBatch supervision_for(const SceneData& data, const ViewData& view, const PipelineConfig& config);

// Directory layout: scene.json, config.json, rig_{left,right}.json,
// gt_elevation / gt_mask tensors, and per view {left,right}/ holding the
// image, a full-resolution depth map and s<stride>/{features,depth_prob,depth}.
void save_scene(const std::filesystem::path& dir, const SceneData& data, const PipelineConfig& config);
SceneData load_scene(const std::filesystem::path& dir, const PipelineConfig& config);

Tensor depth_tensor(const DepthImage& d);
DepthImage depth_from_tensor(const Tensor& t);

}  // namespace rsr
