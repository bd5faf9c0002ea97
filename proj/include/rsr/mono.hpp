#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsr/config.hpp"
#include "rsr/discretization.hpp"
#include "rsr/tensor.hpp"
#include "rsr/view_transform.hpp"

namespace rsr {

/// Sequence of same-padded 2-D convolutions, ReLU between layers (not after
/// the last one). Kernels are (C_out, C_in, k_h, k_w), bias-free.
struct ConvStack {
    std::vector<Tensor> layers;

    std::size_t in_channels() const;
    std::size_t out_channels() const;
    Tensor forward(const Tensor& x) const;
};

/// Toy stand-ins for the image backbone and depth net, one pair per scale.
struct ImageHeads {
    std::vector<ConvStack> feature;  // image (3 channels, pooled by stride) -> C_i
    std::vector<ConvStack> depth;    // C_i -> C_d logits

    void validate(const PipelineConfig& config) const;
};

struct MonoWeights {
    ImageHeads heads;
    ConvStack bev_encoder;  // C * N_z -> N bin logits

    void validate(const PipelineConfig& config) const;
};

enum class VoxelSampler { Lut, Reference };

/// Precomputed per-scale projection tables for one camera.
class DepthAwareProjector {
public:
    DepthAwareProjector(const PipelineConfig& config, const Rig& rig);

    const std::vector<ProjectionLUT>& luts() const noexcept { return luts_; }
    const VoxelGrid& grid() const noexcept { return grid_; }

    /// Per-scale DAP followed by multi-scale fusion: (N_x, N_y, N_z, C).
    Tensor project(const std::vector<Tensor>& features, const std::vector<Tensor>& depth,
                   VoxelSampler sampler = VoxelSampler::Lut) const;

private:
    PipelineConfig config_;
    Rig rig_;
    VoxelGrid grid_;
    std::vector<ProjectionLUT> luts_;
};

/// Pipeline inputs: either an image for the toy heads, or per-scale features
/// (and optionally depth distributions) injected directly.
struct ViewInputs {
    std::optional<Tensor> image;    // (H, W, 3)
    std::vector<Tensor> features;   // per scale (h, w, C_i)
    std::vector<Tensor> depth;      // per scale (h, w, C_d), softmax-normalized
};

/// Mean over non-overlapping stride x stride blocks of an (H, W, C) map.
Tensor average_pool2d(const Tensor& image, std::size_t stride);

/// Runs the feature and depth heads where inputs were not injected.
void complete_view_inputs(ViewInputs& in, const ImageHeads& heads, const PipelineConfig& config);

/// Softmax over C_d of a depth head applied to one scale's features.
Tensor toy_depth_head(const Tensor& features, const ConvStack& head);

struct MonoResult {
    ElevationMap elevation;
    Tensor e_prob;               // (N_x, N_y, N)
    std::vector<Tensor> depth;   // D_pre per scale
    std::vector<Tensor> features;
    Tensor voxels;               // fused B
    Tensor bev_logits;
};

struct RunOptions {
    VoxelSampler sampler = VoxelSampler::Lut;
};

MonoResult run_mono(ViewInputs inputs, const MonoWeights& weights, const PipelineConfig& config, const Rig& rig,
                    const RunOptions& options = {});
MonoResult run_mono(ViewInputs inputs, const MonoWeights& weights, const PipelineConfig& config,
                    const DepthAwareProjector& projector, const RunOptions& options = {});

}  // namespace rsr
