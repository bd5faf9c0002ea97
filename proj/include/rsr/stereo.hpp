#pragma once

#include <array>
#include <span>
#include <vector>

#include "rsr/discretization.hpp"
#include "rsr/mono.hpp"
#include "rsr/tensor.hpp"

namespace rsr {

/// Group-wise correlation volume, shape (N_g, N_x, N_y, N_z): each group is
/// the mean over its G = N_c / N_g channels of left * right.
Tensor build_cost_volume(const Tensor& b_left, const Tensor& b_right, std::size_t groups);

/// sigmoid(conv([avg_c(B); max_c(B)])) with a (1, 2, 1, 7, 7) kernel and
/// padding (0, 3, 3). Result is (N_x, N_y, N_z, 1), strictly inside (0, 1).
Tensor spatial_attention(const Tensor& b_left, const Tensor& kernel);

/// V^e(g, x, y, z) = A^s(x, y, z) * V(g, x, y, z).
Tensor apply_sae(const Tensor& volume, const Tensor& a_s);

struct ConfidenceField {
    Tensor values;       // A^c, (N_x, N_y), strictly inside (0, 1)
    Tensor variance;     // U, (N_x, N_y)
    Tensor expectation;  // D^init, (N_x, N_y)
    Tensor probability;  // P^init, (N_x, N_y, N_z)
    double s = -1.0;
    double epsilon = 0.0;
};

/// Group-mean of V^init, softmax over z, then the variance of that vertical
/// distribution mapped through sigmoid(epsilon + s * U).
ConfidenceField confidence_attention(const Tensor& v_init, std::span<const double> z_centers, double s,
                                     double epsilon);

/// V^a(g, x, y, z) = A^c(x, y) * V^e(g, x, y, z).
Tensor apply_cag(const Tensor& v_e, const Tensor& a_c);

/// Two stride-2 layers around a bottleneck, added back onto the input:
/// x + up(relu(mid(relu(down(x))))). All kernels (C, C, 3, 3, 3).
struct Hourglass {
    Tensor down;
    Tensor mid;
    Tensor up;
};

/// Linear 3-D convs, residual hourglasses, then a head conv to one channel.
struct AggregationWeights {
    std::vector<Tensor> init;  // (C_out, C_in, k, k, k), same padding
    std::vector<Hourglass> hourglasses;
    Tensor head;  // (1, C, k_z, k_y, k_x)

    void validate(std::size_t groups) const;
    /// Delta kernels and zero hourglasses: the output equals the group mean.
    static AggregationWeights identity(std::size_t groups, std::size_t init_layers = 2, std::size_t hourglasses = 1);
};

/// Cost aggregation over a (N_g, N_x, N_y, N_z) volume; returns (N_x, N_y, N_z).
Tensor aggregate(const Tensor& v_a, const AggregationWeights& weights);

/// Stride-2 cross-correlation, pad 1, channel-last (X, Y, Z, C) input.
Tensor conv3d_down2(const Tensor& x, const Tensor& kernel);
/// Transposed stride-2 conv (the adjoint of conv3d_down2), cropped to `dims`.
Tensor conv3d_up2(const Tensor& x, const Tensor& kernel, std::array<std::size_t, 3> dims);

/// Softmax over the vertical axis, then the expected z.
ElevationMap regress_disparity(const Tensor& volume, std::span<const double> z_centers);

struct StereoWeights {
    ImageHeads heads;  // shared by both views
    Tensor sae_kernel; // (1, 2, 1, 7, 7)
    double s = -1.0;
    double epsilon = 0.0;
    AggregationWeights aggregation;

    void validate(const PipelineConfig& config) const;
};

enum class AttentionMode {
    Full,    // SAE then CAG
    Forced,  // A^s = 1 and A^c = 1
};

struct StereoOptions {
    VoxelSampler sampler = VoxelSampler::Lut;
    AttentionMode attention = AttentionMode::Full;
};

struct StereoResult {
    ElevationMap elevation;
    Tensor a_s;
    ConfidenceField a_c;
    Tensor b_left, b_right;
    Tensor v_init, v_e, v_a;
    Tensor aggregated;
    std::vector<Tensor> depth_left, depth_right;
};

StereoResult run_stereo(ViewInputs left, ViewInputs right, const StereoWeights& weights, const PipelineConfig& config,
                        const DepthAwareProjector& left_projector, const DepthAwareProjector& right_projector,
                        const StereoOptions& options = {});
StereoResult run_stereo(ViewInputs left, ViewInputs right, const StereoWeights& weights, const PipelineConfig& config,
                        const Rig& left_rig, const Rig& right_rig, const StereoOptions& options = {});

/// Grid vertical voxel centers z_j.
std::vector<double> z_centers(const VoxelGrid& grid);

}  // namespace rsr
