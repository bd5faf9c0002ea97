#include "rsr/mono.hpp"

#include "rsr/errors.hpp"
#include "rsr/numerics.hpp"

namespace rsr {

std::size_t ConvStack::in_channels() const {
    if (layers.empty()) throw ArgumentError("empty conv stack");
    return layers.front().dim(1);
}

std::size_t ConvStack::out_channels() const {
    if (layers.empty()) throw ArgumentError("empty conv stack");
    return layers.back().dim(0);
}

Tensor ConvStack::forward(const Tensor& x) const {
    if (layers.empty()) throw ArgumentError("empty conv stack");
    Tensor y = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        y = conv2d_same(y, layers[i]);
        if (i + 1 < layers.size()) relu_inplace(y);
    }
    return y;
}

namespace {

void check_stack(const ConvStack& stack, std::size_t in, std::size_t out, const std::string& what) {
    if (stack.layers.empty()) throw ArgumentError(what + " has no layers");
    std::size_t c = in;
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
        const Tensor& k = stack.layers[i];
        if (k.rank() != 4 || k.dim(1) != c || k.dim(2) % 2 == 0 || k.dim(3) % 2 == 0) {
            throw ArgumentError(what + " layer " + std::to_string(i) + " has shape " + shape_to_string(k.shape()) +
                                ", expected (C_out, " + std::to_string(c) + ", odd, odd)");
        }
        c = k.dim(0);
    }
    if (c != out) {
        throw ArgumentError(what + " ends with " + std::to_string(c) + " channels, expected " + std::to_string(out));
    }
}

}  // namespace

void ImageHeads::validate(const PipelineConfig& config) const {
    const ImageHeads& heads = *this;
    // Heads are optional when features and depth are injected.
    if (heads.feature.empty() && heads.depth.empty()) return;
    const std::size_t n = config.scales.size();
    if (heads.feature.size() != n || heads.depth.size() != n) {
        throw ArgumentError("image heads cover " + std::to_string(heads.feature.size()) + " scales, config has " +
                            std::to_string(n));
    }
    for (std::size_t s = 0; s < n; ++s) {
        const std::string tag = " (stride " + std::to_string(config.scales[s]) + ")";
        check_stack(heads.feature[s], 3, config.feat_channels, "feature head" + tag);
        check_stack(heads.depth[s], config.feat_channels, config.depth.bins, "depth head" + tag);
    }
}

void MonoWeights::validate(const PipelineConfig& config) const {
    heads.validate(config);
    const auto grid = config.grid.make();
    check_stack(bev_encoder, config.fused_channels() * grid.nz(), static_cast<std::size_t>(config.bins.count),
                "BEV encoder");
}

DepthAwareProjector::DepthAwareProjector(const PipelineConfig& config, const Rig& rig)
    : config_(config), rig_(rig), grid_(config.grid.make()) {
    for (std::size_t stride : config.scales) {
        luts_.push_back(build_lut(grid_, rig.intrinsics, rig.extrinsics, FeatureDims::for_image(rig.intrinsics, stride),
                                  config.depth));
    }
}

Tensor DepthAwareProjector::project(const std::vector<Tensor>& features, const std::vector<Tensor>& depth,
                                    VoxelSampler sampler) const {
    if (features.size() != luts_.size() || depth.size() != luts_.size()) {
        throw ArgumentError("expected " + std::to_string(luts_.size()) + " scales of features and depth, got " +
                            std::to_string(features.size()) + " and " + std::to_string(depth.size()));
    }
    std::vector<Tensor> per_scale;
    per_scale.reserve(luts_.size());
    for (std::size_t s = 0; s < luts_.size(); ++s) {
        if (sampler == VoxelSampler::Lut) {
            per_scale.push_back(gather_voxels(luts_[s], features[s], depth[s]));
        } else {
            per_scale.push_back(sample_voxels_reference(grid_, rig_.intrinsics, rig_.extrinsics, luts_[s].feat,
                                                        config_.depth, features[s], depth[s]));
        }
    }
    return fuse_multiscale(per_scale, config_.fusion);
}

Tensor average_pool2d(const Tensor& image, std::size_t stride) {
    if (image.rank() != 3) throw ArgumentError("average_pool2d expects (H, W, C)");
    if (stride == 0) throw ArgumentError("pool stride must be positive");
    const std::size_t h = image.dim(0) / stride, w = image.dim(1) / stride, c = image.dim(2);
    if (h == 0 || w == 0) throw ArgumentError("image smaller than pool stride");
    Tensor out({h, w, c});
    const float inv = 1.0f / static_cast<float>(stride * stride);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t q = 0; q < w; ++q) {
            float* dst = out.data() + (r * w + q) * c;
            for (std::size_t dr = 0; dr < stride; ++dr) {
                for (std::size_t dq = 0; dq < stride; ++dq) {
                    const float* src = image.data() + ((r * stride + dr) * image.dim(1) + q * stride + dq) * c;
                    for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
                }
            }
            for (std::size_t ch = 0; ch < c; ++ch) dst[ch] *= inv;
        }
    }
    return out;
}

Tensor toy_depth_head(const Tensor& features, const ConvStack& head) {
    return softmax(head.forward(features), 2);
}

void complete_view_inputs(ViewInputs& in, const ImageHeads& heads, const PipelineConfig& config) {
    const std::size_t n = config.scales.size();
    if (in.features.empty()) {
        if (!in.image) throw ArgumentError("neither an image nor per-scale features were provided");
        if (heads.feature.size() != n) throw ArgumentError("missing feature heads");
        for (std::size_t s = 0; s < n; ++s) {
            in.features.push_back(heads.feature[s].forward(average_pool2d(*in.image, config.scales[s])));
        }
    }
    if (in.features.size() != n) {
        throw ArgumentError("got features for " + std::to_string(in.features.size()) + " scales, config has " +
                            std::to_string(n));
    }
    if (in.depth.empty()) {
        if (heads.depth.size() != n) throw ArgumentError("missing depth heads");
        for (std::size_t s = 0; s < n; ++s) in.depth.push_back(toy_depth_head(in.features[s], heads.depth[s]));
    }
    if (in.depth.size() != n) {
        throw ArgumentError("got depth for " + std::to_string(in.depth.size()) + " scales, config has " +
                            std::to_string(n));
    }
}

MonoResult run_mono(ViewInputs inputs, const MonoWeights& weights, const PipelineConfig& config, const Rig& rig,
                    const RunOptions& options) {
    const DepthAwareProjector projector = run_stage("view transform", [&] { return DepthAwareProjector(config, rig); });
    return run_mono(std::move(inputs), weights, config, projector, options);
}

MonoResult run_mono(ViewInputs inputs, const MonoWeights& weights, const PipelineConfig& config,
                    const DepthAwareProjector& projector, const RunOptions& options) {
    run_stage("weights", [&] { weights.validate(config); });
    run_stage("image heads", [&] { complete_view_inputs(inputs, weights.heads, config); });

    MonoResult r;
    r.voxels = run_stage("view transform", [&] { return projector.project(inputs.features, inputs.depth, options.sampler); });
    const BinSpec bins = config.bins.make();
    r.bev_logits = run_stage("BEV encoder", [&] { return weights.bev_encoder.forward(flatten_to_bev(r.voxels)); });
    r.e_prob = softmax(r.bev_logits, 2);
    r.elevation = run_stage("elevation regression", [&] { return regress_elevation(r.e_prob, bins); });
    r.depth = std::move(inputs.depth);
    r.features = std::move(inputs.features);
    return r;
}

}  // namespace rsr
