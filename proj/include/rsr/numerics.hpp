#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rsr/tensor.hpp"

namespace rsr {

/// Numerically stable softmax along `axis` (max-subtracted).
Tensor softmax(const Tensor& t, std::size_t axis);

/// Elementwise logistic function.
Tensor sigmoid(const Tensor& t);

float sigmoid(float x);

/// Clamps negatives to zero in place.
void relu_inplace(Tensor& t);

struct ChannelPool {
    Tensor avg;
    Tensor max;
};

/// Mean and max over the trailing channel axis of an (X, Y, Z, C) volume.
/// Both outputs keep a singleton channel axis.
ChannelPool channel_pool(const Tensor& t);

/// Zero padding per kernel axis, in kernel order (z, y, x).
struct Padding3 {
    std::size_t z = 0;
    std::size_t y = 0;
    std::size_t x = 0;
};

/// Zero-padded cross-correlation, stride 1 unless given.
///
/// `t` is a channel-last volume (X, Y, Z, C_in). `kernel` is
/// (C_out, C_in, k_z, k_y, k_x) with odd spatial sizes; k_x runs along the
/// first volume axis, k_y along the second and k_z along the third. The
/// output is (X', Y', Z', C_out) where each extent is (n + 2p - k) / stride + 1.
Tensor conv3d(const Tensor& t, const Tensor& kernel, Padding3 padding, std::size_t stride = 1);

/// Same-size 3-D convolution: padding (k - 1) / 2 on every axis.
Tensor conv3d_same(const Tensor& t, const Tensor& kernel);

/// 2-D counterpart over channel-last (H, W, C_in) maps with a
/// (C_out, C_in, k_h, k_w) kernel and "same" zero padding.
Tensor conv2d_same(const Tensor& t, const Tensor& kernel);

/// Concatenates along the trailing axis; leading extents must agree.
Tensor concat_channels(std::span<const Tensor> parts);

/// Kernel with a single 1 at the spatial center on the (o, o) diagonal.
Tensor delta_kernel3d(std::size_t channels, std::size_t k_z, std::size_t k_y, std::size_t k_x);

}  // namespace rsr
