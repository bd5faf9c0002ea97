#include "rsr/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rsr/errors.hpp"

namespace rsr {

Tensor softmax(const Tensor& t, std::size_t axis) {
    if (axis >= t.rank()) {
        throw ArgumentError("softmax axis " + std::to_string(axis) + " out of range for rank " +
                            std::to_string(t.rank()));
    }
    const auto& shape = t.shape();
    std::size_t outer = 1;
    std::size_t inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
    const std::size_t n = shape[axis];

    Tensor out(shape);
    const float* src = t.data();
    float* dst = out.data();
    const auto lanes = static_cast<std::ptrdiff_t>(outer * inner);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t lane = 0; lane < lanes; ++lane) {
        const std::size_t o = static_cast<std::size_t>(lane) / inner;
        const std::size_t i = static_cast<std::size_t>(lane) % inner;
        const std::size_t base = o * n * inner + i;
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t k = 0; k < n; ++k) m = std::max(m, src[base + k * inner]);
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const float e = std::exp(src[base + k * inner] - m);
            dst[base + k * inner] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t k = 0; k < n; ++k) {
            dst[base + k * inner] = static_cast<float>(dst[base + k * inner] * inv);
        }
    }
    return out;
}

float sigmoid(float x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
    const float e = std::exp(x);
    return e / (1.0f + e);
}

Tensor sigmoid(const Tensor& t) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = sigmoid(t[i]);
    return out;
}

void relu_inplace(Tensor& t) {
    for (auto& v : t.values()) v = std::max(v, 0.0f);
}

ChannelPool channel_pool(const Tensor& t) {
    if (t.rank() != 4) {
        throw ArgumentError("channel_pool expects an (X, Y, Z, C) volume, got " + shape_to_string(t.shape()));
    }
    const std::size_t c = t.dim(3);
    const std::size_t cells = t.size() / c;
    Shape pooled{t.dim(0), t.dim(1), t.dim(2), 1};
    ChannelPool out{Tensor(pooled), Tensor(pooled)};
    const float* src = t.data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t cell = 0; cell < static_cast<std::ptrdiff_t>(cells); ++cell) {
        const float* v = src + static_cast<std::size_t>(cell) * c;
        double sum = 0.0;
        float m = v[0];
        for (std::size_t k = 0; k < c; ++k) {
            sum += v[k];
            m = std::max(m, v[k]);
        }
        // Clamp so rounding of the mean never lifts it above the max.
        out.avg[static_cast<std::size_t>(cell)] = std::min(static_cast<float>(sum / static_cast<double>(c)), m);
        out.max[static_cast<std::size_t>(cell)] = m;
    }
    return out;
}

namespace {

// Cross-correlation over a channel-last 3-axis volume. Kernel taps for each
// (c_out, c_in) pair form a block of `tap_count` floats; `tap_stride[a]` is the
// step within that block when moving one tap along volume axis `a`.
struct CorrelationGeometry {
    std::array<std::size_t, 3> in_dims;
    std::array<std::size_t, 3> taps;
    std::array<std::size_t, 3> tap_stride;
    std::array<std::size_t, 3> pad;
    std::size_t c_in;
    std::size_t c_out;
    std::size_t step = 1;
};

Tensor correlate(const Tensor& input, const Tensor& kernel, const CorrelationGeometry& g) {
    std::array<std::size_t, 3> out_dims{};
    for (int a = 0; a < 3; ++a) {
        const std::size_t padded = g.in_dims[a] + 2 * g.pad[a];
        if (padded < g.taps[a]) throw ArgumentError("convolution kernel larger than padded input");
        out_dims[a] = (padded - g.taps[a]) / g.step + 1;
    }
    const std::size_t tap_count = g.taps[0] * g.taps[1] * g.taps[2];
    Tensor out({out_dims[0], out_dims[1], out_dims[2], g.c_out});

    const float* src = input.data();
    const float* w = kernel.data();
    float* dst = out.data();
    const auto rows = static_cast<std::ptrdiff_t>(out_dims[0]);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        std::vector<float> acc(g.c_out);
        const auto o0 = static_cast<std::size_t>(row);
        for (std::size_t o1 = 0; o1 < out_dims[1]; ++o1) {
            for (std::size_t o2 = 0; o2 < out_dims[2]; ++o2) {
                std::fill(acc.begin(), acc.end(), 0.0f);
                for (std::size_t t0 = 0; t0 < g.taps[0]; ++t0) {
                    const auto i0 = static_cast<std::ptrdiff_t>(o0 * g.step + t0) - static_cast<std::ptrdiff_t>(g.pad[0]);
                    if (i0 < 0 || i0 >= static_cast<std::ptrdiff_t>(g.in_dims[0])) continue;
                    for (std::size_t t1 = 0; t1 < g.taps[1]; ++t1) {
                        const auto i1 = static_cast<std::ptrdiff_t>(o1 * g.step + t1) - static_cast<std::ptrdiff_t>(g.pad[1]);
                        if (i1 < 0 || i1 >= static_cast<std::ptrdiff_t>(g.in_dims[1])) continue;
                        for (std::size_t t2 = 0; t2 < g.taps[2]; ++t2) {
                            const auto i2 =
                                static_cast<std::ptrdiff_t>(o2 * g.step + t2) - static_cast<std::ptrdiff_t>(g.pad[2]);
                            if (i2 < 0 || i2 >= static_cast<std::ptrdiff_t>(g.in_dims[2])) continue;
                            const float* x =
                                src + ((static_cast<std::size_t>(i0) * g.in_dims[1] + static_cast<std::size_t>(i1)) *
                                           g.in_dims[2] +
                                       static_cast<std::size_t>(i2)) *
                                          g.c_in;
                            const std::size_t tap = t0 * g.tap_stride[0] + t1 * g.tap_stride[1] + t2 * g.tap_stride[2];
                            for (std::size_t co = 0; co < g.c_out; ++co) {
                                const float* wk = w + co * g.c_in * tap_count + tap;
                                float s = acc[co];
                                for (std::size_t ci = 0; ci < g.c_in; ++ci) s += wk[ci * tap_count] * x[ci];
                                acc[co] = s;
                            }
                        }
                    }
                }
                float* y = dst + ((o0 * out_dims[1] + o1) * out_dims[2] + o2) * g.c_out;
                std::copy(acc.begin(), acc.end(), y);
            }
        }
    }
    return out;
}

void check_odd(std::size_t k) {
    if (k % 2 == 0) throw ArgumentError("convolution kernels must have odd spatial sizes");
}

}  // namespace

Tensor conv3d(const Tensor& t, const Tensor& kernel, Padding3 padding, std::size_t stride) {
    if (stride == 0) throw ArgumentError("conv3d stride must be positive");
    if (t.rank() != 4) throw ArgumentError("conv3d input must be (X, Y, Z, C), got " + shape_to_string(t.shape()));
    if (kernel.rank() != 5) {
        throw ArgumentError("conv3d kernel must be (C_out, C_in, k_z, k_y, k_x), got " +
                            shape_to_string(kernel.shape()));
    }
    if (kernel.dim(1) != t.dim(3)) {
        throw ArgumentError("conv3d channel mismatch: kernel expects " + std::to_string(kernel.dim(1)) +
                            " input channels, volume has " + std::to_string(t.dim(3)));
    }
    const std::size_t kz = kernel.dim(2), ky = kernel.dim(3), kx = kernel.dim(4);
    check_odd(kz);
    check_odd(ky);
    check_odd(kx);
    CorrelationGeometry g{
        .in_dims = {t.dim(0), t.dim(1), t.dim(2)},
        .taps = {kx, ky, kz},
        .tap_stride = {1, kx, kx * ky},
        .pad = {padding.x, padding.y, padding.z},
        .c_in = t.dim(3),
        .c_out = kernel.dim(0),
        .step = stride,
    };
    return correlate(t, kernel, g);
}

Tensor conv3d_same(const Tensor& t, const Tensor& kernel) {
    if (kernel.rank() != 5) throw ArgumentError("conv3d kernel must have rank 5");
    return conv3d(t, kernel, {(kernel.dim(2) - 1) / 2, (kernel.dim(3) - 1) / 2, (kernel.dim(4) - 1) / 2});
}

Tensor conv2d_same(const Tensor& t, const Tensor& kernel) {
    if (t.rank() != 3) throw ArgumentError("conv2d input must be (H, W, C), got " + shape_to_string(t.shape()));
    if (kernel.rank() != 4) {
        throw ArgumentError("conv2d kernel must be (C_out, C_in, k_h, k_w), got " + shape_to_string(kernel.shape()));
    }
    if (kernel.dim(1) != t.dim(2)) {
        throw ArgumentError("conv2d channel mismatch: kernel expects " + std::to_string(kernel.dim(1)) +
                            " input channels, map has " + std::to_string(t.dim(2)));
    }
    const std::size_t kh = kernel.dim(2), kw = kernel.dim(3);
    check_odd(kh);
    check_odd(kw);
    CorrelationGeometry g{
        .in_dims = {t.dim(0), t.dim(1), 1},
        .taps = {kh, kw, 1},
        .tap_stride = {kw, 1, 0},
        .pad = {(kh - 1) / 2, (kw - 1) / 2, 0},
        .c_in = t.dim(2),
        .c_out = kernel.dim(0),
    };
    Tensor out = correlate(t, kernel, g);
    return std::move(out).reshaped({t.dim(0), t.dim(1), kernel.dim(0)});
}

Tensor concat_channels(std::span<const Tensor> parts) {
    if (parts.empty()) throw ArgumentError("concat_channels needs at least one tensor");
    const Shape& first = parts[0].shape();
    const Shape lead(first.begin(), first.end() - 1);
    std::size_t total = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
            throw ArgumentError("concat_channels leading extents differ: " + shape_to_string(first) + " vs " +
                                shape_to_string(s));
        }
        total += s.back();
    }
    Shape out_shape = lead;
    out_shape.push_back(total);
    Tensor out(out_shape);
    const std::size_t cells = shape_size(lead);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t c = p.shape().back();
        for (std::size_t cell = 0; cell < cells; ++cell) {
            std::copy_n(p.data() + cell * c, c, out.data() + cell * total + offset);
        }
        offset += c;
    }
    return out;
}

Tensor delta_kernel3d(std::size_t channels, std::size_t k_z, std::size_t k_y, std::size_t k_x) {
    Tensor k({channels, channels, k_z, k_y, k_x});
    for (std::size_t c = 0; c < channels; ++c) k.at({c, c, k_z / 2, k_y / 2, k_x / 2}) = 1.0f;
    return k;
}

}  // namespace rsr
