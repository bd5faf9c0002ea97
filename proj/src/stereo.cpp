#include "rsr/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsr/errors.hpp"
#include "rsr/numerics.hpp"

namespace rsr {

namespace {

// Sigmoid outputs saturate to exactly 0 or 1 in float; keep them inside.
constexpr float kOpenLo = std::numeric_limits<float>::min();
constexpr float kOpenHi = 1.0f - 0x1p-24f;

float open_unit(float v) { return std::clamp(v, kOpenLo, kOpenHi); }

void check_volume(const Tensor& v, const char* what) {
    if (v.rank() != 4) {
        throw ArgumentError(std::string(what) + " must be (N_g, N_x, N_y, N_z), got " + shape_to_string(v.shape()));
    }
}

// (G, X, Y, Z) -> (X, Y, Z, G)
Tensor groups_last(const Tensor& v) {
    const std::size_t g = v.dim(0), n = v.size() / g;
    Tensor out({v.dim(1), v.dim(2), v.dim(3), g});
    for (std::size_t k = 0; k < g; ++k) {
        const float* src = v.data() + k * n;
        for (std::size_t i = 0; i < n; ++i) out[i * g + k] = src[i];
    }
    return out;
}

void check_kernel5(const Tensor& k, std::size_t c_out, std::size_t c_in, const std::string& what) {
    if (k.rank() != 5 || k.dim(0) != c_out || k.dim(1) != c_in || k.dim(2) % 2 == 0 || k.dim(3) % 2 == 0 ||
        k.dim(4) % 2 == 0) {
        throw ArgumentError(what + " has shape " + shape_to_string(k.shape()) + ", expected (" +
                            std::to_string(c_out) + ", " + std::to_string(c_in) + ", odd, odd, odd)");
    }
}

void check_hourglass_kernel(const Tensor& k, std::size_t c, const std::string& what) {
    if (k.shape() != Shape{c, c, 3, 3, 3}) {
        throw ArgumentError(what + " has shape " + shape_to_string(k.shape()) + ", expected (" + std::to_string(c) +
                            ", " + std::to_string(c) + ", 3, 3, 3)");
    }
}

}  // namespace

Tensor build_cost_volume(const Tensor& b_left, const Tensor& b_right, std::size_t groups) {
    if (b_left.rank() != 4) throw ArgumentError("voxel features must be (N_x, N_y, N_z, N_c)");
    if (b_left.shape() != b_right.shape()) {
        throw ArgumentError("left and right voxel features differ: " + shape_to_string(b_left.shape()) + " vs " +
                            shape_to_string(b_right.shape()));
    }
    const std::size_t nc = b_left.dim(3);
    if (groups == 0 || nc % groups != 0) {
        throw ArgumentError("group count " + std::to_string(groups) + " does not divide " + std::to_string(nc) +
                            " channels");
    }
    const std::size_t g = nc / groups;
    const std::size_t cells = b_left.size() / nc;
    Tensor out({groups, b_left.dim(0), b_left.dim(1), b_left.dim(2)});
    const float inv = 1.0f / static_cast<float>(g);
    const auto n = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto cell = static_cast<std::size_t>(i);
        const float* l = b_left.data() + cell * nc;
        const float* r = b_right.data() + cell * nc;
        for (std::size_t k = 0; k < groups; ++k) {
            float acc = 0.0f;
            for (std::size_t c = k * g; c < (k + 1) * g; ++c) acc += l[c] * r[c];
            out[k * cells + cell] = acc * inv;
        }
    }
    return out;
}

Tensor spatial_attention(const Tensor& b_left, const Tensor& kernel) {
    if (b_left.rank() != 4) throw ArgumentError("voxel features must be (N_x, N_y, N_z, N_c)");
    check_kernel5(kernel, 1, 2, "spatial attention kernel");
    ChannelPool pool = channel_pool(b_left);
    const Tensor parts[2] = {std::move(pool.avg), std::move(pool.max)};
    Tensor a = sigmoid(conv3d_same(concat_channels(parts), kernel));
    for (float& v : a.values()) v = open_unit(v);
    return a;
}

Tensor apply_sae(const Tensor& volume, const Tensor& a_s) {
    check_volume(volume, "cost volume");
    if (a_s.shape() != Shape{volume.dim(1), volume.dim(2), volume.dim(3), 1}) {
        throw ArgumentError("spatial attention " + shape_to_string(a_s.shape()) + " does not match cost volume " +
                            shape_to_string(volume.shape()));
    }
    Tensor out(volume.shape());
    const std::size_t n = a_s.size();
    for (std::size_t g = 0; g < volume.dim(0); ++g) {
        for (std::size_t i = 0; i < n; ++i) out[g * n + i] = a_s[i] * volume[g * n + i];
    }
    return out;
}

ConfidenceField confidence_attention(const Tensor& v_init, std::span<const double> z_centers, double s,
                                     double epsilon) {
    check_volume(v_init, "initial cost volume");
    const std::size_t groups = v_init.dim(0), nx = v_init.dim(1), ny = v_init.dim(2), nz = v_init.dim(3);
    if (z_centers.size() != nz) {
        throw ArgumentError("got " + std::to_string(z_centers.size()) + " z centers for " + std::to_string(nz) +
                            " vertical cells");
    }
    const std::size_t cells = nx * ny * nz;
    Tensor mean({nx, ny, nz});
    for (std::size_t i = 0; i < cells; ++i) {
        double acc = 0.0;
        for (std::size_t g = 0; g < groups; ++g) acc += v_init[g * cells + i];
        mean[i] = static_cast<float>(acc / static_cast<double>(groups));
    }

    ConfidenceField f;
    f.s = s;
    f.epsilon = epsilon;
    f.probability = softmax(mean, 2);
    f.values = Tensor({nx, ny});
    f.variance = Tensor({nx, ny});
    f.expectation = Tensor({nx, ny});
    const auto columns = static_cast<std::ptrdiff_t>(nx * ny);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < columns; ++c) {
        const auto col = static_cast<std::size_t>(c);
        const float* p = f.probability.data() + col * nz;
        double d = 0.0;
        for (std::size_t j = 0; j < nz; ++j) d += z_centers[j] * p[j];
        double u = 0.0;
        for (std::size_t j = 0; j < nz; ++j) {
            const double r = z_centers[j] - d;
            u += r * r * p[j];
        }
        f.expectation[col] = static_cast<float>(d);
        f.variance[col] = static_cast<float>(u);
        const double a = 1.0 / (1.0 + std::exp(-(epsilon + s * u)));
        f.values[col] = open_unit(static_cast<float>(a));
    }
    return f;
}

Tensor apply_cag(const Tensor& v_e, const Tensor& a_c) {
    check_volume(v_e, "enhanced cost volume");
    if (a_c.shape() != Shape{v_e.dim(1), v_e.dim(2)}) {
        throw ArgumentError("confidence field " + shape_to_string(a_c.shape()) + " does not match cost volume " +
                            shape_to_string(v_e.shape()));
    }
    Tensor out(v_e.shape());
    const std::size_t nz = v_e.dim(3), columns = a_c.size(), n = columns * nz;
    for (std::size_t g = 0; g < v_e.dim(0); ++g) {
        for (std::size_t col = 0; col < columns; ++col) {
            for (std::size_t j = 0; j < nz; ++j) {
                const std::size_t i = g * n + col * nz + j;
                out[i] = a_c[col] * v_e[i];
            }
        }
    }
    return out;
}

Tensor conv3d_down2(const Tensor& x, const Tensor& kernel) {
    check_kernel5(kernel, kernel.rank() == 5 ? kernel.dim(0) : 0, x.rank() == 4 ? x.dim(3) : 0, "down kernel");
    return conv3d(x, kernel, {(kernel.dim(2) - 1) / 2, (kernel.dim(3) - 1) / 2, (kernel.dim(4) - 1) / 2}, 2);
}

Tensor conv3d_up2(const Tensor& x, const Tensor& kernel, std::array<std::size_t, 3> dims) {
    if (x.rank() != 4) throw ArgumentError("up-sampling input must be (X, Y, Z, C)");
    check_kernel5(kernel, kernel.rank() == 5 ? kernel.dim(0) : 0, x.dim(3), "up kernel");
    const std::size_t c_out = kernel.dim(0), c_in = kernel.dim(1);
    // taps[a] runs along volume axis a; kernel order is (z, y, x).
    const std::array<std::size_t, 3> taps{kernel.dim(4), kernel.dim(3), kernel.dim(2)};
    const std::array<std::size_t, 3> tap_stride{1, kernel.dim(4), kernel.dim(4) * kernel.dim(3)};
    const std::size_t tap_count = taps[0] * taps[1] * taps[2];
    const std::array<std::size_t, 3> in{x.dim(0), x.dim(1), x.dim(2)};
    for (int a = 0; a < 3; ++a) {
        if (dims[a] == 0 || (dims[a] + 1) / 2 > in[a] || in[a] > (dims[a] + 2) / 2 + 1) {
            throw ArgumentError("up-sampling target does not match the coarse volume");
        }
    }
    Tensor out({dims[0], dims[1], dims[2], c_out});

    // Gather form of the transposed conv: output q receives input p through
    // tap t whenever 2p + t - pad == q.
    auto sources = [&](int a, std::size_t q, std::size_t t) -> std::ptrdiff_t {
        const auto num = static_cast<std::ptrdiff_t>(q + (taps[a] - 1) / 2) - static_cast<std::ptrdiff_t>(t);
        if (num < 0 || num % 2 != 0) return -1;
        const std::ptrdiff_t p = num / 2;
        return p < static_cast<std::ptrdiff_t>(in[a]) ? p : -1;
    };

    const auto rows = static_cast<std::ptrdiff_t>(dims[0]);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const auto q0 = static_cast<std::size_t>(r);
        for (std::size_t q1 = 0; q1 < dims[1]; ++q1) {
            for (std::size_t q2 = 0; q2 < dims[2]; ++q2) {
                float* y = out.data() + ((q0 * dims[1] + q1) * dims[2] + q2) * c_out;
                for (std::size_t t0 = 0; t0 < taps[0]; ++t0) {
                    const std::ptrdiff_t p0 = sources(0, q0, t0);
                    if (p0 < 0) continue;
                    for (std::size_t t1 = 0; t1 < taps[1]; ++t1) {
                        const std::ptrdiff_t p1 = sources(1, q1, t1);
                        if (p1 < 0) continue;
                        for (std::size_t t2 = 0; t2 < taps[2]; ++t2) {
                            const std::ptrdiff_t p2 = sources(2, q2, t2);
                            if (p2 < 0) continue;
                            const float* src =
                                x.data() + ((static_cast<std::size_t>(p0) * in[1] + static_cast<std::size_t>(p1)) *
                                                in[2] +
                                            static_cast<std::size_t>(p2)) *
                                               c_in;
                            const std::size_t tap = t0 * tap_stride[0] + t1 * tap_stride[1] + t2 * tap_stride[2];
                            for (std::size_t co = 0; co < c_out; ++co) {
                                const float* w = kernel.data() + co * c_in * tap_count + tap;
                                float s = y[co];
                                for (std::size_t ci = 0; ci < c_in; ++ci) s += w[ci * tap_count] * src[ci];
                                y[co] = s;
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

void AggregationWeights::validate(std::size_t groups) const {
    std::size_t c = groups;
    for (std::size_t i = 0; i < init.size(); ++i) {
        check_kernel5(init[i], init[i].rank() == 5 ? init[i].dim(0) : 0, c, "aggregation conv " + std::to_string(i));
        c = init[i].dim(0);
    }
    for (std::size_t i = 0; i < hourglasses.size(); ++i) {
        const std::string tag = "hourglass " + std::to_string(i);
        check_hourglass_kernel(hourglasses[i].down, c, tag + " down");
        check_hourglass_kernel(hourglasses[i].mid, c, tag + " mid");
        check_hourglass_kernel(hourglasses[i].up, c, tag + " up");
    }
    check_kernel5(head, 1, c, "aggregation head");
}

AggregationWeights AggregationWeights::identity(std::size_t groups, std::size_t init_layers, std::size_t hourglasses) {
    if (groups == 0) throw ArgumentError("need at least one group");
    AggregationWeights w;
    for (std::size_t i = 0; i < init_layers; ++i) w.init.push_back(delta_kernel3d(groups, 3, 3, 3));
    for (std::size_t i = 0; i < hourglasses; ++i) {
        const Tensor zero = Tensor::zeros({groups, groups, 3, 3, 3});
        w.hourglasses.push_back({zero, zero, zero});
    }
    w.head = Tensor::full({1, groups, 1, 1, 1}, 1.0f / static_cast<float>(groups));
    return w;
}

Tensor aggregate(const Tensor& v_a, const AggregationWeights& weights) {
    check_volume(v_a, "attention volume");
    weights.validate(v_a.dim(0));
    Tensor x = groups_last(v_a);
    for (const Tensor& k : weights.init) x = conv3d_same(x, k);
    const std::array<std::size_t, 3> dims{x.dim(0), x.dim(1), x.dim(2)};
    for (const Hourglass& h : weights.hourglasses) {
        Tensor y = conv3d_down2(x, h.down);
        relu_inplace(y);
        y = conv3d_same(y, h.mid);
        relu_inplace(y);
        y = conv3d_up2(y, h.up, dims);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
    }
    Tensor out = conv3d_same(x, weights.head);
    return std::move(out).reshaped({dims[0], dims[1], dims[2]});
}

ElevationMap regress_disparity(const Tensor& volume, std::span<const double> z_centers) {
    if (volume.rank() != 3) throw ArgumentError("aggregated volume must be (N_x, N_y, N_z)");
    const std::size_t nx = volume.dim(0), ny = volume.dim(1), nz = volume.dim(2);
    if (z_centers.size() != nz) throw ArgumentError("z centers do not match the vertical axis");
    for (double z : z_centers) {
        if (!std::isfinite(z)) throw ArgumentError("z centers must be finite");
    }
    for (std::size_t j = 1; j < nz; ++j) {
        if (!(z_centers[j] > z_centers[j - 1])) throw ArgumentError("z centers must be strictly increasing");
    }
    const Tensor p = softmax(volume, 2);
    ElevationMap map(nx, ny);
    for (std::size_t col = 0; col < nx * ny; ++col) {
        double e = 0.0;
        for (std::size_t j = 0; j < nz; ++j) e += z_centers[j] * p[col * nz + j];
        map.values[col] = static_cast<float>(std::clamp(e, z_centers.front(), z_centers.back()));
    }
    return map;
}

void StereoWeights::validate(const PipelineConfig& config) const {
    heads.validate(config);
    check_kernel5(sae_kernel, 1, 2, "spatial attention kernel");
    if (!std::isfinite(s) || !std::isfinite(epsilon)) throw ArgumentError("confidence parameters must be finite");
    aggregation.validate(config.groups);
}

std::vector<double> z_centers(const VoxelGrid& grid) {
    std::vector<double> z(grid.nz());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = grid.center(2, k);
    return z;
}

StereoResult run_stereo(ViewInputs left, ViewInputs right, const StereoWeights& weights, const PipelineConfig& config,
                        const Rig& left_rig, const Rig& right_rig, const StereoOptions& options) {
    const DepthAwareProjector lp = run_stage("view transform", [&] { return DepthAwareProjector(config, left_rig); });
    const DepthAwareProjector rp = run_stage("view transform", [&] { return DepthAwareProjector(config, right_rig); });
    return run_stereo(std::move(left), std::move(right), weights, config, lp, rp, options);
}

StereoResult run_stereo(ViewInputs left, ViewInputs right, const StereoWeights& weights, const PipelineConfig& config,
                        const DepthAwareProjector& left_projector, const DepthAwareProjector& right_projector,
                        const StereoOptions& options) {
    run_stage("weights", [&] { weights.validate(config); });
    run_stage("image heads", [&] {
        complete_view_inputs(left, weights.heads, config);
        complete_view_inputs(right, weights.heads, config);
    });

    StereoResult r;
    run_stage("view transform", [&] {
        r.b_left = left_projector.project(left.features, left.depth, options.sampler);
        r.b_right = right_projector.project(right.features, right.depth, options.sampler);
    });
    r.v_init = run_stage("cost volume", [&] { return build_cost_volume(r.b_left, r.b_right, config.groups); });
    const std::vector<double> z = z_centers(left_projector.grid());

    // Confidence reads the initial volume, not the enhanced one.
    r.a_c = run_stage("confidence attention",
                      [&] { return confidence_attention(r.v_init, z, weights.s, weights.epsilon); });
    if (options.attention == AttentionMode::Forced) {
        r.a_s = Tensor::full({r.b_left.dim(0), r.b_left.dim(1), r.b_left.dim(2), 1}, 1.0f);
        r.a_c.values = Tensor::full(r.a_c.values.shape(), 1.0f);
    } else {
        r.a_s = run_stage("spatial attention", [&] { return spatial_attention(r.b_left, weights.sae_kernel); });
    }
    r.v_e = run_stage("spatial attention", [&] { return apply_sae(r.v_init, r.a_s); });
    r.v_a = run_stage("confidence attention", [&] { return apply_cag(r.v_e, r.a_c.values); });
    r.aggregated = run_stage("aggregation", [&] { return aggregate(r.v_a, weights.aggregation); });
    r.elevation = run_stage("disparity regression", [&] { return regress_disparity(r.aggregated, z); });
    r.depth_left = std::move(left.depth);
    r.depth_right = std::move(right.depth);
    return r;
}

}  // namespace rsr
