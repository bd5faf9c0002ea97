#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rsr/config.hpp"
#include "rsr/numerics.hpp"
#include "rsr/tensor.hpp"

namespace rsr::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = u(rng);
    return t;
}

// Random rows normalized along the last axis.
inline Tensor random_distribution(Shape shape, std::mt19937_64& rng, float spread = 3.0f) {
    const std::size_t axis = shape.size() - 1;
    return softmax(random_tensor(std::move(shape), rng, -spread, spread), axis);
}

// Desk mount with the camera jittered a little, so LUT tests do not all see
// the same projection.
inline Rig jittered_rig(const PipelineConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Rig rig;
    rig.intrinsics = config.camera.intrinsics;
    rig.intrinsics.fx *= 1.0 + 0.1 * u(rng);
    rig.intrinsics.fy = rig.intrinsics.fx;
    rig.extrinsics = road_camera_extrinsics({0.1 * u(rng), 0.1 * u(rng), config.camera.height + 0.1 * u(rng)},
                                            config.camera.pitch + 0.05 * u(rng));
    return rig;
}

// Plain nested-loop 3-D cross-correlation in double, channel-last input,
// kernel (C_out, C_in, kz, ky, kx), same padding.
inline Tensor conv3d_oracle(const Tensor& x, const Tensor& k) {
    const auto X = x.dim(0), Y = x.dim(1), Z = x.dim(2), ci = x.dim(3);
    const auto co = k.dim(0), kz = k.dim(2), ky = k.dim(3), kx = k.dim(4);
    Tensor out({X, Y, Z, co});
    for (std::size_t o = 0; o < co; ++o)
        for (std::size_t a = 0; a < X; ++a)
            for (std::size_t b = 0; b < Y; ++b)
                for (std::size_t c = 0; c < Z; ++c) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < ci; ++i)
                        for (std::size_t tz = 0; tz < kz; ++tz)
                            for (std::size_t ty = 0; ty < ky; ++ty)
                                for (std::size_t tx = 0; tx < kx; ++tx) {
                                    const auto pa = static_cast<long>(a + tx) - static_cast<long>(kx / 2);
                                    const auto pb = static_cast<long>(b + ty) - static_cast<long>(ky / 2);
                                    const auto pc = static_cast<long>(c + tz) - static_cast<long>(kz / 2);
                                    if (pa < 0 || pb < 0 || pc < 0 || pa >= static_cast<long>(X) ||
                                        pb >= static_cast<long>(Y) || pc >= static_cast<long>(Z))
                                        continue;
                                    acc += static_cast<double>(k.at({o, i, tz, ty, tx})) *
                                           x.at({static_cast<std::size_t>(pa), static_cast<std::size_t>(pb),
                                                 static_cast<std::size_t>(pc), i});
                                }
                    out.at({a, b, c, o}) = static_cast<float>(acc);
                }
    return out;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace rsr::test
