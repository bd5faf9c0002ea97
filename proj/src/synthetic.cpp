#include "rsr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "random.hpp"
#include "rsr/errors.hpp"

namespace rsr {

PrimitiveKind parse_primitive_kind(const std::string& name) {
    if (name == "bump") return PrimitiveKind::Bump;
    if (name == "pothole") return PrimitiveKind::Pothole;
    if (name == "crack") return PrimitiveKind::Crack;
    throw ArgumentError("unknown primitive kind '" + name + "'");
}

std::string to_string(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::Bump: return "bump";
        case PrimitiveKind::Pothole: return "pothole";
        case PrimitiveKind::Crack: return "crack";
    }
    return "bump";
}

namespace {

// Raised cosine on the unit disc: 1 at r = 0, 0 with zero slope at r = 1.
double raised_cosine(double r) {
    if (r >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * r));
}

}  // namespace

double Primitive::height(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    switch (kind) {
        case PrimitiveKind::Bump: return amplitude * raised_cosine(std::hypot(dx, dy) / radius);
        case PrimitiveKind::Pothole: return -amplitude * raised_cosine(std::hypot(dx, dy) / radius);
        case PrimitiveKind::Crack: {
            const double c = std::cos(angle), s = std::sin(angle);
            const double along = (c * dx + s * dy) / (3.0 * radius);
            const double across = (-s * dx + c * dy) / radius;
            return -amplitude * raised_cosine(std::hypot(along, across));
        }
    }
    return 0.0;
}

void SceneSpec::validate() const {
    if (!(e_bound > 0.0)) throw ArgumentError("scene elevation bound must be positive");
    if (!(x_extent.max > x_extent.min) || !(y_extent.max > y_extent.min)) throw ArgumentError("empty scene extent");
    if (std::abs(pitch) >= std::numbers::pi / 4 || std::abs(roll) >= std::numbers::pi / 4) {
        throw ArgumentError("scene tilt must stay below 45 degrees");
    }
    for (const auto& p : primitives) {
        if (!(p.amplitude > 0.0) || p.amplitude > e_bound) {
            throw ArgumentError("primitive amplitude " + std::to_string(p.amplitude) + " outside (0, " +
                                std::to_string(e_bound) + "]");
        }
        if (!(p.radius > 0.0)) throw ArgumentError("primitive radius must be positive");
        if (!contains(p.cx, p.cy)) throw ArgumentError("primitive center lies outside the scene extent");
    }
}

bool SceneSpec::contains(double x, double y) const {
    return x >= x_extent.min && x <= x_extent.max && y >= y_extent.min && y <= y_extent.max;
}

double SceneSpec::elevation(double x, double y) const {
    const double xm = 0.5 * (x_extent.min + x_extent.max);
    const double ym = 0.5 * (y_extent.min + y_extent.max);
    double z = std::tan(roll) * (x - xm) + std::tan(pitch) * (y - ym);
    for (const auto& p : primitives) z += p.height(x, y);
    return z;
}

Vec3 SceneSpec::normal(double x, double y) const {
    constexpr double h = 1e-4;
    const double gx = (elevation(x + h, y) - elevation(x - h, y)) / (2 * h);
    const double gy = (elevation(x, y + h) - elevation(x, y - h)) / (2 * h);
    const double n = std::sqrt(gx * gx + gy * gy + 1.0);
    return {-gx / n, -gy / n, 1.0 / n};
}

AxisRange SceneSpec::elevation_bounds() const {
    const double half_x = 0.5 * (x_extent.max - x_extent.min);
    const double half_y = 0.5 * (y_extent.max - y_extent.min);
    const double plane = std::abs(std::tan(roll)) * half_x + std::abs(std::tan(pitch)) * half_y;
    double up = 0.0, down = 0.0;
    for (const auto& p : primitives) (p.kind == PrimitiveKind::Bump ? up : down) += p.amplitude;
    return {-plane - down - 1e-6, plane + up + 1e-6};
}

SceneSpec gen_scene(std::uint64_t seed, const SceneParams& params) {
    if (params.bumps < 0 || params.potholes < 0 || params.cracks < 0) {
        throw ArgumentError("primitive counts must be non-negative");
    }
    if (!(params.amplitude_min > 0.0) || params.amplitude_max < params.amplitude_min ||
        params.amplitude_max > params.e_bound) {
        throw ArgumentError("amplitude range must satisfy 0 < min <= max <= e_bound");
    }
    if (!(params.radius_min > 0.0) || params.radius_max < params.radius_min) {
        throw ArgumentError("radius range must satisfy 0 < min <= max");
    }
    if (params.max_tilt < 0.0) throw ArgumentError("max tilt must be non-negative");

    detail::Rng rng(seed);
    SceneSpec scene;
    scene.seed = seed;
    scene.x_extent = params.x_extent;
    scene.y_extent = params.y_extent;
    scene.e_bound = params.e_bound;
    scene.pitch = params.max_tilt > 0.0 ? rng.uniform(-params.max_tilt, params.max_tilt) : 0.0;
    scene.roll = params.max_tilt > 0.0 ? rng.uniform(-params.max_tilt, params.max_tilt) : 0.0;

    auto draw = [&](PrimitiveKind kind, int count) {
        for (int i = 0; i < count; ++i) {
            Primitive p;
            p.kind = kind;
            p.cx = rng.uniform(params.x_roi.min, params.x_roi.max);
            p.cy = rng.uniform(params.y_roi.min, params.y_roi.max);
            p.radius = rng.uniform(params.radius_min, params.radius_max);
            p.amplitude = rng.uniform(params.amplitude_min, params.amplitude_max);
            p.angle = rng.uniform(0.0, std::numbers::pi);
            scene.primitives.push_back(p);
        }
    };
    draw(PrimitiveKind::Bump, params.bumps);
    draw(PrimitiveKind::Pothole, params.potholes);
    draw(PrimitiveKind::Crack, params.cracks);
    scene.validate();
    return scene;
}

ElevationMap gt_elevation_map(const SceneSpec& scene, const VoxelGrid& grid, double dropout, std::uint64_t seed) {
    if (dropout < 0.0 || dropout >= 1.0) throw ArgumentError("label dropout must lie in [0, 1)");
    const auto& xr = grid.range(0);
    const auto& yr = grid.range(1);
    if (!scene.contains(xr.min, yr.min) || !scene.contains(xr.max, yr.max)) {
        throw ArgumentError("grid ROI extends beyond the scene extent");
    }
    ElevationMap map(grid.nx(), grid.ny());
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
        for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
            const std::size_t cell = ix * grid.ny() + iy;
            map.values[cell] = static_cast<float>(scene.elevation(grid.center(0, ix), grid.center(1, iy)));
            if (dropout > 0.0 && 0.5 * (detail::hash_noise(seed, 0xD809, cell, 0) + 1.0) < dropout) {
                map.mask[cell] = 0;
            }
        }
    }
    return map;
}

namespace {

constexpr double kMarchStep = 0.02;  // meters along the ray
constexpr double kNearDepth = 0.05;
constexpr double kFarDepth = 200.0;

// Interval of ray depths d (camera-frame z) with origin + d * dir inside
// lo <= coord <= hi on one axis.
bool clip_axis(double origin, double dir, double lo, double hi, double& t0, double& t1) {
    if (std::abs(dir) < 1e-15) return origin >= lo && origin <= hi;
    double a = (lo - origin) / dir;
    double b = (hi - origin) / dir;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    return t0 <= t1;
}

// Depth of the first surface crossing along a ray, or a negative value on miss.
double cast_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir, const AxisRange& zb) {
    double t0 = kNearDepth, t1 = kFarDepth;
    if (!clip_axis(origin[0], dir[0], scene.x_extent.min, scene.x_extent.max, t0, t1)) return -1.0;
    if (!clip_axis(origin[1], dir[1], scene.y_extent.min, scene.y_extent.max, t0, t1)) return -1.0;
    if (!clip_axis(origin[2], dir[2], zb.min, zb.max, t0, t1)) return -1.0;

    auto above = [&](double d) {
        return origin[2] + d * dir[2] - scene.elevation(origin[0] + d * dir[0], origin[1] + d * dir[1]);
    };
    if (above(t0) <= 0.0) return -1.0;  // starts under the surface

    const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    const double step = kMarchStep / len;
    double prev = t0;
    for (double d = t0 + step;; d += step) {
        const double cur = std::min(d, t1);
        if (above(cur) <= 0.0) {
            double lo = prev, hi = cur;
            while (hi - lo > 1e-7) {
                const double mid = 0.5 * (lo + hi);
                (above(mid) > 0.0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        if (cur >= t1) return -1.0;
        prev = cur;
    }
}

}  // namespace

DepthImage render_depth(const SceneSpec& scene, const Rig& rig, std::size_t stride) {
    if (stride == 0) throw ArgumentError("render stride must be positive");
    const auto& k = rig.intrinsics;
    k.validate();
    rig.extrinsics.validate();
    const std::size_t h = static_cast<std::size_t>(k.height) / stride;
    const std::size_t w = static_cast<std::size_t>(k.width) / stride;
    DepthImage out{Tensor({h, w}), std::vector<std::uint8_t>(h * w, 0)};
    const Vec3 origin = rig.extrinsics.camera_center();
    const AxisRange zb = scene.elevation_bounds();
    const double s = static_cast<double>(stride);

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t row = 0; row < static_cast<std::ptrdiff_t>(h); ++row) {
        for (std::size_t col = 0; col < w; ++col) {
            const double u = (static_cast<double>(col) + 0.5) * s;
            const double v = (static_cast<double>(row) + 0.5) * s;
            const double d = cast_ray(scene, origin, pixel_ray(u, v, k, rig.extrinsics), zb);
            const std::size_t px = static_cast<std::size_t>(row) * w + col;
            if (d > 0.0) {
                out.depth[px] = static_cast<float>(d);
                out.mask[px] = 1;
            }
        }
    }
    return out;
}

Tensor depth_distribution(const DepthImage& depth, const DepthBinSpec& spec, DepthEncoding encoding) {
    spec.validate();
    const std::size_t h = depth.depth.dim(0), w = depth.depth.dim(1);
    Tensor dist({h, w, spec.bins});
    for (std::size_t px = 0; px < h * w; ++px) {
        if (!depth.mask[px]) continue;
        float* row = dist.data() + px * spec.bins;
        const double d = depth.depth[px];
        if (encoding == DepthEncoding::OneHot) {
            row[spec.nearest(d)] = 1.0f;
            continue;
        }
        const double c = std::clamp(spec.coordinate(d), 0.0, static_cast<double>(spec.bins - 1));
        const auto k0 = static_cast<std::size_t>(std::floor(c));
        const double frac = c - static_cast<double>(k0);
        if (k0 + 1 < spec.bins) {
            row[k0] = static_cast<float>(1.0 - frac);
            row[k0 + 1] = static_cast<float>(frac);
        } else {
            row[k0] = 1.0f;
        }
    }
    return dist;
}

ClassTargets depth_targets(const DepthImage& depth, const DepthBinSpec& spec) {
    spec.validate();
    ClassTargets t;
    t.index.assign(depth.depth.size(), kIgnoreIndex);
    t.mask.assign(depth.depth.size(), 0);
    for (std::size_t px = 0; px < depth.depth.size(); ++px) {
        const double d = depth.depth[px];
        if (!depth.mask[px] || d < spec.d_min || d > spec.d_max) continue;
        t.index[px] = static_cast<std::int32_t>(spec.nearest(d));
        t.mask[px] = 1;
    }
    return t;
}

namespace {

struct TextureWave {
    double kx, ky, phase;
};

std::vector<TextureWave> texture_waves(std::uint64_t seed, std::size_t count) {
    detail::Rng rng(detail::splitmix64(seed ^ 0x7E47u));
    std::vector<TextureWave> waves(count);
    for (auto& wv : waves) {
        const double freq = rng.uniform(0.5, 2.0);  // cycles per meter
        const double dir = rng.uniform(0.0, std::numbers::pi);
        wv = {2 * std::numbers::pi * freq * std::cos(dir), 2 * std::numbers::pi * freq * std::sin(dir),
              rng.uniform(0.0, 2 * std::numbers::pi)};
    }
    return waves;
}

const Vec3 kLight = [] {
    const double n = std::sqrt(0.3 * 0.3 + 0.5 * 0.5 + 0.8 * 0.8);
    return Vec3{0.3 / n, -0.5 / n, 0.8 / n};
}();

double shading(const SceneSpec& scene, double x, double y) {
    const Vec3 n = scene.normal(x, y);
    return std::max(0.0, n[0] * kLight[0] + n[1] * kLight[1] + n[2] * kLight[2]);
}

// Fills a channel-last (h, w, C) map by casting one ray per sample center.
template <typename Shade>
Tensor shade_surface(const SceneSpec& scene, const Rig& rig, std::size_t stride, std::size_t channels, Shade&& shade) {
    const auto& k = rig.intrinsics;
    k.validate();
    rig.extrinsics.validate();
    const std::size_t h = static_cast<std::size_t>(k.height) / stride;
    const std::size_t w = static_cast<std::size_t>(k.width) / stride;
    Tensor out({h, w, channels});
    const Vec3 origin = rig.extrinsics.camera_center();
    const AxisRange zb = scene.elevation_bounds();
    const double s = static_cast<double>(stride);

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t row = 0; row < static_cast<std::ptrdiff_t>(h); ++row) {
        for (std::size_t col = 0; col < w; ++col) {
            const double u = (static_cast<double>(col) + 0.5) * s;
            const double v = (static_cast<double>(row) + 0.5) * s;
            const Vec3 dir = pixel_ray(u, v, k, rig.extrinsics);
            const double d = cast_ray(scene, origin, dir, zb);
            if (d <= 0.0) continue;
            const std::size_t px = static_cast<std::size_t>(row) * w + col;
            shade(origin[0] + d * dir[0], origin[1] + d * dir[1], px, out.data() + px * channels);
        }
    }
    return out;
}

}  // namespace

Tensor render_features(const SceneSpec& scene, const Rig& rig, std::size_t stride, const FeatureOptions& options) {
    if (stride == 0) throw ArgumentError("feature stride must be positive");
    if (options.channels < 2) throw ArgumentError("synthetic features need at least 2 channels");
    const std::size_t c = options.channels;
    const auto waves = texture_waves(options.seed, c - 2);
    return shade_surface(scene, rig, stride, c, [&](double x, double y, std::size_t px, float* f) {
        f[0] = 1.0f;
        f[1] = static_cast<float>(shading(scene, x, y));
        for (std::size_t ch = 2; ch < c; ++ch) {
            const auto& wv = waves[ch - 2];
            f[ch] = options.texture ? static_cast<float>(std::sin(wv.kx * x + wv.ky * y + wv.phase)) : 0.0f;
        }
        if (options.noise > 0.0) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                f[ch] += static_cast<float>(
                    options.noise * detail::hash_noise(options.seed, (std::uint64_t{options.camera_id} << 32) | stride, px, ch));
            }
        }
    });
}

Tensor render_image(const SceneSpec& scene, const Rig& rig, const FeatureOptions& options) {
    const auto waves = texture_waves(options.seed, 2);
    return shade_surface(scene, rig, 1, 3, [&](double x, double y, std::size_t px, float* f) {
        f[0] = static_cast<float>(shading(scene, x, y));
        for (int ch = 1; ch < 3; ++ch) {
            const auto& wv = waves[static_cast<std::size_t>(ch - 1)];
            f[ch] = options.texture ? static_cast<float>(0.5 + 0.5 * std::sin(wv.kx * x + wv.ky * y + wv.phase)) : 0.5f;
        }
        if (options.noise > 0.0) {
            for (int ch = 0; ch < 3; ++ch) {
                f[ch] += static_cast<float>(options.noise *
                                            detail::hash_noise(options.seed, (std::uint64_t{options.camera_id} << 32) | 1u,
                                                               px, static_cast<std::uint64_t>(ch)));
            }
        }
    });
}

Rig CameraMount::left() const {
    return {intrinsics, road_camera_extrinsics({-0.5 * baseline, 0.0, height}, pitch)};
}

Rig CameraMount::right() const {
    return {intrinsics, road_camera_extrinsics({0.5 * baseline, 0.0, height}, pitch)};
}

}  // namespace rsr
