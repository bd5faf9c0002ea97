#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsr/discretization.hpp"
#include "rsr/geometry.hpp"
#include "rsr/supervision.hpp"
#include "rsr/tensor.hpp"
#include "rsr/view_transform.hpp"

namespace rsr {

enum class PrimitiveKind { Bump, Pothole, Crack };

PrimitiveKind parse_primitive_kind(const std::string& name);
std::string to_string(PrimitiveKind k);

/// Smooth radial surface feature. Amplitude is a positive magnitude; potholes
/// and cracks dent the surface, bumps raise it. Cracks are stretched 3x along
/// `angle` (radians from +X).
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::Bump;
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.2;
    double amplitude = 0.02;
    double angle = 0.0;

    double height(double x, double y) const;
};

/// Procedural road surface: a tilted plane plus raised-cosine primitives.
struct SceneSpec {
    std::uint64_t seed = 0;
    double pitch = 0.0;  // slope along +Y, radians
    double roll = 0.0;   // slope along +X, radians
    AxisRange x_extent{-1.5, 1.5};
    AxisRange y_extent{1.0, 9.0};
    double e_bound = 0.2;
    std::vector<Primitive> primitives;

    void validate() const;
    bool contains(double x, double y) const;
    double elevation(double x, double y) const;
    /// Upward unit normal from central differences.
    Vec3 normal(double x, double y) const;
    /// Conservative [lowest, highest] elevation over the extent.
    AxisRange elevation_bounds() const;
};

struct SceneParams {
    int bumps = 0;
    int potholes = 0;
    int cracks = 0;
    double amplitude_min = 0.01;
    double amplitude_max = 0.05;
    double radius_min = 0.15;
    double radius_max = 0.35;
    double max_tilt = 0.0;  // radians, applied to pitch and roll
    AxisRange x_extent{-1.5, 1.5};
    AxisRange y_extent{1.0, 9.0};
    // Primitive centers are drawn from this box (the grid ROI).
    AxisRange x_roi{-1.0, 0.9};
    AxisRange y_roi{2.2, 7.1};
    double e_bound = 0.2;
};

/// Deterministic in (seed, params).
SceneSpec gen_scene(std::uint64_t seed, const SceneParams& params);

/// Surface height at every voxel-column center. With dropout > 0, each cell
/// is masked out with that probability (seeded) to mimic sparse labels.
ElevationMap gt_elevation_map(const SceneSpec& scene, const VoxelGrid& grid, double dropout = 0.0,
                              std::uint64_t seed = 0);

/// Per-pixel camera-frame depth; mask is 0 where the ray misses the surface.
struct DepthImage {
    Tensor depth;  // (h, w)
    std::vector<std::uint8_t> mask;
};

/// Ray-casts the camera-frame depth of the surface at pixel centers of the
/// full image (stride 1) or of a feature map (stride s: centers at (k + 0.5) s).
DepthImage render_depth(const SceneSpec& scene, const Rig& rig, std::size_t stride = 1);

enum class DepthEncoding {
    OneHot,  // all mass on the nearest bin
    Linear,  // split between the two bracketing bin centers
};

/// Per-pixel depth distribution (h, w, C_d) from rendered depth. Masked
/// pixels get an all-zero row.
Tensor depth_distribution(const DepthImage& depth, const DepthBinSpec& spec, DepthEncoding encoding);

/// Nearest-bin class targets for the depth cross-entropy term. Pixels whose
/// depth misses the surface or falls outside the bin range are masked.
ClassTargets depth_targets(const DepthImage& depth, const DepthBinSpec& spec);

struct FeatureOptions {
    std::size_t channels = 8;
    bool texture = true;
    double noise = 0.01;
    std::uint64_t seed = 0;
    std::uint32_t camera_id = 0;  // decorrelates noise between views
};

/// Synthetic backbone features at one stride: channel 0 is 1 on surface hits,
/// channel 1 is Lambertian shading, the rest are world-anchored texture
/// waves, plus seeded per-pixel noise. Misses are all-zero.
Tensor render_features(const SceneSpec& scene, const Rig& rig, std::size_t stride, const FeatureOptions& options);

/// Full-resolution 3-channel image (shading and two texture waves) for the
/// toy feature heads.
Tensor render_image(const SceneSpec& scene, const Rig& rig, const FeatureOptions& options);

/// Camera mounting for a forward-looking road camera pair.
struct CameraMount {
    CameraIntrinsics intrinsics;
    double height = 1.5;     // meters above Z = 0
    double pitch = 0.32;     // radians, downward
    double baseline = 0.12;  // meters, left camera at -baseline / 2

    Rig left() const;
    Rig right() const;
};

}  // namespace rsr
