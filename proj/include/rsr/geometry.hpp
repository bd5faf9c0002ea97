#pragma once

#include <array>
#include <cstddef>

namespace rsr {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

Vec3 mat_vec(const Mat3& m, const Vec3& v);
Vec3 mat_t_vec(const Mat3& m, const Vec3& v);
double det(const Mat3& m);

struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const;
};

/// World-to-camera rigid transform: p_cam = rotation * p_world + translation.
struct CameraExtrinsics {
    Mat3 rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
    Vec3 translation{0, 0, 0};

    void validate() const;
    Vec3 camera_center() const;
};

struct Rig {
    CameraIntrinsics intrinsics;
    CameraExtrinsics extrinsics;
};

// World frame: X right, Y forward, Z up. Camera frame: x right, y down, z forward.
// Maps (x, y, z)_world onto (x, -z, y)_camera with the camera at the origin.
CameraExtrinsics default_extrinsics();

/// Camera at `position` (world frame) looking along +Y and pitched down by
/// `pitch` radians.
CameraExtrinsics road_camera_extrinsics(const Vec3& position, double pitch);

struct AxisRange {
    double min = 0.0;
    double max = 0.0;
};

/// Regular voxel partition of the road region of interest.
class VoxelGrid {
public:
    VoxelGrid() = default;

    std::size_t nx() const noexcept { return counts_[0]; }
    std::size_t ny() const noexcept { return counts_[1]; }
    std::size_t nz() const noexcept { return counts_[2]; }
    std::size_t count(int axis) const { return counts_.at(static_cast<std::size_t>(axis)); }
    std::size_t voxel_count() const noexcept { return counts_[0] * counts_[1] * counts_[2]; }
    std::size_t column_count() const noexcept { return counts_[0] * counts_[1]; }

    const AxisRange& range(int axis) const { return ranges_.at(static_cast<std::size_t>(axis)); }
    double resolution(int axis) const { return res_.at(static_cast<std::size_t>(axis)); }

    /// Center of voxel `k` along `axis`: min + (k + 0.5) * res.
    double center(int axis, std::size_t k) const;
    Vec3 voxel_center(std::size_t ix, std::size_t iy, std::size_t iz) const;
    Vec3 voxel_center(std::size_t flat) const;

    // Flat voxel order is (x, y, z) row-major, z fastest.
    std::size_t flat_index(std::size_t ix, std::size_t iy, std::size_t iz) const noexcept {
        return (ix * counts_[1] + iy) * counts_[2] + iz;
    }

private:
    friend VoxelGrid make_grid(const std::array<AxisRange, 3>&, const std::array<double, 3>&);

    std::array<AxisRange, 3> ranges_{};
    std::array<double, 3> res_{};
    std::array<std::size_t, 3> counts_{};
};

/// Counts are floor(extent / res + 0.5) per axis.
VoxelGrid make_grid(const std::array<AxisRange, 3>& ranges, const std::array<double, 3>& resolutions);

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
    double d = 0.0;  // camera-frame z, not ray length
};

inline constexpr double kMinProjectionDepth = 1e-6;

/// Pinhole projection of a world point. Throws PointBehindCameraError when
/// the camera-frame depth is at most kMinProjectionDepth.
PixelPoint project_point(const Vec3& p_world, const CameraIntrinsics& k, const CameraExtrinsics& t);

/// Inverse of project_point for a known depth.
Vec3 back_project(const PixelPoint& p, const CameraIntrinsics& k, const CameraExtrinsics& t);

/// World-frame direction of the ray through pixel (u, v), scaled so that its
/// camera-frame z component is 1 (marching by depth d gives center + d * dir).
Vec3 pixel_ray(double u, double v, const CameraIntrinsics& k, const CameraExtrinsics& t);

}  // namespace rsr
