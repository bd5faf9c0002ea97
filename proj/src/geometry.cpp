#include "rsr/geometry.hpp"

#include <cmath>
#include <string>

#include "rsr/errors.hpp"

namespace rsr {

Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Vec3 mat_t_vec(const Mat3& m, const Vec3& v) {
    return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
            m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
            m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
}

double det(const Mat3& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ArgumentError("focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ArgumentError("image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        throw ArgumentError("principal point must lie inside the image");
    }
}

void CameraExtrinsics::validate() const {
    const auto& r = rotation;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += r[3 * i + k] * r[3 * j + k];
            if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-6) throw ArgumentError("rotation is not orthonormal");
        }
    }
    if (std::abs(det(r) - 1.0) > 1e-6) throw ArgumentError("rotation determinant must be +1");
    for (double v : translation) {
        if (!std::isfinite(v)) throw ArgumentError("translation must be finite");
    }
}

Vec3 CameraExtrinsics::camera_center() const {
    const Vec3 c = mat_t_vec(rotation, translation);
    return {-c[0], -c[1], -c[2]};
}

CameraExtrinsics default_extrinsics() {
    CameraExtrinsics t;
    t.rotation = {1, 0, 0, 0, 0, -1, 0, 1, 0};
    return t;
}

CameraExtrinsics road_camera_extrinsics(const Vec3& position, double pitch) {
    const double c = std::cos(pitch);
    const double s = std::sin(pitch);
    // Rows are the camera axes in world coordinates: right, down, forward.
    CameraExtrinsics t;
    t.rotation = {1, 0, 0, 0, -s, -c, 0, c, -s};
    const Vec3 rc = mat_vec(t.rotation, position);
    t.translation = {-rc[0], -rc[1], -rc[2]};
    return t;
}

VoxelGrid make_grid(const std::array<AxisRange, 3>& ranges, const std::array<double, 3>& resolutions) {
    static constexpr const char* kAxis[3] = {"x", "y", "z"};
    VoxelGrid g;
    for (std::size_t a = 0; a < 3; ++a) {
        const auto& r = ranges[a];
        if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.max > r.min)) {
            throw ArgumentError(std::string("degenerate ") + kAxis[a] + " range");
        }
        if (!(resolutions[a] > 0.0) || !std::isfinite(resolutions[a])) {
            throw ArgumentError(std::string(kAxis[a]) + " resolution must be positive");
        }
        const double n = std::floor((r.max - r.min) / resolutions[a] + 0.5);
        if (n < 1.0) throw ArgumentError(std::string(kAxis[a]) + " range is smaller than half a voxel");
        g.ranges_[a] = r;
        g.res_[a] = resolutions[a];
        g.counts_[a] = static_cast<std::size_t>(n);
    }
    return g;
}

double VoxelGrid::center(int axis, std::size_t k) const {
    const auto a = static_cast<std::size_t>(axis);
    return ranges_.at(a).min + (static_cast<double>(k) + 0.5) * res_[a];
}

Vec3 VoxelGrid::voxel_center(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return {center(0, ix), center(1, iy), center(2, iz)};
}

Vec3 VoxelGrid::voxel_center(std::size_t flat) const {
    const std::size_t iz = flat % counts_[2];
    const std::size_t iy = (flat / counts_[2]) % counts_[1];
    const std::size_t ix = flat / (counts_[2] * counts_[1]);
    return voxel_center(ix, iy, iz);
}

PixelPoint project_point(const Vec3& p_world, const CameraIntrinsics& k, const CameraExtrinsics& t) {
    const Vec3 r = mat_vec(t.rotation, p_world);
    const Vec3 pc{r[0] + t.translation[0], r[1] + t.translation[1], r[2] + t.translation[2]};
    const double d = pc[2];
    if (!(d > kMinProjectionDepth)) throw PointBehindCameraError("point is behind the camera");
    return {k.fx * pc[0] / d + k.cx, k.fy * pc[1] / d + k.cy, d};
}

Vec3 back_project(const PixelPoint& p, const CameraIntrinsics& k, const CameraExtrinsics& t) {
    const Vec3 pc{(p.u - k.cx) / k.fx * p.d, (p.v - k.cy) / k.fy * p.d, p.d};
    const Vec3 shifted{pc[0] - t.translation[0], pc[1] - t.translation[1], pc[2] - t.translation[2]};
    return mat_t_vec(t.rotation, shifted);
}

Vec3 pixel_ray(double u, double v, const CameraIntrinsics& k, const CameraExtrinsics& t) {
    return mat_t_vec(t.rotation, {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0});
}

}  // namespace rsr
