#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rsr/tensor.hpp"

namespace rsr {

enum class BinMode { Shuttle, Uniform };

BinMode parse_bin_mode(const std::string& name);
std::string to_string(BinMode m);

/// Elevation bins. Edges run from +e_bound down to -e_bound; centers are the
/// midpoints of consecutive edges, so index 0 is the highest bin.
struct BinSpec {
    std::vector<double> edges;    // N + 1
    std::vector<double> centers;  // N
    double e_bound = 0.0;
    double alpha = 1.0;
    BinMode mode = BinMode::Shuttle;

    std::size_t count() const noexcept { return centers.size(); }
    double min_center() const noexcept { return centers.back(); }
    double max_center() const noexcept { return centers.front(); }
};

/// Bins that are dense around zero elevation and widen towards +-e_bound:
/// edge i is ((N' - i) / N')^alpha * e_bound above zero and the mirrored
/// value below it, with N' = N / 2. The middle edge is exactly 0.
BinSpec shuttle_bins(int n, double e_bound, double alpha);

BinSpec uniform_bins(int n, double e_bound);

/// Per-column elevation grid in meters with a validity mask.
struct ElevationMap {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> mask;

    ElevationMap() = default;
    ElevationMap(std::size_t nx_, std::size_t ny_, float fill = 0.0f)
        : nx(nx_), ny(ny_), values(nx_ * ny_, fill), mask(nx_ * ny_, 1) {}

    std::size_t size() const noexcept { return values.size(); }
    float& at(std::size_t ix, std::size_t iy) { return values[ix * ny + iy]; }
    float at(std::size_t ix, std::size_t iy) const { return values[ix * ny + iy]; }
    Tensor as_tensor() const;
    Tensor mask_tensor() const;
    static ElevationMap from_tensor(const Tensor& values, const Tensor* mask = nullptr);
};

/// Expected elevation under per-column bin probabilities (N_x, N_y, N).
ElevationMap regress_elevation(const Tensor& e_prob, const BinSpec& bins);

inline constexpr std::int32_t kIgnoreIndex = -1;

/// Nearest bin center per valid cell (ties go to the lower index); values
/// beyond the bin range clamp to the extreme bins; masked cells get kIgnoreIndex.
std::vector<std::int32_t> elevation_to_target(const ElevationMap& gt, const BinSpec& bins);

}  // namespace rsr
