#include "rsr/discretization.hpp"

#include <algorithm>
#include <cmath>

#include "rsr/errors.hpp"

namespace rsr {

BinMode parse_bin_mode(const std::string& name) {
    if (name == "shuttle" || name == "sd") return BinMode::Shuttle;
    if (name == "uniform" || name == "ud") return BinMode::Uniform;
    throw ArgumentError("unknown bin mode '" + name + "' (expected shuttle or uniform)");
}

std::string to_string(BinMode m) { return m == BinMode::Shuttle ? "shuttle" : "uniform"; }

namespace {

void fill_centers(BinSpec& spec) {
    spec.centers.resize(spec.edges.size() - 1);
    for (std::size_t i = 0; i + 1 < spec.edges.size(); ++i) {
        spec.centers[i] = 0.5 * (spec.edges[i] + spec.edges[i + 1]);
    }
}

}  // namespace

BinSpec shuttle_bins(int n, double e_bound, double alpha) {
    if (n < 2 || n % 2 != 0) throw ArgumentError("shuttle bins need an even count of at least 2, got " + std::to_string(n));
    if (!(e_bound > 0.0)) throw ArgumentError("elevation bound must be positive");
    if (!(alpha > 0.0)) throw ArgumentError("shape exponent must be positive");

    const int half = n / 2;
    BinSpec spec;
    spec.e_bound = e_bound;
    spec.alpha = alpha;
    spec.mode = BinMode::Shuttle;
    spec.edges.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        double b = 0.0;
        if (i < half) {
            b = std::pow(static_cast<double>(half - i) / half, alpha) * e_bound;
        } else if (i > half) {
            b = -std::pow(static_cast<double>(i - half) / half, alpha) * e_bound;
        }
        spec.edges[static_cast<std::size_t>(i)] = b;
    }
    fill_centers(spec);
    return spec;
}

BinSpec uniform_bins(int n, double e_bound) {
    if (n < 1) throw ArgumentError("need at least one elevation bin");
    if (!(e_bound > 0.0)) throw ArgumentError("elevation bound must be positive");
    BinSpec spec;
    spec.e_bound = e_bound;
    spec.alpha = 1.0;
    spec.mode = BinMode::Uniform;
    spec.edges.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        // Mirror around the middle so the edge set is exactly antisymmetric.
        const int j = n - 2 * i;
        spec.edges[static_cast<std::size_t>(i)] = static_cast<double>(j) / n * e_bound;
    }
    fill_centers(spec);
    return spec;
}

Tensor ElevationMap::as_tensor() const { return Tensor({nx, ny}, values); }

Tensor ElevationMap::mask_tensor() const {
    Tensor t({nx, ny});
    for (std::size_t i = 0; i < mask.size(); ++i) t[i] = mask[i] ? 1.0f : 0.0f;
    return t;
}

ElevationMap ElevationMap::from_tensor(const Tensor& values, const Tensor* mask) {
    if (values.rank() != 2) throw ArgumentError("elevation map tensor must be (N_x, N_y)");
    ElevationMap m(values.dim(0), values.dim(1));
    std::copy(values.values().begin(), values.values().end(), m.values.begin());
    if (mask) {
        if (mask->shape() != values.shape()) throw ArgumentError("elevation mask shape mismatch");
        for (std::size_t i = 0; i < m.mask.size(); ++i) m.mask[i] = (*mask)[i] > 0.5f ? 1 : 0;
    }
    return m;
}

ElevationMap regress_elevation(const Tensor& e_prob, const BinSpec& bins) {
    if (e_prob.rank() != 3 || e_prob.dim(2) != bins.count()) {
        throw ArgumentError("elevation probabilities " + shape_to_string(e_prob.shape()) + " do not match " +
                            std::to_string(bins.count()) + " bins");
    }
    const std::size_t n = bins.count();
    ElevationMap out(e_prob.dim(0), e_prob.dim(1));
    const float lo = static_cast<float>(bins.min_center());
    const float hi = static_cast<float>(bins.max_center());
    for (std::size_t cell = 0; cell < out.size(); ++cell) {
        const float* p = e_prob.data() + cell * n;
        double total = 0.0;
        double expect = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] < 0.0f) throw ArgumentError("elevation probabilities must be non-negative");
            total += p[i];
            expect += bins.centers[i] * p[i];
        }
        if (std::abs(total - 1.0) > 1e-5) {
            throw ArgumentError("elevation probabilities at cell " + std::to_string(cell) + " sum to " +
                                std::to_string(total));
        }
        out.values[cell] = std::clamp(static_cast<float>(expect), lo, hi);
    }
    return out;
}

std::vector<std::int32_t> elevation_to_target(const ElevationMap& gt, const BinSpec& bins) {
    std::vector<std::int32_t> target(gt.size(), kIgnoreIndex);
    for (std::size_t cell = 0; cell < gt.size(); ++cell) {
        if (!gt.mask[cell]) continue;
        const double e = gt.values[cell];
        std::size_t best = 0;
        double best_dist = std::abs(e - bins.centers[0]);
        for (std::size_t i = 1; i < bins.count(); ++i) {
            const double dist = std::abs(e - bins.centers[i]);
            if (dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
        target[cell] = static_cast<std::int32_t>(best);
    }
    return target;
}

}  // namespace rsr
