#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsr/discretization.hpp"
#include "rsr/tensor.hpp"

namespace rsr {

enum class ScoreKind { Probabilities, Logits };

struct CrossEntropy {
    double loss = 0.0;
    std::size_t cells = 0;
    bool empty = false;  // no masked cell contributed; loss is 0
};

/// Mean of -log p(target) over cells whose mask is set. `scores` has the class
/// axis last; every other axis enumerates cells in the order of `targets`.
CrossEntropy masked_ce(const Tensor& scores, std::span<const std::int32_t> targets,
                       std::span<const std::uint8_t> mask, ScoreKind kind = ScoreKind::Probabilities);

struct ClassTargets {
    std::vector<std::int32_t> index;
    std::vector<std::uint8_t> mask;
};

struct SupervisionBatch {
    ClassTargets elevation;
    std::vector<ClassTargets> depth;  // one per scale
    double beta = 0.25;
};

struct LossBreakdown {
    double total = 0.0;
    double elevation = 0.0;
    double depth = 0.0;  // mean over scales
    std::vector<double> depth_per_scale;
    bool elevation_empty = false;
};

/// elevation + beta * mean(depth terms); scales are weighted equally.
double combine_losses(double elevation_ce, std::span<const double> depth_ces, double beta);

/// Masked cross-entropy objective over the elevation distribution and the
/// per-scale depth distributions (all given as probabilities).
LossBreakdown total_loss(const Tensor& e_prob, std::span<const Tensor> d_pre, const SupervisionBatch& batch);

struct Metrics {
    double abs_err_cm = 0.0;
    double rmse_cm = 0.0;
    double pct_gt_half_cm = 0.0;
    std::size_t n_cells = 0;
    bool empty = false;
};

/// Elevation errors in centimeters over cells valid in both maps.
Metrics metrics(const ElevationMap& pred, const ElevationMap& gt);

}  // namespace rsr
