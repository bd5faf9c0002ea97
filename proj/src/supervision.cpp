#include "rsr/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsr/errors.hpp"

namespace rsr {

namespace {

constexpr double kProbFloor = 1e-30;

}  // namespace

CrossEntropy masked_ce(const Tensor& scores, std::span<const std::int32_t> targets,
                       std::span<const std::uint8_t> mask, ScoreKind kind) {
    const std::size_t classes = scores.shape().back();
    const std::size_t cells = scores.size() / classes;
    if (targets.size() != cells || mask.size() != cells) {
        throw ArgumentError("cross-entropy targets/mask cover " + std::to_string(targets.size()) + "/" +
                            std::to_string(mask.size()) + " cells, scores have " + std::to_string(cells));
    }
    CrossEntropy out;
    double sum = 0.0;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const std::int32_t t = targets[cell];
        if (!mask[cell] || t == kIgnoreIndex) continue;
        if (t < 0 || static_cast<std::size_t>(t) >= classes) {
            throw ArgumentError("target class " + std::to_string(t) + " out of range [0, " + std::to_string(classes) +
                                ") at cell " + std::to_string(cell));
        }
        const float* s = scores.data() + cell * classes;
        double nll = 0.0;
        if (kind == ScoreKind::Probabilities) {
            nll = -std::log(std::max(static_cast<double>(s[t]), kProbFloor));
        } else {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < classes; ++k) m = std::max(m, static_cast<double>(s[k]));
            double z = 0.0;
            for (std::size_t k = 0; k < classes; ++k) z += std::exp(s[k] - m);
            nll = -(s[t] - m - std::log(z));
        }
        sum += nll;
        ++out.cells;
    }
    out.empty = out.cells == 0;
    out.loss = out.empty ? 0.0 : sum / static_cast<double>(out.cells);
    return out;
}

double combine_losses(double elevation_ce, std::span<const double> depth_ces, double beta) {
    double depth = 0.0;
    for (double d : depth_ces) depth += d;
    if (!depth_ces.empty()) depth /= static_cast<double>(depth_ces.size());
    return elevation_ce + beta * depth;
}

LossBreakdown total_loss(const Tensor& e_prob, std::span<const Tensor> d_pre, const SupervisionBatch& batch) {
    if (batch.beta < 0.0) throw ArgumentError("depth loss weight must be non-negative");
    if (d_pre.size() != batch.depth.size()) {
        throw ArgumentError("got " + std::to_string(d_pre.size()) + " depth predictions but " +
                            std::to_string(batch.depth.size()) + " depth targets");
    }
    LossBreakdown out;
    const CrossEntropy elev = masked_ce(e_prob, batch.elevation.index, batch.elevation.mask);
    out.elevation = elev.loss;
    out.elevation_empty = elev.empty;
    for (std::size_t s = 0; s < d_pre.size(); ++s) {
        out.depth_per_scale.push_back(masked_ce(d_pre[s], batch.depth[s].index, batch.depth[s].mask).loss);
    }
    out.depth = combine_losses(0.0, out.depth_per_scale, 1.0);
    out.total = combine_losses(out.elevation, out.depth_per_scale, batch.beta);
    return out;
}

Metrics metrics(const ElevationMap& pred, const ElevationMap& gt) {
    if (pred.nx != gt.nx || pred.ny != gt.ny) throw ArgumentError("elevation maps differ in size");
    Metrics m;
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    std::size_t over = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!pred.mask[i] || !gt.mask[i]) continue;
        const double err_cm = (static_cast<double>(gt.values[i]) - static_cast<double>(pred.values[i])) * 100.0;
        abs_sum += std::abs(err_cm);
        sq_sum += err_cm * err_cm;
        if (std::abs(err_cm) > 0.5) ++over;
        ++m.n_cells;
    }
    if (m.n_cells == 0) {
        m.empty = true;
        return m;
    }
    const double n = static_cast<double>(m.n_cells);
    m.abs_err_cm = abs_sum / n;
    m.rmse_cm = std::sqrt(sq_sum / n);
    m.pct_gt_half_cm = 100.0 * static_cast<double>(over) / n;
    return m;
}

}  // namespace rsr
