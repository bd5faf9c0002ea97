#pragma once

#include <cstdint>
#include <filesystem>

#include "rsr/config.hpp"
#include "rsr/mono.hpp"
#include "rsr/stereo.hpp"

namespace rsr {

// Toy head shapes: feature head 3 -> C_i -> C_i (3x3), depth head
// C_i -> C_i (3x3) -> C_d (1x1).
ImageHeads zero_heads(const PipelineConfig& config);
ImageHeads random_heads(const PipelineConfig& config, std::uint64_t seed);

// BEV encoder C*N_z -> hidden -> hidden -> N.
MonoWeights zero_mono_weights(const PipelineConfig& config, std::size_t hidden = 32);
MonoWeights random_mono_weights(const PipelineConfig& config, std::uint64_t seed, std::size_t hidden = 32);

StereoWeights zero_stereo_weights(const PipelineConfig& config);
StereoWeights random_stereo_weights(const PipelineConfig& config, std::uint64_t seed);

/// Hand-set weights that read elevation straight off the surface-presence
/// channel (channel 0 of every scale). With smoothing = 0 the vertical
/// profile p_j of that channel becomes logits -kappa * sum_j p_j (e - z_j)^2,
/// a bump on the profile's centroid. With smoothing = tau > 0 the logits are
/// kappa * sum_j p_j exp(-(e - z_j)^2 / (2 tau^2)), which peak at the mode of
/// the smoothed profile. Columns with no evidence stay uniform.
/// The stereo readout regresses over the coarse z levels of the grid, so it
/// gets its own, much softer gain; a sharp softmax there snaps to z centers.
struct ReadoutOptions {
    double kappa = 5000.0;
    double stereo_kappa = 200.0;
    double smoothing = 0.0;
    bool finest_only = false;  // read only the first (finest) scale
    bool with_heads = false;   // add random toy heads so images also run
    std::uint64_t seed = 0;
};

MonoWeights readout_mono_weights(const PipelineConfig& config, const ReadoutOptions& options = {});
StereoWeights readout_stereo_weights(const PipelineConfig& config, const ReadoutOptions& options = {});

// A weights directory holds manifest.json plus one tensor file per kernel.
void save_weights(const std::filesystem::path& dir, const MonoWeights& w);
void save_weights(const std::filesystem::path& dir, const StereoWeights& w);
MonoWeights load_mono_weights(const std::filesystem::path& dir, const PipelineConfig& config);
StereoWeights load_stereo_weights(const std::filesystem::path& dir, const PipelineConfig& config);

}  // namespace rsr
