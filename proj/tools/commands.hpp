#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsr/config.hpp"
#include "rsr/scene_io.hpp"
#include "rsr/stereo.hpp"

namespace rsr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Parses and dispatches `rsr <command> ...`; returns the process exit code.
int main(int argc, char** argv);

struct Timing {
    double median_ms = 0.0;
    double p95_ms = 0.0;
    std::vector<double> samples_ms;
};

Timing summarize(std::vector<double> samples_ms);

struct BenchOptions {
    int reps = 50;
    int warmup = 5;
    std::uint64_t seed = 0;
    bool include_reference = true;
};

/// Builds the LUTs once, then times the LUT gather against the on-the-fly
/// sampler on random features and depth distributions over all scales.
nlohmann::json bench_view_transform(const PipelineConfig& config, const BenchOptions& options);

struct PairedMetrics {
    Metrics mono;
    Metrics stereo;
};

/// Mono and stereo on one rendered scene with oracle feature/depth injection.
PairedMetrics evaluate_oracle(const SceneData& data, const PipelineConfig& config, const MonoWeights& mono,
                              const StereoWeights& stereo);

}  // namespace rsr::cli
