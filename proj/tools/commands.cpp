#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "rsr/errors.hpp"
#include "rsr/parallel.hpp"
#include "rsr/tensor_io.hpp"
#include "rsr/weights.hpp"

namespace rsr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Timing summarize(std::vector<double> samples_ms) {
    if (samples_ms.empty()) throw ArgumentError("no timing samples");
    Timing t;
    t.samples_ms = samples_ms;
    std::sort(samples_ms.begin(), samples_ms.end());
    const std::size_t n = samples_ms.size();
    t.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    t.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
    return t;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Tensor random_map(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed, bool normalize) {
    Tensor t({h, w, c});
    std::uint64_t state = seed * 0x9E3779B97F4A7C15ull + 1;
    for (float& v : t.values()) {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        v = static_cast<float>(static_cast<double>(state >> 11) * 0x1.0p-53);
    }
    if (normalize) {
        for (std::size_t p = 0; p < h * w; ++p) {
            double s = 0.0;
            for (std::size_t k = 0; k < c; ++k) s += t[p * c + k];
            for (std::size_t k = 0; k < c; ++k) t[p * c + k] = static_cast<float>(t[p * c + k] / s);
        }
    }
    return t;
}

json timing_json(const Timing& t) { return {{"median_ms", t.median_ms}, {"p95_ms", t.p95_ms}}; }

}  // namespace

json bench_view_transform(const PipelineConfig& config, const BenchOptions& options) {
    if (options.reps < 1 || options.warmup < 0) throw ArgumentError("reps must be >= 1 and warmup >= 0");
    const Rig rig = config.camera.left();
    const VoxelGrid grid = config.grid.make();

    auto t0 = Clock::now();
    std::vector<ProjectionLUT> luts;
    for (std::size_t s : config.scales) {
        luts.push_back(build_lut(grid, rig.intrinsics, rig.extrinsics, FeatureDims::for_image(rig.intrinsics, s),
                                 config.depth));
    }
    const double build_ms = elapsed_ms(t0);

    std::vector<Tensor> feats, depth;
    for (std::size_t s = 0; s < luts.size(); ++s) {
        const FeatureDims& f = luts[s].feat;
        feats.push_back(random_map(f.height, f.width, config.feat_channels, options.seed * 31 + s, false));
        depth.push_back(random_map(f.height, f.width, config.depth.bins, options.seed * 31 + s + 7, true));
    }

    auto gather_all = [&] {
        std::vector<Tensor> out;
        for (std::size_t s = 0; s < luts.size(); ++s) out.push_back(gather_voxels(luts[s], feats[s], depth[s]));
        return out;
    };
    auto reference_all = [&] {
        std::vector<Tensor> out;
        for (std::size_t s = 0; s < luts.size(); ++s) {
            out.push_back(sample_voxels_reference(grid, rig.intrinsics, rig.extrinsics, luts[s].feat, config.depth,
                                                  feats[s], depth[s]));
        }
        return out;
    };
    auto time = [&](auto&& fn) {
        for (int i = 0; i < options.warmup; ++i) (void)fn();
        std::vector<double> samples;
        for (int i = 0; i < options.reps; ++i) {
            const auto start = Clock::now();
            (void)fn();
            samples.push_back(elapsed_ms(start));
        }
        return summarize(std::move(samples));
    };

    std::size_t valid = 0;
    for (const auto& l : luts) valid += l.valid_count();
    json report{
        {"profile", config.profile},
        {"grid", {grid.nx(), grid.ny(), grid.nz()}},
        {"voxels", grid.voxel_count()},
        {"valid_taps", valid},
        {"scales", config.scales},
        {"channels", config.feat_channels},
        {"depth_bins", config.depth.bins},
        {"threads", num_threads()},
        {"reps", options.reps},
        {"warmup", options.warmup},
        {"build_lut_ms", build_ms},
    };
    const Timing g = time(gather_all);
    report["gather"] = timing_json(g);
    if (options.include_reference) {
        const Timing r = time(reference_all);
        report["reference"] = timing_json(r);
        report["speedup"] = r.median_ms / g.median_ms;
        const auto a = gather_all();
        const auto b = reference_all();
        double diff = 0.0;
        for (std::size_t s = 0; s < a.size(); ++s) diff = std::max(diff, static_cast<double>(max_abs_diff(a[s], b[s])));
        report["max_abs_diff"] = diff;
    }
    return report;
}

PairedMetrics evaluate_oracle(const SceneData& data, const PipelineConfig& config, const MonoWeights& mono,
                              const StereoWeights& stereo) {
    PairedMetrics m;
    const MonoResult mr = run_mono(data.left.oracle_inputs(), mono, config, data.left.rig);
    m.mono = metrics(mr.elevation, data.gt);
    const StereoResult sr =
        run_stereo(data.left.oracle_inputs(), data.right.oracle_inputs(), stereo, config, data.left.rig,
                   data.right.rig);
    m.stereo = metrics(sr.elevation, data.gt);
    return m;
}

namespace {

PipelineConfig config_from(const std::string& path, const std::string& profile) {
    if (!path.empty()) return load_config(path);
    PipelineConfig c = PipelineConfig::named(profile);
    c.validate();
    return c;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// --- gen-scene ---

struct GenArgs {
    std::uint64_t seed = 0;
    int bumps = 3, potholes = 0, cracks = 0;
    double amplitude = -1.0, amplitude_min = -1.0, amplitude_max = -1.0;
    double tilt = 0.0, dropout = 0.0;
    std::string profile = "desk", config, out;
};

int cmd_gen_scene(const GenArgs& a) {
    const PipelineConfig config = config_from(a.config, a.profile);
    SceneParams p = scene_params_for(config);
    p.bumps = a.bumps;
    p.potholes = a.potholes;
    p.cracks = a.cracks;
    p.max_tilt = a.tilt;
    if (a.amplitude_min >= 0.0) p.amplitude_min = a.amplitude_min;
    if (a.amplitude_max >= 0.0) p.amplitude_max = a.amplitude_max;
    if (a.amplitude != -1.0) p.amplitude_min = p.amplitude_max = a.amplitude;
    const SceneSpec scene = gen_scene(a.seed, p);
    const SceneData data = run_stage("render", [&] { return render_scene(scene, config, a.dropout); });
    save_scene(a.out, data, config);
    std::cout << json{{"out", a.out}, {"primitives", scene.primitives.size()}, {"seed", a.seed}}.dump() << "\n";
    return kExitOk;
}

// --- run ---

struct RunArgs {
    std::string mode, config, scene, weights, out;
    std::string inputs = "oracle", sampler = "lut", attention = "full";
    bool dump_voxels = false;
};

ViewInputs inputs_for(const ViewData& v, const std::string& kind) {
    if (kind == "oracle") return v.oracle_inputs();
    if (kind == "image") return v.image_inputs();
    throw ArgumentError("--inputs must be oracle or image");
}

VoxelSampler parse_sampler(const std::string& s) {
    if (s == "lut") return VoxelSampler::Lut;
    if (s == "reference") return VoxelSampler::Reference;
    throw ArgumentError("--sampler must be lut or reference");
}

void write_elevation(const fs::path& out, const ElevationMap& e, float lo, float hi) {
    const Tensor t = e.as_tensor();
    save_tensor(out / "elevation", "elevation", t);
    write_pgm16(out / "elevation.pgm", t, lo, hi, e.mask);
}

int cmd_run(const RunArgs& a) {
    const fs::path scene_dir = a.scene;
    const PipelineConfig config = a.config.empty() ? load_config(scene_dir / "config.json") : load_config(a.config);
    const SceneData data = load_scene(scene_dir, config);
    const fs::path out = a.out;
    fs::create_directories(out);
    const float e = static_cast<float>(config.bins.e_bound);
    json summary{{"mode", a.mode}, {"inputs", a.inputs}, {"sampler", a.sampler}, {"threads", num_threads()}};

    if (a.mode == "mono") {
        const MonoWeights w = a.weights.empty() ? readout_mono_weights(config) : load_mono_weights(a.weights, config);
        const MonoResult r =
            run_mono(inputs_for(data.left, a.inputs), w, config, data.left.rig, {parse_sampler(a.sampler)});
        write_elevation(out, r.elevation, -e, e);
        save_tensor(out / "e_prob", "e_prob", r.e_prob);
        if (a.dump_voxels) save_tensor(out / "voxels", "voxels", r.voxels);
        const SupervisionBatch batch = supervision_for(data, data.left, config);
        const LossBreakdown loss = total_loss(r.e_prob, r.depth, batch);
        summary["metrics"] = to_json(metrics(r.elevation, data.gt));
        summary["loss"] = {{"total", loss.total},
                           {"elevation", loss.elevation},
                           {"depth", loss.depth},
                           {"depth_per_scale", loss.depth_per_scale},
                           {"beta", batch.beta}};
    } else if (a.mode == "stereo") {
        const StereoWeights w =
            a.weights.empty() ? readout_stereo_weights(config) : load_stereo_weights(a.weights, config);
        StereoOptions opt;
        opt.sampler = parse_sampler(a.sampler);
        if (a.attention == "forced") {
            opt.attention = AttentionMode::Forced;
        } else if (a.attention != "full") {
            throw ArgumentError("--attention must be full or forced");
        }
        const StereoResult r = run_stereo(inputs_for(data.left, a.inputs), inputs_for(data.right, a.inputs), w, config,
                                          data.left.rig, data.right.rig, opt);
        write_elevation(out, r.elevation, -e, e);
        save_tensor(out / "a_s", "a_s", r.a_s);
        save_tensor(out / "a_c", "a_c", r.a_c.values);
        save_tensor(out / "u", "u", r.a_c.variance);
        if (a.dump_voxels) {
            save_tensor(out / "voxels_left", "voxels_left", r.b_left);
            save_tensor(out / "voxels_right", "voxels_right", r.b_right);
            save_tensor(out / "v_init", "v_init", r.v_init);
        }
        write_pgm16(out / "a_c.pgm", r.a_c.values, 0.0f, 1.0f);
        summary["metrics"] = to_json(metrics(r.elevation, data.gt));
        summary["attention"] = a.attention;
    } else {
        throw ArgumentError("--mode must be mono or stereo");
    }
    write_json(out / "metrics.json", summary);
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

// --- bench-vt ---

struct BenchArgs {
    std::string profile = "paper", config, out;
    int reps = 50, warmup = 5;
    std::uint64_t seed = 0;
    std::string lut_out;
};

int cmd_bench(const BenchArgs& a) {
    const PipelineConfig config = config_from(a.config, a.profile);
    BenchOptions o;
    o.reps = a.reps;
    o.warmup = a.warmup;
    o.seed = a.seed;
    const json report = bench_view_transform(config, o);
    if (!a.lut_out.empty()) {
        const Rig rig = config.camera.left();
        const fs::path dir = a.lut_out;
        fs::create_directories(dir);
        for (std::size_t s : config.scales) {
            save_lut(dir / ("lut_s" + std::to_string(s)),
                     build_lut(config.grid.make(), rig.intrinsics, rig.extrinsics,
                               FeatureDims::for_image(rig.intrinsics, s), config.depth));
        }
    }
    if (!a.out.empty()) write_json(a.out, report);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
}

// --- make-weights ---

struct WeightArgs {
    std::string kind = "mono", init = "readout", profile = "desk", config, out;
    std::uint64_t seed = 0;
    double kappa = ReadoutOptions{}.kappa;
    double stereo_kappa = ReadoutOptions{}.stereo_kappa;
    double smoothing = 0.0;
    bool finest_only = false, with_heads = false;
};

int cmd_make_weights(const WeightArgs& a) {
    const PipelineConfig config = config_from(a.config, a.profile);
    ReadoutOptions ro;
    ro.kappa = a.kappa;
    ro.stereo_kappa = a.stereo_kappa;
    ro.smoothing = a.smoothing;
    ro.finest_only = a.finest_only;
    ro.with_heads = a.with_heads;
    ro.seed = a.seed;
    if (a.kind == "mono") {
        MonoWeights w;
        if (a.init == "zero") w = zero_mono_weights(config);
        else if (a.init == "random") w = random_mono_weights(config, a.seed);
        else if (a.init == "readout") w = readout_mono_weights(config, ro);
        else throw ArgumentError("--init must be zero, random or readout");
        save_weights(a.out, w);
    } else if (a.kind == "stereo") {
        StereoWeights w;
        if (a.init == "zero") w = zero_stereo_weights(config);
        else if (a.init == "random") w = random_stereo_weights(config, a.seed);
        else if (a.init == "readout") w = readout_stereo_weights(config, ro);
        else throw ArgumentError("--init must be zero, random or readout");
        save_weights(a.out, w);
    } else {
        throw ArgumentError("--kind must be mono or stereo");
    }
    std::cout << json{{"out", a.out}, {"kind", a.kind}, {"init", a.init}}.dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Road-surface elevation reconstruction kernels and pipelines"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 keeps the OpenMP default)")->check(CLI::NonNegativeNumber);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-scene", "Render a synthetic road scene with ground truth");
    g->add_option("--seed", gen.seed);
    g->add_option("--bumps", gen.bumps);
    g->add_option("--potholes", gen.potholes);
    g->add_option("--cracks", gen.cracks);
    g->add_option("--amplitude", gen.amplitude, "Fixed primitive amplitude in meters");
    g->add_option("--amplitude-min", gen.amplitude_min);
    g->add_option("--amplitude-max", gen.amplitude_max);
    g->add_option("--tilt", gen.tilt, "Maximum plane tilt in radians");
    g->add_option("--dropout", gen.dropout, "Fraction of ground-truth cells to mask out");
    g->add_option("--profile", gen.profile)->check(CLI::IsMember({"paper", "desk"}));
    g->add_option("--config", gen.config);
    g->add_option("--out", gen.out)->required();
    g->add_option("--threads", threads);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Run the mono or stereo pipeline on a scene directory");
    r->add_option("--mode", run.mode)->required()->check(CLI::IsMember({"mono", "stereo"}));
    r->add_option("--config", run.config, "Defaults to the scene's config.json");
    r->add_option("--scene", run.scene)->required();
    r->add_option("--weights", run.weights, "Weights directory (default: built-in readout weights)");
    r->add_option("--inputs", run.inputs)->check(CLI::IsMember({"oracle", "image"}));
    r->add_option("--sampler", run.sampler)->check(CLI::IsMember({"lut", "reference"}));
    r->add_option("--attention", run.attention)->check(CLI::IsMember({"full", "forced"}));
    r->add_flag("--dump-voxels", run.dump_voxels, "Also write the fused voxel features");
    r->add_option("--out", run.out)->required();
    r->add_option("--threads", threads);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench-vt", "Time the LUT gather against the reference sampler");
    b->add_option("--profile", bench.profile)->check(CLI::IsMember({"paper", "desk"}));
    b->add_option("--config", bench.config);
    b->add_option("--reps", bench.reps)->check(CLI::PositiveNumber);
    b->add_option("--warmup", bench.warmup)->check(CLI::NonNegativeNumber);
    b->add_option("--seed", bench.seed);
    b->add_option("--out", bench.out, "Also write the report to this file");
    b->add_option("--lut-out", bench.lut_out, "Dump the projection tables to this directory");
    b->add_option("--threads", threads);

    WeightArgs wa;
    auto* w = app.add_subcommand("make-weights", "Write zero, random or readout weights");
    w->add_option("--kind", wa.kind)->check(CLI::IsMember({"mono", "stereo"}));
    w->add_option("--init", wa.init)->check(CLI::IsMember({"zero", "random", "readout"}));
    w->add_option("--profile", wa.profile)->check(CLI::IsMember({"paper", "desk"}));
    w->add_option("--config", wa.config);
    w->add_option("--seed", wa.seed);
    w->add_option("--kappa", wa.kappa, "Mono readout gain");
    w->add_option("--stereo-kappa", wa.stereo_kappa, "Stereo readout gain");
    w->add_option("--smoothing", wa.smoothing, "Readout kernel width in meters (0: centroid readout)");
    w->add_flag("--finest-only", wa.finest_only);
    w->add_flag("--with-heads", wa.with_heads);
    w->add_option("--out", wa.out)->required();
    w->add_option("--threads", threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return kExitUsage;
    }

    try {
        if (threads > 0) set_num_threads(threads);
        if (g->parsed()) return cmd_gen_scene(gen);
        if (r->parsed()) return cmd_run(run);
        if (b->parsed()) return cmd_bench(bench);
        if (w->parsed()) return cmd_make_weights(wa);
    } catch (const StageError& e) {
        std::cerr << "error in " << e.what() << "\n";
        return e.is_argument_error() ? kExitUsage : kExitRuntime;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace rsr::cli
