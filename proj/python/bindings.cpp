#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "commands.hpp"
#include "rsr/config.hpp"
#include "rsr/errors.hpp"
#include "rsr/mono.hpp"
#include "rsr/numerics.hpp"
#include "rsr/parallel.hpp"
#include "rsr/scene_io.hpp"
#include "rsr/stereo.hpp"
#include "rsr/supervision.hpp"
#include "rsr/weights.hpp"

namespace py = pybind11;
using namespace rsr;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

namespace {

Tensor to_tensor(const FloatArray& a) {
    if (a.ndim() == 0) throw ArgumentError("expected an array with at least one axis");
    Shape shape(a.shape(), a.shape() + a.ndim());
    std::vector<float> data(a.data(), a.data() + a.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<float> to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<float> out(shape);
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

py::array_t<float> to_array(const ElevationMap& e) { return to_array(e.as_tensor()); }

ElevationMap to_map(const FloatArray& a) { return ElevationMap::from_tensor(to_tensor(a)); }

PipelineConfig config_from(const std::string& text) { return parse_config(nlohmann::json::parse(text)); }

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["abs_err_cm"] = m.abs_err_cm;
    d["rmse_cm"] = m.rmse_cm;
    d["pct_gt_half_cm"] = m.pct_gt_half_cm;
    d["n_cells"] = m.n_cells;
    return d;
}

SceneData scene_for(const PipelineConfig& c, std::uint64_t seed, int bumps) {
    SceneParams p = scene_params_for(c);
    p.bumps = bumps;
    return render_scene(gen_scene(seed, p), c);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "BEV road-surface elevation kernels";

    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<RuntimeError>(m, "RuntimeError", PyExc_RuntimeError);
    py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

    m.def("set_num_threads", &set_num_threads);
    m.def("num_threads", &num_threads);

    m.def("softmax", [](const FloatArray& x, std::size_t axis) { return to_array(softmax(to_tensor(x), axis)); },
          py::arg("x"), py::arg("axis"));
    m.def("sigmoid", [](const FloatArray& x) { return to_array(sigmoid(to_tensor(x))); });
    m.def(
        "conv3d",
        [](const FloatArray& x, const FloatArray& k, std::array<std::size_t, 3> pad, std::size_t stride) {
            return to_array(conv3d(to_tensor(x), to_tensor(k), {pad[0], pad[1], pad[2]}, stride));
        },
        py::arg("x"), py::arg("kernel"), py::arg("padding"), py::arg("stride") = 1,
        "Channel-last (X, Y, Z, C) input, (C_out, C_in, kz, ky, kx) kernel, padding (z, y, x).");

    py::class_<BinSpec>(m, "BinSpec")
        .def_readonly("edges", &BinSpec::edges)
        .def_readonly("centers", &BinSpec::centers)
        .def_readonly("e_bound", &BinSpec::e_bound)
        .def_readonly("alpha", &BinSpec::alpha);
    m.def("shuttle_bins", &shuttle_bins, py::arg("n"), py::arg("e_bound"), py::arg("alpha"));
    m.def("uniform_bins", &uniform_bins, py::arg("n"), py::arg("e_bound"));
    m.def("regress_elevation", [](const FloatArray& p, const BinSpec& b) {
        return to_array(regress_elevation(to_tensor(p), b));
    });

    m.def("build_cost_volume", [](const FloatArray& l, const FloatArray& r, std::size_t groups) {
        return to_array(build_cost_volume(to_tensor(l), to_tensor(r), groups));
    });
    m.def("spatial_attention", [](const FloatArray& b, const FloatArray& k) {
        return to_array(spatial_attention(to_tensor(b), to_tensor(k)));
    });
    m.def(
        "confidence_attention",
        [](const FloatArray& v, const std::vector<double>& z, double s, double eps) {
            const ConfidenceField f = confidence_attention(to_tensor(v), z, s, eps);
            py::dict d;
            d["a_c"] = to_array(f.values);
            d["variance"] = to_array(f.variance);
            d["expectation"] = to_array(f.expectation);
            d["probability"] = to_array(f.probability);
            return d;
        },
        py::arg("volume"), py::arg("z_centers"), py::arg("s") = -1.0, py::arg("epsilon") = 0.0);
    m.def("regress_disparity", [](const FloatArray& v, const std::vector<double>& z) {
        return to_array(regress_disparity(to_tensor(v), z));
    });

    m.def(
        "masked_ce",
        [](const FloatArray& scores, const std::vector<std::int32_t>& targets, const std::vector<std::uint8_t>& mask,
           bool logits) {
            return masked_ce(to_tensor(scores), targets, mask, logits ? ScoreKind::Logits : ScoreKind::Probabilities)
                .loss;
        },
        py::arg("scores"), py::arg("targets"), py::arg("mask"), py::arg("logits") = false);
    m.def("metrics", [](const FloatArray& pred, const FloatArray& gt) {
        return metrics_dict(metrics(to_map(pred), to_map(gt)));
    });

    // Config-level entry points take the config as JSON text.
    m.def("profile_config", [](const std::string& name) {
        return nlohmann::json(PipelineConfig::named(name)).dump();
    });
    m.def("load_config", [](const std::filesystem::path& p) { return nlohmann::json(load_config(p)).dump(); });
    m.def(
        "project_voxels",
        [](const std::string& config, std::size_t scale, const FloatArray& features, const FloatArray& depth,
           bool reference) {
            const PipelineConfig c = config_from(config);
            const Rig rig = c.camera.left();
            const VoxelGrid grid = c.grid.make();
            const FeatureDims dims = FeatureDims::for_image(rig.intrinsics, scale);
            const Tensor f = to_tensor(features), d = to_tensor(depth);
            if (reference) {
                return to_array(sample_voxels_reference(grid, rig.intrinsics, rig.extrinsics, dims, c.depth, f, d));
            }
            return to_array(gather_voxels(build_lut(grid, rig.intrinsics, rig.extrinsics, dims, c.depth), f, d));
        },
        py::arg("config"), py::arg("scale"), py::arg("features"), py::arg("depth"), py::arg("reference") = false,
        "Depth-weighted voxel features for the config's left camera at one feature stride.");
    m.def(
        "render_scene",
        [](const std::string& config, std::uint64_t seed, int bumps) {
            const PipelineConfig c = config_from(config);
            const SceneData s = scene_for(c, seed, bumps);
            py::dict d;
            d["gt"] = to_array(s.gt);
            py::list feats, depth;
            for (const auto& t : s.left.features) feats.append(to_array(t));
            for (const auto& t : s.left.depth_prob) depth.append(to_array(t));
            d["features"] = feats;
            d["depth_prob"] = depth;
            d["image"] = to_array(s.left.image);
            return d;
        },
        py::arg("config"), py::arg("seed"), py::arg("bumps") = 3);
    m.def(
        "evaluate_oracle",
        [](const std::string& config, std::uint64_t seed, int bumps) {
            const PipelineConfig c = config_from(config);
            const SceneData s = scene_for(c, seed, bumps);
            const auto pm = cli::evaluate_oracle(s, c, readout_mono_weights(c), readout_stereo_weights(c));
            py::dict d;
            d["mono"] = metrics_dict(pm.mono);
            d["stereo"] = metrics_dict(pm.stereo);
            return d;
        },
        py::arg("config"), py::arg("seed"), py::arg("bumps") = 3,
        "Mono and stereo with analytic readout weights on one synthetic scene, oracle inputs.");
    m.def(
        "bench_view_transform",
        [](const std::string& config, int reps, int warmup) {
            cli::BenchOptions o;
            o.reps = reps;
            o.warmup = warmup;
            return cli::bench_view_transform(config_from(config), o).dump();
        },
        py::arg("config"), py::arg("reps") = 50, py::arg("warmup") = 5);
}
