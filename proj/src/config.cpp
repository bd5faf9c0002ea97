#include "rsr/config.hpp"

#include <cmath>
#include <fstream>

#include "rsr/errors.hpp"
#include "rsr/tensor_io.hpp"

namespace rsr {

using nlohmann::json;

BinSpec BinConfig::make() const {
    return mode == BinMode::Shuttle ? shuttle_bins(count, e_bound, alpha) : uniform_bins(count, e_bound);
}

std::size_t PipelineConfig::fused_channels() const {
    return fusion == Fusion::Concat ? feat_channels * scales.size() : feat_channels;
}

void PipelineConfig::validate() const {
    const VoxelGrid g = grid.make();
    camera.intrinsics.validate();
    depth.validate();
    (void)bins.make();
    if (scales.empty()) throw ArgumentError("at least one feature stride is required");
    for (std::size_t s : scales) {
        const FeatureDims f = FeatureDims::for_image(camera.intrinsics, s);
        if (f.height == 0 || f.width == 0) {
            throw ArgumentError("stride " + std::to_string(s) + " leaves an empty feature map");
        }
    }
    if (feat_channels == 0) throw ArgumentError("feat_channels must be positive");
    if (groups == 0 || fused_channels() % groups != 0) {
        throw ArgumentError("groups (" + std::to_string(groups) + ") must divide the fused channel count (" +
                            std::to_string(fused_channels()) + ")");
    }
    if (!(beta >= 0.0)) throw ArgumentError("beta must be non-negative");
    if (!(feature_noise >= 0.0)) throw ArgumentError("feature_noise must be non-negative");
    if (!(camera.height > 0.0)) throw ArgumentError("camera height must be positive");
    if (!std::isfinite(camera.pitch) || !std::isfinite(camera.baseline)) {
        throw ArgumentError("camera pitch and baseline must be finite");
    }
    if (g.range(2).max > bins.e_bound + 1e-9 || g.range(2).min < -bins.e_bound - 1e-9) {
        throw ArgumentError("vertical ROI exceeds the elevation bound");
    }
}

PipelineConfig PipelineConfig::paper() {
    PipelineConfig c;
    c.profile = "paper";
    c.camera.intrinsics = {700.0, 700.0, 480.0, 264.0, 960, 528};
    return c;
}

PipelineConfig PipelineConfig::desk() {
    PipelineConfig c;
    c.profile = "desk";
    // Narrow near-field ROI with a steeper, longer-lens camera so that the
    // stride-4 rows stay dense over the grid.
    c.grid.ranges = {AxisRange{-0.64, 0.64}, AxisRange{1.6, 4.0}, AxisRange{-0.2, 0.2}};
    c.grid.resolution = {0.08, 0.1, 0.05};
    c.camera.intrinsics = {110.0, 110.0, 48.0, 32.0, 96, 64};
    c.camera.pitch = 0.565;
    c.depth.bins = 32;
    c.feat_channels = 8;
    return c;
}

PipelineConfig PipelineConfig::named(const std::string& profile) {
    if (profile == "paper") return paper();
    if (profile == "desk") return desk();
    throw ArgumentError("unknown profile '" + profile + "' (expected paper or desk)");
}

DepthEncoding parse_depth_encoding(const std::string& name) {
    if (name == "onehot") return DepthEncoding::OneHot;
    if (name == "linear") return DepthEncoding::Linear;
    throw ArgumentError("unknown depth encoding '" + name + "' (expected onehot or linear)");
}

std::string to_string(DepthEncoding e) { return e == DepthEncoding::OneHot ? "onehot" : "linear"; }

namespace {

json range_json(const AxisRange& r) { return json::array({r.min, r.max}); }

AxisRange range_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw ArgumentError(std::string(what) + " must be [min, max]");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json intrinsics_json(const CameraIntrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

void read_intrinsics(const json& j, CameraIntrinsics& k) {
    read_opt(j, "fx", k.fx);
    read_opt(j, "fy", k.fy);
    read_opt(j, "cx", k.cx);
    read_opt(j, "cy", k.cy);
    read_opt(j, "width", k.width);
    read_opt(j, "height", k.height);
}

// Errors from the json library are config errors too.
template <typename Fn>
auto as_argument_error(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw ArgumentError(where + ": " + e.what());
    }
}

}  // namespace

void to_json(json& j, const PipelineConfig& c) {
    j = json{
        {"profile", c.profile},
        {"grid",
         {{"x", range_json(c.grid.ranges[0])},
          {"y", range_json(c.grid.ranges[1])},
          {"z", range_json(c.grid.ranges[2])},
          {"resolution", c.grid.resolution}}},
        {"camera",
         {{"intrinsics", intrinsics_json(c.camera.intrinsics)},
          {"height", c.camera.height},
          {"pitch", c.camera.pitch},
          {"baseline", c.camera.baseline}}},
        {"depth", {{"d_min", c.depth.d_min}, {"d_max", c.depth.d_max}, {"bins", c.depth.bins}}},
        {"bins",
         {{"N", c.bins.count}, {"e_bound", c.bins.e_bound}, {"alpha", c.bins.alpha}, {"mode", to_string(c.bins.mode)}}},
        {"scales", c.scales},
        {"feat_channels", c.feat_channels},
        {"groups", c.groups},
        {"fusion", to_string(c.fusion)},
        {"beta", c.beta},
        {"seed", c.seed},
        {"synthetic",
         {{"feature_noise", c.feature_noise},
          {"texture", c.texture},
          {"oracle_depth", to_string(c.oracle_depth)}}},
    };
    if (!c.weights.empty()) j["weights"] = c.weights.string();
}

void from_json(const json& j, PipelineConfig& c) {
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        if (g.contains("x")) c.grid.ranges[0] = range_from(g.at("x"), "grid.x");
        if (g.contains("y")) c.grid.ranges[1] = range_from(g.at("y"), "grid.y");
        if (g.contains("z")) c.grid.ranges[2] = range_from(g.at("z"), "grid.z");
        read_opt(g, "resolution", c.grid.resolution);
    }
    if (j.contains("camera")) {
        const json& cam = j.at("camera");
        if (cam.contains("intrinsics")) read_intrinsics(cam.at("intrinsics"), c.camera.intrinsics);
        read_opt(cam, "height", c.camera.height);
        read_opt(cam, "pitch", c.camera.pitch);
        read_opt(cam, "baseline", c.camera.baseline);
    }
    if (j.contains("depth")) {
        const json& d = j.at("depth");
        read_opt(d, "d_min", c.depth.d_min);
        read_opt(d, "d_max", c.depth.d_max);
        read_opt(d, "bins", c.depth.bins);
    }
    if (j.contains("bins")) {
        const json& b = j.at("bins");
        read_opt(b, "N", c.bins.count);
        read_opt(b, "e_bound", c.bins.e_bound);
        read_opt(b, "alpha", c.bins.alpha);
        if (b.contains("mode")) c.bins.mode = parse_bin_mode(b.at("mode").get<std::string>());
    }
    read_opt(j, "scales", c.scales);
    read_opt(j, "feat_channels", c.feat_channels);
    read_opt(j, "groups", c.groups);
    if (j.contains("fusion")) c.fusion = parse_fusion(j.at("fusion").get<std::string>());
    read_opt(j, "beta", c.beta);
    read_opt(j, "seed", c.seed);
    if (j.contains("weights")) c.weights = j.at("weights").get<std::string>();
    if (j.contains("synthetic")) {
        const json& s = j.at("synthetic");
        read_opt(s, "feature_noise", c.feature_noise);
        read_opt(s, "texture", c.texture);
        if (s.contains("oracle_depth")) c.oracle_depth = parse_depth_encoding(s.at("oracle_depth").get<std::string>());
    }
}

PipelineConfig parse_config(const json& j) {
    return as_argument_error("config", [&] {
        if (!j.is_object()) throw ArgumentError("config must be a JSON object");
        PipelineConfig c = PipelineConfig::named(j.value("profile", std::string("paper")));
        from_json(j, c);
        c.validate();
        return c;
    });
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const std::exception& e) {
        throw ArgumentError("cannot read config " + path.string() + ": " + e.what());
    }
    const json j = as_argument_error(path.string(), [&] { return json::parse(text); });
    PipelineConfig c = parse_config(j);
    if (!c.weights.empty() && c.weights.is_relative()) c.weights = path.parent_path() / c.weights;
    return c;
}

void to_json(json& j, const Rig& rig) {
    j = json{{"intrinsics", intrinsics_json(rig.intrinsics)},
             {"rotation", rig.extrinsics.rotation},
             {"translation", rig.extrinsics.translation}};
}

void from_json(const json& j, Rig& rig) {
    read_intrinsics(j.at("intrinsics"), rig.intrinsics);
    rig.extrinsics.rotation = j.at("rotation").get<Mat3>();
    rig.extrinsics.translation = j.at("translation").get<Vec3>();
}

Rig load_rig(const std::filesystem::path& path) {
    return as_argument_error(path.string(), [&] {
        Rig rig = json::parse(read_text(path)).get<Rig>();
        rig.intrinsics.validate();
        rig.extrinsics.validate();
        return rig;
    });
}

void to_json(json& j, const SceneSpec& s) {
    json prims = json::array();
    for (const Primitive& p : s.primitives) {
        prims.push_back({{"kind", to_string(p.kind)},
                         {"cx", p.cx},
                         {"cy", p.cy},
                         {"radius", p.radius},
                         {"amplitude", p.amplitude},
                         {"angle", p.angle}});
    }
    j = json{{"seed", s.seed},
             {"pitch", s.pitch},
             {"roll", s.roll},
             {"x_extent", range_json(s.x_extent)},
             {"y_extent", range_json(s.y_extent)},
             {"e_bound", s.e_bound},
             {"primitives", prims}};
}

void from_json(const json& j, SceneSpec& s) {
    read_opt(j, "seed", s.seed);
    read_opt(j, "pitch", s.pitch);
    read_opt(j, "roll", s.roll);
    if (j.contains("x_extent")) s.x_extent = range_from(j.at("x_extent"), "x_extent");
    if (j.contains("y_extent")) s.y_extent = range_from(j.at("y_extent"), "y_extent");
    read_opt(j, "e_bound", s.e_bound);
    s.primitives.clear();
    if (j.contains("primitives")) {
        for (const json& p : j.at("primitives")) {
            Primitive prim;
            prim.kind = parse_primitive_kind(p.at("kind").get<std::string>());
            prim.cx = p.at("cx").get<double>();
            prim.cy = p.at("cy").get<double>();
            read_opt(p, "radius", prim.radius);
            read_opt(p, "amplitude", prim.amplitude);
            read_opt(p, "angle", prim.angle);
            s.primitives.push_back(prim);
        }
    }
}

json to_json(const Metrics& m) {
    return {{"abs_err_cm", m.abs_err_cm},
            {"rmse_cm", m.rmse_cm},
            {"pct_gt_half_cm", m.pct_gt_half_cm},
            {"n_cells", m.n_cells},
            {"empty", m.empty}};
}

json to_json(const BinSpec& b) {
    return {{"N", b.count()}, {"e_bound", b.e_bound}, {"alpha", b.alpha}, {"mode", to_string(b.mode)},
            {"edges", b.edges}, {"centers", b.centers}};
}

}  // namespace rsr
