#include "rsr/scene_io.hpp"

#include <algorithm>

#include <json.hpp>

#include "rsr/errors.hpp"
#include "rsr/tensor_io.hpp"

namespace rsr {

namespace fs = std::filesystem;
using nlohmann::json;

ViewInputs ViewData::oracle_inputs() const { return ViewInputs{std::nullopt, features, depth_prob}; }

ViewInputs ViewData::image_inputs() const { return ViewInputs{image, {}, {}}; }

SceneParams scene_params_for(const PipelineConfig& config) {
    SceneParams p;
    const auto& r = config.grid.ranges;
    p.x_roi = r[0];
    p.y_roi = r[1];
    // The surface extends past the ROI so that every voxel column sees road.
    p.x_extent = {std::min(-1.5, r[0].min - 0.5), std::max(1.5, r[0].max + 0.5)};
    p.y_extent = {std::min(1.0, r[1].min - 0.5), std::max(9.0, r[1].max + 2.0)};
    p.e_bound = config.bins.e_bound;
    p.amplitude_max = std::min(p.amplitude_max, p.e_bound);
    return p;
}

ViewData render_view(const SceneSpec& scene, const Rig& rig, const PipelineConfig& config, std::uint32_t camera_id) {
    ViewData v;
    v.rig = rig;
    FeatureOptions fo;
    fo.channels = config.feat_channels;
    fo.texture = config.texture;
    fo.noise = config.feature_noise;
    fo.seed = config.seed ^ scene.seed;
    fo.camera_id = camera_id;
    v.image = render_image(scene, rig, fo);
    for (std::size_t s : config.scales) {
        v.features.push_back(render_features(scene, rig, s, fo));
        v.depth.push_back(render_depth(scene, rig, s));
        v.depth_prob.push_back(depth_distribution(v.depth.back(), config.depth, config.oracle_depth));
    }
    return v;
}

SceneData render_scene(const SceneSpec& scene, const PipelineConfig& config, double dropout) {
    SceneData d;
    d.scene = scene;
    d.gt = gt_elevation_map(scene, config.grid.make(), dropout, scene.seed);
    d.left = render_view(scene, config.camera.left(), config, 0);
    d.right = render_view(scene, config.camera.right(), config, 1);
    return d;
}

SupervisionBatch supervision_for(const SceneData& data, const ViewData& view, const PipelineConfig& config) {
    SupervisionBatch b;
    b.beta = config.beta;
    b.elevation.index = elevation_to_target(data.gt, config.bins.make());
    b.elevation.mask = data.gt.mask;
    for (const DepthImage& d : view.depth) b.depth.push_back(depth_targets(d, config.depth));
    return b;
}

Tensor depth_tensor(const DepthImage& d) {
    Tensor t = d.depth;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!d.mask[i]) t[i] = 0.0f;
    }
    return t;
}

DepthImage depth_from_tensor(const Tensor& t) {
    if (t.rank() != 2) throw ArgumentError("depth map must be (h, w)");
    DepthImage d{t, std::vector<std::uint8_t>(t.size(), 0)};
    for (std::size_t i = 0; i < t.size(); ++i) d.mask[i] = t[i] > 0.0f ? 1 : 0;
    return d;
}

namespace {

std::string scale_dir(std::size_t stride) { return "s" + std::to_string(stride); }

void save_view(const fs::path& dir, const ViewData& v, const PipelineConfig& config, const SceneSpec& scene) {
    fs::create_directories(dir);
    save_tensor(dir / "image", "image", v.image);
    const DepthImage full = render_depth(scene, v.rig, 1);
    const Tensor full_t = depth_tensor(full);
    save_tensor(dir / "depth", "depth", full_t);
    write_pgm16(dir / "depth.pgm", full_t, static_cast<float>(config.depth.d_min),
                static_cast<float>(config.depth.d_max), full.mask);
    for (std::size_t s = 0; s < config.scales.size(); ++s) {
        const fs::path sd = dir / scale_dir(config.scales[s]);
        fs::create_directories(sd);
        save_tensor(sd / "features", "features", v.features[s]);
        save_tensor(sd / "depth_prob", "depth_prob", v.depth_prob[s]);
        save_tensor(sd / "depth", "depth", depth_tensor(v.depth[s]));
    }
}

ViewData load_view(const fs::path& dir, const Rig& rig, const PipelineConfig& config) {
    ViewData v;
    v.rig = rig;
    v.image = load_tensor(dir / "image");
    for (std::size_t stride : config.scales) {
        const fs::path sd = dir / scale_dir(stride);
        if (!fs::exists(sd)) throw ArgumentError("scene has no data for stride " + std::to_string(stride));
        v.features.push_back(load_tensor(sd / "features"));
        v.depth_prob.push_back(load_tensor(sd / "depth_prob"));
        v.depth.push_back(depth_from_tensor(load_tensor(sd / "depth")));
    }
    return v;
}

}  // namespace

void save_scene(const fs::path& dir, const SceneData& data, const PipelineConfig& config) {
    fs::create_directories(dir);
    write_text(dir / "scene.json", json(data.scene).dump(2) + "\n");
    write_text(dir / "config.json", json(config).dump(2) + "\n");
    write_text(dir / "rig_left.json", json(data.left.rig).dump(2) + "\n");
    write_text(dir / "rig_right.json", json(data.right.rig).dump(2) + "\n");
    const Tensor gt = data.gt.as_tensor();
    save_tensor(dir / "gt_elevation", "gt_elevation", gt);
    save_tensor(dir / "gt_mask", "gt_mask", data.gt.mask_tensor());
    const float e = static_cast<float>(config.bins.e_bound);
    write_pgm16(dir / "gt_elevation.pgm", gt, -e, e, data.gt.mask);
    save_view(dir / "left", data.left, config, data.scene);
    save_view(dir / "right", data.right, config, data.scene);
}

SceneData load_scene(const fs::path& dir, const PipelineConfig& config) {
    if (!fs::is_directory(dir)) throw ArgumentError("scene directory not found: " + dir.string());
    try {
        SceneData d;
        d.scene = json::parse(read_text(dir / "scene.json")).get<SceneSpec>();
        const Tensor mask = load_tensor(dir / "gt_mask");
        d.gt = ElevationMap::from_tensor(load_tensor(dir / "gt_elevation"), &mask);
        const VoxelGrid grid = config.grid.make();
        if (d.gt.nx != grid.nx() || d.gt.ny != grid.ny()) {
            throw ArgumentError("scene ground truth is " + std::to_string(d.gt.nx) + "x" + std::to_string(d.gt.ny) +
                                " but the config grid is " + std::to_string(grid.nx()) + "x" +
                                std::to_string(grid.ny()));
        }
        d.left = load_view(dir / "left", load_rig(dir / "rig_left.json"), config);
        d.right = load_view(dir / "right", load_rig(dir / "rig_right.json"), config);
        return d;
    } catch (const json::exception& e) {
        throw RuntimeError("malformed scene in " + dir.string() + ": " + e.what());
    }
}

}  // namespace rsr
