#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "rsr/config.hpp"
#include "rsr/errors.hpp"
#include "rsr/scene_io.hpp"
#include "rsr/tensor_io.hpp"
#include "rsr/weights.hpp"
#include "test_util.hpp"

using namespace rsr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("profiles") {
    auto paper = PipelineConfig::paper();
    auto g = paper.grid.make();
    CHECK(g.nx() == 63);
    CHECK(g.nz() == 40);
    CHECK(paper.camera.intrinsics.width == 960);
    CHECK(paper.camera.intrinsics.height == 528);
    CHECK(paper.fused_channels() == 48);
    CHECK(paper.beta == 0.25);
    auto desk = PipelineConfig::desk();
    auto d = desk.grid.make();
    CHECK(d.nx() == 16);
    CHECK(d.ny() == 24);
    CHECK(d.nz() == 8);
    CHECK(desk.camera.intrinsics.width == 96);
    CHECK(desk.camera.intrinsics.height == 64);
    CHECK_NOTHROW(paper.validate());
    CHECK_NOTHROW(desk.validate());
    CHECK_THROWS_AS(PipelineConfig::named("huge"), ArgumentError);
}

TEST_CASE("config json round trip") {
    auto c = PipelineConfig::desk();
    c.seed = 42;
    c.fusion = Fusion::Plus;
    c.groups = 4;
    json j = c;
    auto back = parse_config(j);
    CHECK(back.seed == 42);
    CHECK(back.fusion == Fusion::Plus);
    CHECK(back.groups == 4);
    CHECK(json(back) == j);
}

TEST_CASE("partial configs fall back to the profile") {
    auto c = parse_config(json{{"profile", "desk"}, {"beta", 0.5}});
    CHECK(c.beta == 0.5);
    CHECK(c.grid.make().nx() == 16);
    auto p = parse_config(json::object());
    CHECK(p.profile == "paper");
}

TEST_CASE("invalid configs are argument errors") {
    CHECK_THROWS_AS(parse_config(json{{"groups", 5}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"beta", -1}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"scales", json::array()}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"bins", {{"N", 5}}}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"grid", {{"x", {1.0, 0.0}}}}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"depth", {{"d_min", 5}, {"d_max", 1}}}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"fusion", "mean"}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json{{"beta", "high"}}), ArgumentError);
    CHECK_THROWS_AS(parse_config(json::array()), ArgumentError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ArgumentError);
}

TEST_CASE("config file with relative weights path") {
    TempDir dir("rsr_cfg_test");
    {
        std::ofstream os(dir.path / "c.json");
        os << R"({"profile": "desk", "weights": "w"})";
    }
    auto c = load_config(dir.path / "c.json");
    CHECK(c.weights == dir.path / "w");
    {
        std::ofstream os(dir.path / "bad.json");
        os << "{not json";
    }
    CHECK_THROWS_AS(load_config(dir.path / "bad.json"), ArgumentError);
}

TEST_CASE("rig and scene json") {
    auto rig = PipelineConfig::desk().camera.left();
    json j = rig;
    Rig back = j.get<Rig>();
    CHECK(back.extrinsics.rotation == rig.extrinsics.rotation);
    CHECK(back.intrinsics.fx == rig.intrinsics.fx);
    SceneParams p;
    p.bumps = 2;
    p.cracks = 1;
    auto s = gen_scene(3, p);
    json js = s;
    auto s2 = js.get<SceneSpec>();
    CHECK(s2.primitives.size() == 3);
    CHECK(s2.primitives[2].kind == PrimitiveKind::Crack);
    CHECK(s2.elevation(0.1, 4.0) == s.elevation(0.1, 4.0));
}

TEST_CASE("tensor files") {
    TempDir dir("rsr_tensor_test");
    std::mt19937_64 rng(2);
    auto t = test::random_tensor({3, 4, 5}, rng);
    save_tensor(dir.path / "t", "t", t);
    auto back = load_tensor(dir.path / "t");
    CHECK(back.shape() == t.shape());
    CHECK(back.buffer() == t.buffer());
    CHECK(load_tensor(dir.path / "t.json").buffer() == t.buffer());
    CHECK_THROWS_AS(load_tensor(dir.path / "missing"), RuntimeError);
    fs::resize_file(dir.path / "t.f32", 8);
    CHECK_THROWS_AS(load_tensor(dir.path / "t"), RuntimeError);

    write_pgm16(dir.path / "m.pgm", Tensor({2, 3}, 0.5f), 0.0f, 1.0f);
    auto text = read_text(dir.path / "m.pgm");
    CHECK(text.rfind("P5", 0) == 0);
    CHECK(text.size() == std::string("P5\n3 2\n65535\n").size() + 12);
}

TEST_CASE("weights save and load") {
    TempDir dir("rsr_weights_test");
    auto config = PipelineConfig::desk();
    auto mono = random_mono_weights(config, 3);
    save_weights(dir.path / "m", mono);
    auto m2 = load_mono_weights(dir.path / "m", config);
    CHECK(m2.bev_encoder.layers.size() == mono.bev_encoder.layers.size());
    CHECK(m2.bev_encoder.layers[0].buffer() == mono.bev_encoder.layers[0].buffer());
    CHECK(m2.heads.depth[1].layers[1].buffer() == mono.heads.depth[1].layers[1].buffer());

    auto stereo = random_stereo_weights(config, 4);
    stereo.s = -3.0;
    stereo.epsilon = 0.25;
    save_weights(dir.path / "s", stereo);
    auto s2 = load_stereo_weights(dir.path / "s", config);
    CHECK(s2.s == -3.0);
    CHECK(s2.epsilon == 0.25);
    CHECK(s2.aggregation.hourglasses[0].up.buffer() == stereo.aggregation.hourglasses[0].up.buffer());
    CHECK(s2.sae_kernel.buffer() == stereo.sae_kernel.buffer());

    CHECK_THROWS_AS(load_mono_weights(dir.path / "nothing", config), ArgumentError);
    CHECK_THROWS_AS(load_stereo_weights(dir.path / "m", config), ArgumentError);
    auto other = config;
    other.bins.count = 40;
    CHECK_THROWS_AS(load_mono_weights(dir.path / "m", other), ArgumentError);
}

TEST_CASE("scene directories round trip") {
    TempDir dir("rsr_scene_test");
    auto config = PipelineConfig::desk();
    auto p = scene_params_for(config);
    p.bumps = 1;
    auto data = render_scene(gen_scene(5, p), config);
    save_scene(dir.path, data, config);
    auto back = load_scene(dir.path, config);
    CHECK(back.gt.values == data.gt.values);
    CHECK(back.left.features[1].buffer() == data.left.features[1].buffer());
    CHECK(back.right.depth_prob[2].buffer() == data.right.depth_prob[2].buffer());
    CHECK(back.right.depth[0].mask == data.right.depth[0].mask);
    CHECK(back.left.rig.extrinsics.translation == data.left.rig.extrinsics.translation);
    CHECK(load_config(dir.path / "config.json").grid.make().ny() == 24);
}
