#include <doctest.h>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "rsr/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rsr");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return rsr::cli::main(static_cast<int>(argv.size()), argv.data());
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = rsr::read_text(e.path());
    }
    return files;
}

struct Workdir {
    fs::path root = fs::temp_directory_path() / "rsr_cli_test";
    Workdir() {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workdir() { fs::remove_all(root); }
    std::string operator/(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("gen-scene is byte-for-byte reproducible") {
    Workdir w;
    REQUIRE(cli({"gen-scene", "--seed", "7", "--bumps", "2", "--out", w / "a"}) == rsr::cli::kExitOk);
    REQUIRE(cli({"gen-scene", "--seed", "7", "--bumps", "2", "--out", w / "b"}) == rsr::cli::kExitOk);
    auto a = snapshot(w / "a");
    CHECK(a.size() > 10);
    CHECK(a.count("scene.json") == 1);
    CHECK(a.count("left/s4/features.f32") == 1);
    CHECK(a == snapshot(w / "b"));
    CHECK(cli({"gen-scene", "--seed", "8", "--bumps", "2", "--out", w / "c"}) == 0);
    CHECK(snapshot(w / "c") != a);
}

TEST_CASE("usage errors exit with 2") {
    Workdir w;
    CHECK(cli({"gen-scene", "--amplitude", "0.5", "--out", w / "x"}) == rsr::cli::kExitUsage);
    CHECK(cli({"gen-scene", "--amplitude-min", "0.04", "--amplitude-max", "0.02", "--out", w / "x"}) == 2);
    CHECK(cli({"gen-scene", "--profile", "huge", "--out", w / "x"}) == 2);
    CHECK(cli({"gen-scene", "--seed", "abc", "--out", w / "x"}) == 2);
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({}) == 2);
    CHECK(cli({"--help"}) == 0);
    REQUIRE(cli({"gen-scene", "--seed", "1", "--out", w / "s"}) == 0);
    CHECK(cli({"run", "--mode", "mono", "--scene", w / "s", "--weights", w / "missing", "--out", w / "o"}) == 2);
    CHECK(cli({"run", "--mode", "sideways", "--scene", w / "s", "--out", w / "o"}) == 2);
    CHECK(cli({"run", "--mode", "mono", "--scene", w / "nowhere", "--out", w / "o"}) == 2);
    CHECK(cli({"run", "--mode", "mono", "--inputs", "image", "--scene", w / "s", "--out", w / "o"}) == 2);
}

TEST_CASE("damaged scene data is a runtime error") {
    Workdir w;
    REQUIRE(cli({"gen-scene", "--seed", "1", "--out", w / "s"}) == 0);
    fs::resize_file(w / "s/left/s8/features.f32", 16);
    CHECK(cli({"run", "--mode", "mono", "--scene", w / "s", "--out", w / "o"}) == rsr::cli::kExitRuntime);
}

TEST_CASE("run writes elevation and metrics") {
    Workdir w;
    REQUIRE(cli({"gen-scene", "--seed", "3", "--bumps", "0", "--out", w / "flat"}) == 0);
    REQUIRE(cli({"run", "--mode", "mono", "--scene", w / "flat", "--out", w / "m"}) == 0);
    auto m = json::parse(rsr::read_text(w / "m/metrics.json"));
    CHECK(m["metrics"]["abs_err_cm"].get<double>() <= 1.0);
    CHECK(m["loss"].contains("total"));
    CHECK(fs::exists(w / "m/elevation.pgm"));
    CHECK(rsr::load_tensor(w / "m/elevation").shape() == rsr::Shape{16, 24});

    REQUIRE(cli({"run", "--mode", "stereo", "--scene", w / "flat", "--out", w / "s"}) == 0);
    auto s = json::parse(rsr::read_text(w / "s/metrics.json"));
    CHECK(s["metrics"]["abs_err_cm"].get<double>() <= m["metrics"]["abs_err_cm"].get<double>());
    CHECK(fs::exists(w / "s/a_c.pgm"));
    CHECK(fs::exists(w / "s/u.json"));

    CHECK(cli({"run", "--mode", "stereo", "--attention", "forced", "--sampler", "reference", "--scene", w / "flat",
               "--out", w / "f"}) == 0);
}

TEST_CASE("make-weights output loads back into run") {
    Workdir w;
    REQUIRE(cli({"gen-scene", "--seed", "4", "--out", w / "s"}) == 0);
    REQUIRE(cli({"make-weights", "--kind", "mono", "--init", "random", "--seed", "2", "--out", w / "wm"}) == 0);
    CHECK(fs::exists(w / "wm/manifest.json"));
    CHECK(cli({"run", "--mode", "mono", "--inputs", "image", "--scene", w / "s", "--weights", w / "wm", "--out",
               w / "o"}) == 0);
    REQUIRE(cli({"make-weights", "--kind", "stereo", "--init", "readout", "--with-heads", "--out", w / "ws"}) == 0);
    CHECK(cli({"run", "--mode", "stereo", "--inputs", "image", "--scene", w / "s", "--weights", w / "ws", "--out",
               w / "o2", "--threads", "2"}) == 0);
    CHECK(cli({"run", "--mode", "stereo", "--scene", w / "s", "--weights", w / "wm", "--out", w / "o3"}) == 2);
    CHECK(cli({"make-weights", "--kind", "both", "--out", w / "x"}) == 2);
}

TEST_CASE("bench-vt report") {
    Workdir w;
    REQUIRE(cli({"bench-vt", "--profile", "desk", "--reps", "3", "--warmup", "1", "--out", w / "b.json", "--lut-out",
                 w / "luts"}) == 0);
    auto r = json::parse(rsr::read_text(w / "b.json"));
    for (const char* key : {"profile", "grid", "voxels", "reps", "warmup", "build_lut_ms", "gather", "reference",
                            "speedup", "max_abs_diff", "threads"}) {
        CHECK_MESSAGE(r.contains(key), key);
    }
    CHECK(r["gather"].contains("median_ms"));
    CHECK(r["gather"].contains("p95_ms"));
    CHECK(r["max_abs_diff"].get<double>() <= 1e-5);
    CHECK(fs::exists(w / "luts/lut_s4.json"));
    CHECK(cli({"bench-vt", "--reps", "0"}) == 2);
}

TEST_CASE("timing summary") {
    auto t = rsr::cli::summarize({5.0, 1.0, 3.0, 2.0, 4.0});
    CHECK(t.median_ms == 3.0);
    CHECK(t.p95_ms == 5.0);
    auto even = rsr::cli::summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(even.median_ms == 2.5);
}
