#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "rsr/errors.hpp"
#include "rsr/view_transform.hpp"
#include "test_util.hpp"

using namespace rsr;

namespace {

// Camera frame equals world frame: x right, y down, z forward.
CameraIntrinsics k96() { return {100.0, 100.0, 48.0, 32.0, 96, 64}; }
DepthBinSpec unit_bins() { return {1.0, 9.0, 8}; }  // centers 1.5, 2.5, ...

VoxelGrid single_voxel(double x, double y, double z) {
    const double h = 0.01;
    return make_grid({AxisRange{x - h, x + h}, AxisRange{y - h, y + h}, AxisRange{z - h, z + h}}, {2 * h, 2 * h, 2 * h});
}

// Bilinear feature read with zero padding, in double.
double bilinear(const Tensor& f, double col, double row, std::size_t ch) {
    double acc = 0.0;
    const double c0 = std::floor(col), r0 = std::floor(row);
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            const double r = r0 + dy, c = c0 + dx;
            if (r < 0 || c < 0 || r >= static_cast<double>(f.dim(0)) || c >= static_cast<double>(f.dim(1))) continue;
            const double w = (1 - std::abs(col - c)) * (1 - std::abs(row - r));
            acc += w * f.at({static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch});
        }
    return acc;
}

}  // namespace

TEST_CASE("voxel on a pixel center and a depth-bin center uses one tap") {
    // u = 50 is the center of stride-4 column 12; depth 4.5 is bin 3's center
    auto g = single_voxel(0.02 * 4.5, 0.02 * 4.5, 4.5);
    auto lut = build_lut(g, k96(), CameraExtrinsics{}, FeatureDims::for_image(k96(), 4), unit_bins());
    REQUIRE(lut.valid[0] == 1);
    CHECK(lut.feat_weight[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lut.feat_index[0] == 8 * 24 + 12);
    for (int t = 1; t < 4; ++t) CHECK(std::abs(lut.feat_weight[t]) < 1e-6);
    CHECK(lut.depth_weight[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lut.depth_index[0] == (8 * 24 + 12) * 8 + 3);
}

TEST_CASE("voxel between two columns splits the weight") {
    auto g = single_voxel(0.04 * 4.5, 0.02 * 4.5, 4.5);
    auto lut = build_lut(g, k96(), CameraExtrinsics{}, FeatureDims::for_image(k96(), 4), unit_bins());
    REQUIRE(lut.valid[0] == 1);
    CHECK(lut.feat_weight[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(lut.feat_weight[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(lut.feat_index[1] == lut.feat_index[0] + 1);
}

TEST_CASE("culled voxels are invalid with zero weights") {
    auto behind = single_voxel(0.0, 0.0, -3.0);
    auto lut = build_lut(behind, k96(), CameraExtrinsics{}, FeatureDims::for_image(k96(), 4), unit_bins());
    CHECK(lut.valid[0] == 0);
    for (float w : lut.feat_weight) CHECK(w == 0.0f);
    for (float w : lut.depth_weight) CHECK(w == 0.0f);
    // outside the image, and beyond the depth range
    auto side = single_voxel(10.0, 0.0, 4.0);
    CHECK(build_lut(side, k96(), {}, FeatureDims::for_image(k96(), 4), unit_bins()).valid_count() == 0);
    auto far = single_voxel(0.0, 0.0, 20.0);
    CHECK(build_lut(far, k96(), {}, FeatureDims::for_image(k96(), 4), unit_bins()).valid_count() == 0);
    std::mt19937_64 rng(1);
    auto f = test::random_tensor({16, 24, 3}, rng);
    auto d = test::random_distribution({16, 24, 8}, rng);
    auto out = gather_voxels(lut, f, d);
    CHECK(max_abs_diff(out, Tensor({1, 1, 1, 3})) == 0.0f);
}

TEST_CASE("gather matches the float64 sampler on random inputs") {
    auto config = PipelineConfig::desk();
    auto grid = config.grid.make();
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        auto rig = test::jittered_rig(config, rng);
        for (std::size_t s : config.scales) {
            auto dims = FeatureDims::for_image(rig.intrinsics, s);
            auto f = test::random_tensor({dims.height, dims.width, 5}, rng);
            auto d = test::random_distribution({dims.height, dims.width, config.depth.bins}, rng);
            auto lut = build_lut(grid, rig.intrinsics, rig.extrinsics, dims, config.depth);
            auto a = gather_voxels(lut, f, d);
            auto b = sample_voxels_reference(grid, rig.intrinsics, rig.extrinsics, dims, config.depth, f, d);
            CHECK(max_abs_diff(a, b) <= 1e-5f);
        }
    }
}

TEST_CASE("uniform depth scales the bilinear feature by 1/C_d") {
    auto config = PipelineConfig::desk();
    auto grid = config.grid.make();
    auto rig = config.camera.left();
    auto dims = FeatureDims::for_image(rig.intrinsics, 4);
    std::mt19937_64 rng(2);
    auto f = test::random_tensor({dims.height, dims.width, 3}, rng);
    const auto cd = config.depth.bins;
    Tensor d({dims.height, dims.width, cd}, 1.0f / static_cast<float>(cd));
    auto lut = build_lut(grid, rig.intrinsics, rig.extrinsics, dims, config.depth);
    auto out = gather_voxels(lut, f, d);
    std::size_t checked = 0;
    for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
        if (!lut.valid[v]) continue;
        bool interior = true;
        for (std::size_t t = 0; t < kDepthTaps; ++t) interior &= lut.depth_index[v * kDepthTaps + t] != kNoTap;
        if (!interior) continue;
        auto px = project_point(grid.voxel_center(v), rig.intrinsics, rig.extrinsics);
        for (std::size_t c = 0; c < 3; ++c) {
            const double expect = bilinear(f, px.u / 4 - 0.5, px.v / 4 - 0.5, c) / static_cast<double>(cd);
            CHECK(std::abs(out[v * 3 + c] - expect) < 1e-6);
        }
        ++checked;
    }
    CHECK(checked > grid.voxel_count() / 2);
}

TEST_CASE("one-hot depth only reaches voxels in that bin's support") {
    auto config = PipelineConfig::desk();
    auto grid = config.grid.make();
    auto rig = config.camera.left();
    auto dims = FeatureDims::for_image(rig.intrinsics, 4);
    Tensor f({dims.height, dims.width, 1}, 1.0f);
    const std::size_t k = 8;
    Tensor d({dims.height, dims.width, config.depth.bins});
    for (std::size_t p = 0; p < dims.height * dims.width; ++p) d[p * config.depth.bins + k] = 1.0f;
    auto lut = build_lut(grid, rig.intrinsics, rig.extrinsics, dims, config.depth);
    auto out = gather_voxels(lut, f, d);
    auto ref = sample_voxels_reference(grid, rig.intrinsics, rig.extrinsics, dims, config.depth, f, d);
    CHECK(max_abs_diff(out, ref) <= 1e-5f);
    std::size_t nonzero = 0;
    for (std::size_t v = 0; v < grid.voxel_count(); ++v) {
        if (out[v] == 0.0f) continue;
        ++nonzero;
        auto px = project_point(grid.voxel_center(v), rig.intrinsics, rig.extrinsics);
        CHECK(std::abs(config.depth.coordinate(px.d) - static_cast<double>(k)) < 1.0);
    }
    CHECK(nonzero > 0);
}

TEST_CASE("zero features give zero voxels") {
    auto config = PipelineConfig::desk();
    auto grid = config.grid.make();
    auto rig = config.camera.left();
    auto dims = FeatureDims::for_image(rig.intrinsics, 8);
    std::mt19937_64 rng(4);
    auto d = test::random_distribution({dims.height, dims.width, config.depth.bins}, rng);
    Tensor f({dims.height, dims.width, 2});
    auto lut = build_lut(grid, rig.intrinsics, rig.extrinsics, dims, config.depth);
    CHECK(max_abs_diff(gather_voxels(lut, f, d), Tensor({grid.nx(), grid.ny(), grid.nz(), 2})) == 0.0f);
    CHECK(max_abs_diff(sample_voxels_reference(grid, rig.intrinsics, rig.extrinsics, dims, config.depth, f, d),
                       Tensor({grid.nx(), grid.ny(), grid.nz(), 2})) == 0.0f);
}

TEST_CASE("voxels on one ray are told apart by depth") {
    // the optical axis: several voxels, one pixel
    auto grid = make_grid({AxisRange{-0.01, 0.01}, AxisRange{-0.01, 0.01}, AxisRange{2.0, 6.0}}, {0.02, 0.02, 0.5});
    auto dims = FeatureDims::for_image(k96(), 4);
    auto bins = unit_bins();
    std::mt19937_64 rng(8);
    auto f = test::random_tensor({dims.height, dims.width, 4}, rng, 0.5f, 1.5f);
    auto lut = build_lut(grid, k96(), {}, dims, bins);
    REQUIRE(lut.valid_count() == grid.voxel_count());
    auto varied = gather_voxels(lut, f, test::random_distribution({dims.height, dims.width, bins.bins}, rng));
    for (std::size_t a = 0; a + 1 < grid.nz(); ++a)
        for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(varied[a * 4 + c] - varied[(a + 1) * 4 + c]) > 1e-6);
}

TEST_CASE("multi-scale fusion") {
    std::mt19937_64 rng(9);
    std::vector<Tensor> three{test::random_tensor({2, 3, 4, 8}, rng), test::random_tensor({2, 3, 4, 8}, rng),
                              test::random_tensor({2, 3, 4, 8}, rng)};
    auto cat = fuse_multiscale(three, Fusion::Concat);
    CHECK(cat.dim(3) == 24);
    CHECK(cat.at({1, 2, 3, 9}) == three[1].at({1, 2, 3, 1}));
    std::vector<Tensor> one{three[0]};
    CHECK(max_abs_diff(fuse_multiscale(one, Fusion::Concat), three[0]) == 0.0f);
    std::vector<Tensor> two{three[0], three[0]};
    auto plus = fuse_multiscale(two, Fusion::Plus);
    for (std::size_t i = 0; i < plus.size(); ++i) CHECK(plus[i] == 2.0f * three[0][i]);
    CHECK(parse_fusion("plus") == Fusion::Plus);
    CHECK_THROWS_AS(parse_fusion("sum"), ArgumentError);
}

TEST_CASE("BEV flatten layout and round trip") {
    std::mt19937_64 rng(10);
    auto b = test::random_tensor({2, 2, 3, 4}, rng);
    auto bev = flatten_to_bev(b);
    CHECK(bev.shape() == Shape{2, 2, 12});
    CHECK(bev.at({1, 0, 2 * 4 + 1}) == b.at({1, 0, 2, 1}));
    CHECK(max_abs_diff(unflatten_from_bev(bev, 3), b) == 0.0f);
    auto flat = test::random_tensor({2, 2, 1, 5}, rng);
    CHECK(flatten_to_bev(flat).buffer() == flat.buffer());
}

TEST_CASE("LUT save and load") {
    auto config = PipelineConfig::desk();
    auto rig = config.camera.left();
    auto lut = build_lut(config.grid.make(), rig.intrinsics, rig.extrinsics, FeatureDims::for_image(rig.intrinsics, 4),
                         config.depth);
    auto dir = std::filesystem::temp_directory_path() / "rsr_lut_test";
    std::filesystem::create_directories(dir);
    save_lut(dir / "lut", lut);
    auto back = load_lut(dir / "lut");
    CHECK(back.valid == lut.valid);
    CHECK(back.feat_index == lut.feat_index);
    CHECK(back.depth_weight == lut.depth_weight);
    CHECK(back.feat.stride == 4);
    std::filesystem::remove_all(dir);
    CHECK_THROWS(load_lut(dir / "lut"));
}
