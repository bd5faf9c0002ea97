#include <doctest.h>

#include <cmath>
#include <random>

#include "rsr/discretization.hpp"
#include "rsr/errors.hpp"
#include "test_util.hpp"

using namespace rsr;

namespace {

void check_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("shuttle bins, linear exponent") {
    auto b = shuttle_bins(4, 0.2, 1.0);
    check_close(b.edges, {0.2, 0.1, 0.0, -0.1, -0.2}, 1e-9);
    check_close(b.centers, {0.15, 0.05, -0.05, -0.15}, 1e-9);
}

TEST_CASE("shuttle bins, quadratic exponent") {
    auto b = shuttle_bins(4, 0.2, 2.0);
    check_close(b.edges, {0.2, 0.05, 0.0, -0.05, -0.2}, 1e-9);
    check_close(b.centers, {0.125, 0.025, -0.025, -0.125}, 1e-9);
    CHECK(b.edges[2] == 0.0);
}

TEST_CASE("shuttle with alpha 1 is uniform") {
    for (int n : {2, 8, 80}) {
        auto s = shuttle_bins(n, 0.2, 1.0);
        auto u = uniform_bins(n, 0.2);
        check_close(s.edges, u.edges, 1e-6);
        check_close(s.centers, u.centers, 1e-6);
    }
}

TEST_CASE("uniform bins") {
    auto two = uniform_bins(2, 0.2);
    check_close(two.edges, {0.2, 0.0, -0.2}, 1e-12);
    check_close(two.centers, {0.1, -0.1}, 1e-12);
    auto four = uniform_bins(4, 0.2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(four.edges[i] - four.edges[i + 1] == doctest::Approx(0.1));
}

TEST_CASE("bin properties") {
    for (int n : {2, 6, 40, 80}) {
        for (double alpha : {1.0, 1.5, 3.0}) {
            auto b = shuttle_bins(n, 0.3, alpha);
            CHECK(b.count() == static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < b.count(); ++i) {
                CHECK(b.centers[i] == doctest::Approx(-b.centers[b.count() - 1 - i]).epsilon(1e-12));
                CHECK(b.edges[i] > b.edges[i + 1]);
            }
            // dense near zero: the middle bins are the narrowest
            if (alpha > 1.0 && n >= 4) {
                const double mid = b.edges[b.count() / 2 - 1] - b.edges[b.count() / 2];
                CHECK(mid < b.edges[0] - b.edges[1]);
            }
        }
    }
}

TEST_CASE("bin arguments are checked") {
    CHECK_THROWS_AS(shuttle_bins(3, 0.2, 1.0), ArgumentError);
    CHECK_THROWS_AS(shuttle_bins(0, 0.2, 1.0), ArgumentError);
    CHECK_THROWS_AS(shuttle_bins(4, -0.2, 1.0), ArgumentError);
    CHECK_THROWS_AS(shuttle_bins(4, 0.2, 0.0), ArgumentError);
    CHECK(parse_bin_mode("uniform") == BinMode::Uniform);
    CHECK_THROWS_AS(parse_bin_mode("log"), ArgumentError);
}

TEST_CASE("elevation regression") {
    auto b = uniform_bins(2, 0.2);
    Tensor p({1, 1, 2}, {0.25f, 0.75f});
    CHECK(regress_elevation(p, b).values[0] == doctest::Approx(-0.05).epsilon(1e-6));

    auto s = shuttle_bins(8, 0.2, 1.5);
    for (std::size_t i = 0; i < 8; ++i) {
        Tensor onehot({1, 1, 8});
        onehot[i] = 1.0f;
        CHECK(regress_elevation(onehot, s).values[0] == static_cast<float>(s.centers[i]));
    }
    Tensor uniform({2, 3, 8}, 1.0f / 8.0f);
    for (float v : regress_elevation(uniform, s).values) CHECK(std::abs(v) < 1e-6);

    std::mt19937_64 rng(4);
    auto r = regress_elevation(test::random_distribution({4, 4, 8}, rng, 8.0f), s);
    for (float v : r.values) {
        CHECK(v <= s.max_center());
        CHECK(v >= s.min_center());
    }
    CHECK_THROWS_AS(regress_elevation(Tensor({1, 1, 4}), s), ArgumentError);
}

TEST_CASE("elevation targets") {
    auto b = shuttle_bins(8, 0.2, 1.5);
    ElevationMap gt(1, 4);
    gt.values = {static_cast<float>(b.centers[3]), 2.0f, -2.0f, 0.0f};
    gt.mask = {1, 1, 1, 0};
    auto t = elevation_to_target(gt, b);
    CHECK(t[0] == 3);
    CHECK(t[1] == 0);
    CHECK(t[2] == 7);
    CHECK(t[3] == kIgnoreIndex);
}

TEST_CASE("elevation target ties go to the lower index") {
    auto b = uniform_bins(4, 0.2);  // centers 0.15, 0.05, -0.05, -0.15
    ElevationMap gt(1, 1);
    gt.values[0] = 0.0f;
    CHECK(elevation_to_target(gt, b)[0] == 1);
    gt.values[0] = 0.1f;
    CHECK(elevation_to_target(gt, b)[0] == 0);
}

TEST_CASE("elevation map tensor round trip") {
    ElevationMap m(2, 3, 0.5f);
    m.mask[4] = 0;
    auto back = ElevationMap::from_tensor(m.as_tensor(), nullptr);
    CHECK(back.values == m.values);
    auto mt = m.mask_tensor();
    auto masked = ElevationMap::from_tensor(m.as_tensor(), &mt);
    CHECK(masked.mask == m.mask);
}
