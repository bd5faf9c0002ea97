#include <doctest.h>

#include <cmath>
#include <random>

#include "rsr/errors.hpp"
#include "rsr/stereo.hpp"
#include "test_util.hpp"

using namespace rsr;

namespace {

Tensor cost_oracle(const Tensor& l, const Tensor& r, std::size_t groups) {
    const auto X = l.dim(0), Y = l.dim(1), Z = l.dim(2), C = l.dim(3), G = C / groups;
    Tensor out({groups, X, Y, Z});
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t a = 0; a < X; ++a)
            for (std::size_t b = 0; b < Y; ++b)
                for (std::size_t c = 0; c < Z; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = g * G; k < (g + 1) * G; ++k)
                        acc += static_cast<double>(l.at({a, b, c, k})) * r.at({a, b, c, k});
                    out.at({g, a, b, c}) = static_cast<float>(acc / static_cast<double>(G));
                }
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

}  // namespace

TEST_CASE("group correlation hand example") {
    Tensor l({1, 1, 1, 2}, {1.0f, 2.0f});
    Tensor r({1, 1, 1, 2}, {3.0f, 4.0f});
    auto v = build_cost_volume(l, r, 1);
    CHECK(v.shape() == Shape{1, 1, 1, 1});
    CHECK(v[0] == 5.5f);
    auto two = build_cost_volume(l, r, 2);
    CHECK(two[0] == 3.0f);
    CHECK(two[1] == 8.0f);
}

TEST_CASE("group correlation matches a scalar loop") {
    std::mt19937_64 rng(12);
    for (std::size_t g : {1u, 2u, 4u, 8u}) {
        auto l = test::random_tensor({3, 2, 4, 8}, rng);
        auto r = test::random_tensor({3, 2, 4, 8}, rng);
        CHECK(max_abs_diff(build_cost_volume(l, r, g), cost_oracle(l, r, g)) <= 1e-6f);
    }
    auto l = test::random_tensor({2, 2, 2, 8}, rng);
    CHECK(max_abs_diff(build_cost_volume(l, Tensor(l.shape()), 4), Tensor({4, 2, 2, 2})) == 0.0f);
    CHECK_THROWS_AS(build_cost_volume(l, l, 3), ArgumentError);
    CHECK_THROWS_AS(build_cost_volume(l, Tensor({2, 2, 2, 4}), 2), ArgumentError);
}

TEST_CASE("self correlation is the per-group mean square") {
    std::mt19937_64 rng(13);
    auto b = test::random_tensor({2, 2, 2, 8}, rng);
    auto v = build_cost_volume(b, b, 2);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t g = 0; g < 2; ++g) {
            double ms = 0.0;
            for (std::size_t k = 0; k < 4; ++k) ms += b[i * 8 + g * 4 + k] * b[i * 8 + g * 4 + k];
            CHECK(v[g * 8 + i] == doctest::Approx(ms / 4).epsilon(1e-6));
        }
}

TEST_CASE("spatial attention") {
    std::mt19937_64 rng(14);
    auto b = test::random_tensor({5, 6, 3, 4}, rng);
    auto a = spatial_attention(b, Tensor({1, 2, 1, 7, 7}));
    CHECK(a.shape() == Shape{5, 6, 3, 1});
    for (float v : a.values()) CHECK(v == 0.5f);

    // 3x3 kernel on a 3x3 slab against a hand loop
    auto slab = test::random_tensor({3, 3, 1, 2}, rng);
    auto k = test::random_tensor({1, 2, 1, 3, 3}, rng);
    auto got = spatial_attention(slab, k);
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t y = 0; y < 3; ++y) {
            double acc = 0.0;
            for (int dx = -1; dx <= 1; ++dx)
                for (int dy = -1; dy <= 1; ++dy) {
                    const int px = static_cast<int>(x) + dx, py = static_cast<int>(y) + dy;
                    if (px < 0 || py < 0 || px > 2 || py > 2) continue;
                    const float c0 = slab.at({std::size_t(px), std::size_t(py), 0, 0});
                    const float c1 = slab.at({std::size_t(px), std::size_t(py), 0, 1});
                    acc += k.at({0, 0, 0, std::size_t(dy + 1), std::size_t(dx + 1)}) * 0.5 * (c0 + c1) +
                           k.at({0, 1, 0, std::size_t(dy + 1), std::size_t(dx + 1)}) * std::max(c0, c1);
                }
            CHECK(got.at({x, y, 0, 0}) == doctest::Approx(test::logistic(acc)).epsilon(1e-6));
        }

    // saturated logits stay strictly inside (0, 1)
    Tensor huge({2, 2, 1, 1}, 1e4f);
    auto sat = spatial_attention(huge, Tensor({1, 2, 1, 3, 3}, 1.0f));
    for (float v : sat.values()) CHECK((v > 0.0f && v < 1.0f));
    CHECK_THROWS_AS(spatial_attention(b, Tensor({1, 3, 1, 7, 7})), ArgumentError);
}

TEST_CASE("attention products") {
    std::mt19937_64 rng(15);
    auto v = test::random_tensor({2, 3, 3, 4}, rng);
    auto ones = Tensor({3, 3, 4, 1}, 1.0f);
    CHECK(max_abs_diff(apply_sae(v, ones), v) == 0.0f);
    auto half = apply_sae(v, Tensor({3, 3, 4, 1}, 0.5f));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(half[i] == 0.5f * v[i]);
    auto a = test::random_tensor({3, 3, 4, 1}, rng, 0, 1);
    auto e = apply_sae(v, a);
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < 36; ++i) CHECK(e[g * 36 + i] == a[i] * v[g * 36 + i]);

    CHECK(max_abs_diff(apply_cag(v, Tensor({3, 3}, 1.0f)), v) == 0.0f);
    auto ac = test::random_tensor({3, 3}, rng, 0, 1);
    auto c = apply_cag(v, ac);
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t col = 0; col < 9; ++col)
            for (std::size_t j = 0; j < 4; ++j) CHECK(c[(g * 9 + col) * 4 + j] == ac[col] * v[(g * 9 + col) * 4 + j]);
    CHECK_THROWS_AS(apply_cag(v, Tensor({3, 4})), ArgumentError);
    CHECK_THROWS_AS(apply_sae(v, Tensor({3, 3, 4, 2})), ArgumentError);
}

TEST_CASE("confidence attention hand case") {
    const std::vector<double> z{-0.05, 0.05};
    auto f = confidence_attention(Tensor({1, 1, 1, 2}), z, -1.0, 0.0);
    CHECK(std::abs(f.expectation[0]) < 1e-9);
    CHECK(std::abs(f.variance[0] - 0.0025) < 1e-9);
    CHECK(f.values[0] == doctest::Approx(test::logistic(-0.0025)).epsilon(1e-7));
}

TEST_CASE("confidence attention of a peaked distribution") {
    const std::vector<double> z{-0.1, 0.0, 0.1, 0.2};
    for (std::size_t j = 0; j < 4; ++j) {
        Tensor v({2, 1, 1, 4});
        v[j] = 300.0f;
        v[4 + j] = 300.0f;
        auto f = confidence_attention(v, z, -5.0, 0.7);
        CHECK(f.variance[0] == 0.0f);
        CHECK(f.values[0] == static_cast<float>(test::logistic(0.7)));
        CHECK(f.expectation[0] == static_cast<float>(z[j]));
    }
}

TEST_CASE("confidence attention properties") {
    std::mt19937_64 rng(16);
    const std::vector<double> z{-0.15, -0.05, 0.05, 0.15};
    auto v = test::random_tensor({4, 5, 5, 4}, rng, -5, 5);
    auto f = confidence_attention(v, z, -1.0, 0.0);
    for (std::size_t c = 0; c < 25; ++c) {
        CHECK(f.variance[c] >= 0.0f);
        CHECK((f.values[c] > 0.0f && f.values[c] < 1.0f));
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) sum += f.probability[c * 4 + j];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
    auto flat = confidence_attention(Tensor({2, 3, 3, 4}, 0.3f), z, -2.0, 0.1);
    for (std::size_t c = 1; c < 9; ++c) CHECK(flat.values[c] == flat.values[0]);
    CHECK_THROWS_AS(confidence_attention(v, std::vector<double>{0.0}, -1.0, 0.0), ArgumentError);
}

TEST_CASE("stride-2 up and down convs are adjoint") {
    std::mt19937_64 rng(17);
    for (auto dims : {std::array<std::size_t, 3>{5, 6, 4}, std::array<std::size_t, 3>{4, 7, 3}}) {
        auto k = test::random_tensor({1, 1, 3, 3, 3}, rng);
        auto x = test::random_tensor({dims[0], dims[1], dims[2], 1}, rng);
        auto dx = conv3d_down2(x, k);
        auto y = test::random_tensor(dx.shape(), rng);
        auto uy = conv3d_up2(y, k, dims);
        CHECK(uy.shape() == x.shape());
        CHECK(dot(dx, y) == doctest::Approx(dot(x, uy)).epsilon(1e-5));
    }
}

TEST_CASE("aggregation") {
    std::mt19937_64 rng(18);
    auto v = test::random_tensor({1, 4, 5, 6}, rng);
    auto id = AggregationWeights::identity(1);
    CHECK(max_abs_diff(aggregate(v, id), v.reshaped({4, 5, 6})) == 0.0f);

    auto g4 = test::random_tensor({4, 3, 3, 5}, rng);
    auto mean = aggregate(g4, AggregationWeights::identity(4));
    for (std::size_t i = 0; i < 45; ++i) {
        double m = 0.0;
        for (std::size_t g = 0; g < 4; ++g) m += g4[g * 45 + i];
        CHECK(mean[i] == doctest::Approx(m / 4).epsilon(1e-5));
    }

    AggregationWeights zero = AggregationWeights::identity(4);
    zero.head = Tensor({1, 4, 1, 1, 1});
    CHECK(max_abs_diff(aggregate(g4, zero), Tensor({3, 3, 5})) == 0.0f);

    // one linear layer plus head against the loop oracle
    AggregationWeights one;
    one.init.push_back(test::random_tensor({2, 1, 3, 3, 3}, rng));
    one.head = Tensor({1, 2, 1, 1, 1}, {1.0f, 0.0f});
    auto cube = test::random_tensor({1, 3, 3, 3}, rng);
    auto want = test::conv3d_oracle(cube.reshaped({3, 3, 3, 1}), one.init[0]);
    auto got = aggregate(cube, one);
    for (std::size_t i = 0; i < 27; ++i) CHECK(got[i] == doctest::Approx(want[i * 2]).epsilon(1e-5));

    AggregationWeights bad = AggregationWeights::identity(2);
    CHECK_THROWS_AS(aggregate(g4, bad), ArgumentError);
}

TEST_CASE("disparity regression") {
    const std::vector<double> z{-0.05, 0.05};
    Tensor v({1, 1, 2}, {0.0f, std::log(3.0f)});
    CHECK(regress_disparity(v, z).values[0] == doctest::Approx(0.025).epsilon(1e-6));
    const std::vector<double> sym{-0.1, 0.0, 0.1};
    CHECK(std::abs(regress_disparity(Tensor({2, 2, 3}), sym).values[0]) < 1e-7);
    for (std::size_t j = 0; j < 3; ++j) {
        Tensor peak({1, 1, 3});
        peak[j] = 500.0f;
        CHECK(regress_disparity(peak, sym).values[0] == static_cast<float>(sym[j]));
    }
    CHECK_THROWS_AS(regress_disparity(v, std::vector<double>{0.05, -0.05}), ArgumentError);
    CHECK_THROWS_AS(regress_disparity(v, std::vector<double>{0.0, NAN}), ArgumentError);
}
