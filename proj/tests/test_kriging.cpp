#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "akriging/adaptive.hpp"
#include "akriging/errors.hpp"
#include "akriging/kriging.hpp"
#include "oracles.hpp"

using namespace akriging;
using akriging::testing::brute_force_variance;
using akriging::testing::brute_force_weights;
using akriging::testing::mspe;
using akriging::testing::random_grid_points;

namespace {

const VariogramModel kSpherical{VariogramFamily::Spherical, 0.025, 2.0, 0.5};

GridSpec small_grid()
{
    GridSpec s;
    s.m_min = 0.5;
    s.m_max = 3.0;
    s.m_stride = 0.5;
    s.k_min = 1;
    s.k_max = 30;
    s.k_stride = 1;
    return s;
}

std::vector<Measurement> with_responses(const std::vector<Combination>& locs, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> resp(0.5, 9.0);
    std::vector<Measurement> out;
    for (auto c : locs) {
        out.push_back({c, resp(rng)});
    }
    return out;
}

}  // namespace

TEST_CASE("single-point system")
{
    std::vector<Combination> locs{{1, 10}};
    auto sys = KrigingSystem::assemble(locs, kSpherical, default_grid());
    const auto& g = sys.gamma_matrix();
    REQUIRE(g.rows() == 2);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(0, 1) == 1.0);
    CHECK(g(1, 0) == 1.0);
    CHECK(g(1, 1) == 0.0);

    auto sol = solve(sys, {3, 40}, kSpherical, default_grid());
    CHECK(sol.weights.weights[0] == doctest::Approx(1.0));
    std::vector<Measurement> meas{{{1, 10}, 6.5}};
    auto p = predict(meas, kSpherical, default_grid(), {3, 40}, 0.1);
    CHECK(p.mean == doctest::Approx(6.5));
    CHECK(p.variance == doctest::Approx(2.0 * kSpherical.evaluate(distance({1, 10}, {3, 40}, default_grid()))));
}

TEST_CASE("two-point system structure")
{
    std::vector<Combination> locs{{1, 10}, {2, 20}};
    auto sys = KrigingSystem::assemble(locs, kSpherical, default_grid());
    const auto& g = sys.gamma_matrix();
    double h = distance(locs[0], locs[1], default_grid());
    double v = kSpherical.evaluate(h);
    REQUIRE(g.rows() == 3);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(1, 1) == 0.0);
    CHECK(g(0, 1) == v);
    CHECK(g(1, 0) == v);
    CHECK(g(0, 2) == 1.0);
    CHECK(g(2, 1) == 1.0);
    CHECK(g(2, 2) == 0.0);
}

TEST_CASE("initial-design system is symmetric with zero diagonal")
{
    auto design = default_initial_design();
    auto sys = KrigingSystem::assemble(design, kSpherical, default_grid());
    const auto& g = sys.gamma_matrix();
    REQUIRE(g.rows() == 13);
    for (int i = 0; i < 13; ++i) {
        CHECK(g(i, i) == 0.0);
        for (int j = 0; j < 13; ++j) {
            CHECK(g(i, j) == g(j, i));
        }
    }
}

TEST_CASE("equidistant target gets equal weights")
{
    std::vector<Measurement> meas{{{1, 10}, 2.0}, {{3, 10}, 6.0}};
    OrdinaryKriging ok(meas, kSpherical, default_grid());
    auto sol = ok.solve({2, 10});
    CHECK(sol.weights.weights[0] == doctest::Approx(0.5));
    CHECK(sol.weights.weights[1] == doctest::Approx(0.5));
    CHECK(ok.predict({2, 10}, 0.1).mean == doctest::Approx(4.0));
}

TEST_CASE("weights match the constrained brute-force minimizer")
{
    std::mt19937_64 rng(2024);
    auto spec = small_grid();
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 2 + trial % 6;
        auto pts = random_grid_points(spec, n + 1, rng);
        Combination target = pts.back();
        pts.pop_back();
        for (auto family : kAllFamilies) {
            VariogramModel model{family, 0.025, 2.0, 0.5};
            OrdinaryKriging ok(pts, model, spec);
            auto sol = ok.solve(target);
            auto ref = brute_force_weights(pts, target, model, spec);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(sol.weights.weights[i] == doctest::Approx(ref[i]).epsilon(1e-8).scale(1.0));
            }
            CHECK(sol.variance == doctest::Approx(brute_force_variance(pts, target, model, spec)).epsilon(1e-8));
            double sum = std::accumulate(sol.weights.weights.begin(), sol.weights.weights.end(), 0.0);
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("no random constrained weight vector beats the solved weights")
{
    std::mt19937_64 rng(5);
    auto spec = small_grid();
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 2 + trial % 5;
        auto pts = random_grid_points(spec, n + 1, rng);
        Combination target = pts.back();
        pts.pop_back();
        OrdinaryKriging ok(pts, kSpherical, spec);
        auto w = ok.solve(target).weights.weights;
        double best = mspe(w, pts, target, kSpherical, spec);
        for (int s = 0; s < 10000; ++s) {
            std::vector<double> v(n);
            double sum = 0.0;
            for (auto& x : v) {
                x = z(rng);
                sum += x;
            }
            for (auto& x : v) {
                x += (1.0 - sum) / static_cast<double>(n);
            }
            REQUIRE(mspe(v, pts, target, kSpherical, spec) >= best - 1e-10);
        }
    }
}

TEST_CASE("measured locations are interpolated exactly")
{
    std::mt19937_64 rng(8);
    auto spec = default_grid();
    auto meas = with_responses(random_grid_points(spec, 15, rng), rng);
    OrdinaryKriging ok(meas, kSpherical, spec);
    std::vector<Combination> locs;
    for (const auto& m : meas) {
        locs.push_back(m.location);
    }
    auto preds = ok.predict_grid(locs, 0.1);
    for (std::size_t i = 0; i < meas.size(); ++i) {
        CHECK(preds[i].mean == meas[i].response);
        CHECK(preds[i].variance == 0.0);
        // The linear system itself also reproduces the response.
        auto sol = ok.solve(meas[i].location);
        double mean = 0.0;
        for (std::size_t j = 0; j < meas.size(); ++j) {
            mean += sol.weights.weights[j] * meas[j].response;
        }
        CHECK(std::abs(mean - meas[i].response) < 1e-9);
        CHECK(sol.variance < 1e-9);
    }
}

TEST_CASE("confidence interval arithmetic")
{
    auto p = make_prediction({1, 1}, 4.0, 0.25, 0.1);
    CHECK(p.ci_lower == doctest::Approx(3.1775).epsilon(1e-12));
    CHECK(p.ci_upper == doctest::Approx(4.8225).epsilon(1e-12));
    auto z = make_prediction({1, 1}, 4.0, 0.0, 0.1);
    CHECK(z.ci_lower == 4.0);
    CHECK(z.ci_upper == 4.0);
    CHECK(normal_quantile(0.25) == 1.150);
    CHECK(normal_quantile(0.05) == 1.960);
    CHECK(normal_quantile(0.5) == 0.674);
    CHECK(normal_quantile(0.01) == 2.576);
    CHECK_THROWS_AS(normal_quantile(0.2), ConfigError);
}

TEST_CASE("interval brackets the mean symmetrically")
{
    std::mt19937_64 rng(4);
    auto spec = default_grid();
    auto meas = with_responses(random_grid_points(spec, 12, rng), rng);
    auto grid = build_grid(spec);
    auto preds = predict_grid(meas, kSpherical, spec, grid, 0.1);
    for (const auto& p : preds) {
        CHECK(p.ci_lower <= p.mean);
        CHECK(p.mean <= p.ci_upper);
        CHECK(std::abs((p.ci_upper - p.mean) - (p.mean - p.ci_lower)) < 1e-12);
        CHECK(p.variance >= 0.0);
    }
}

TEST_CASE("scaling the variogram scales variances and keeps means")
{
    std::mt19937_64 rng(21);
    auto spec = small_grid();
    auto meas = with_responses(random_grid_points(spec, 10, rng), rng);
    auto grid = build_grid(spec);
    for (double c : {0.01, 0.5, 3.0, 250.0}) {
        VariogramModel scaled = kSpherical;
        scaled.nugget *= c;
        scaled.sill *= c;
        auto a = predict_grid(meas, kSpherical, spec, grid, 0.1);
        auto b = predict_grid(meas, scaled, spec, grid, 0.1);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(a[i].mean - b[i].mean) < 1e-9);
            CHECK(b[i].variance == doctest::Approx(c * a[i].variance).epsilon(1e-9));
        }
    }
}

TEST_CASE("adding a measurement never increases variance")
{
    std::mt19937_64 rng(31);
    auto spec = small_grid();
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + trial % 8;
        auto pts = random_grid_points(spec, n + 2, rng);
        Combination target = pts.back();
        pts.pop_back();
        auto family = kAllFamilies[trial % 4];
        VariogramModel model{family, 0.05, 1.5, 1.0};
        std::vector<Combination> fewer(pts.begin(), pts.end() - 1);
        double before = OrdinaryKriging(fewer, model, spec).variance(target);
        double after = OrdinaryKriging(pts, model, spec).variance(target);
        CHECK(after <= before + 1e-9);
    }
}

TEST_CASE("batch prediction matches single predictions and is fast")
{
    std::mt19937_64 rng(12);
    auto spec = default_grid();
    auto meas = with_responses(default_initial_design(), rng);
    auto grid = build_grid(spec);
    auto start = std::chrono::steady_clock::now();
    auto batch = predict_grid(meas, kSpherical, spec, grid, 0.1);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 1.0);
    REQUIRE(batch.size() == 720);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto single = predict(meas, kSpherical, spec, grid[i], 0.1);
        CHECK(batch[i].location == grid[i]);
        CHECK(std::abs(batch[i].mean - single.mean) < 1e-12);
        CHECK(std::abs(batch[i].variance - single.variance) < 1e-12);
    }
    CHECK(predict_grid(meas, kSpherical, spec, std::vector<Combination>{}, 0.1).empty());
}

TEST_CASE("duplicate and near-duplicate locations are rejected")
{
    std::vector<Combination> dup{{1, 10}, {2, 20}, {1, 10}};
    CHECK_THROWS_AS(KrigingSystem::assemble(dup, kSpherical, default_grid()), DuplicateLocationError);

    VariogramModel no_nugget{VariogramFamily::Gaussian, 0.0, 2.0, 1.0};
    std::vector<Combination> near{{1, 10}, {3, 30}, {1, 10 + 1e-7}};
    try {
        OrdinaryKriging ok(near, no_nugget, default_grid());
        FAIL("expected a numerical failure");
    } catch (const NumericalError& e) {
        REQUIRE(e.has_pair);
        CHECK(((e.first == near[0] && e.second == near[2]) || (e.first == near[2] && e.second == near[0])));
    }

    VariogramModel flat{VariogramFamily::Spherical, 0.0, 1.0, 0.0};
    std::vector<Combination> two{{1, 10}, {2, 20}};
    CHECK_THROWS_AS(OrdinaryKriging(two, flat, default_grid()), NumericalError);
}

TEST_CASE("negative variance handling")
{
    Eigen::VectorXd d(2), w(2);
    d << 1.0, 1.0;
    w << -0.5e-9, 0.0;
    CHECK(variance_from_solution(d, w) == 0.0);
    w << -1.0, 0.0;
    CHECK_THROWS_AS(variance_from_solution(d, w), NumericalError);
}
