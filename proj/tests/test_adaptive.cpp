#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "akriging/adaptive.hpp"
#include "akriging/errors.hpp"
#include "oracles.hpp"

using namespace akriging;
using akriging::testing::brute_force_variance;
using akriging::testing::random_grid_points;

namespace {

GridSpec line_grid(double k_max)
{
    GridSpec s;
    s.m_min = 1;
    s.m_max = 1;
    s.m_stride = 1;
    s.k_min = 1;
    s.k_max = k_max;
    s.k_stride = 1;
    s.k_scale = 1.0;
    return s;
}

GridSpec square_grid(int n)
{
    GridSpec s;
    s.m_min = 1;
    s.m_max = n;
    s.m_stride = 1;
    s.k_min = 1;
    s.k_max = n;
    s.k_stride = 1;
    s.k_scale = 1.0;
    return s;
}

Prediction interval(double lo, double hi) { return {{1, 1}, 0.5 * (lo + hi), 0.0, lo, hi}; }

ExperimentConfig small_config(double threshold)
{
    ExperimentConfig cfg;
    cfg.grid.m_min = 0.5;
    cfg.grid.m_max = 3.0;
    cfg.grid.k_min = 1;
    cfg.grid.k_max = 30;
    cfg.threshold = threshold;
    cfg.max_iterations = 8;
    cfg.initial_design = {{0.5, 1}, {0.5, 15}, {0.5, 30}, {1.5, 1}, {1.5, 15}, {1.5, 30},
                          {3.0, 1}, {3.0, 15}, {3.0, 30}};
    return cfg;
}

const VariogramModel kModel{VariogramFamily::Spherical, 0.025, 2.0, 0.5};

}  // namespace

TEST_CASE("indicator examples")
{
    CHECK(weight_indicator(interval(4.3, 5.2), 4.0) == 0);
    CHECK(weight_indicator(interval(2.1, 3.9), 4.0) == 0);
    CHECK(weight_indicator(interval(3.5, 4.5), 4.0) == 1);
    CHECK(weight_indicator(interval(3.0, 4.0), 4.0) == 0);
    CHECK(weight_indicator(interval(4.0, 4.5), 4.0) == 1);
}

TEST_CASE("all-zero indicators give zero scores and no selection")
{
    auto spec = square_grid(4);
    std::vector<Combination> measured{{1, 1}, {4, 4}, {2, 3}};
    RefinementCriterion rc(spec, measured, kModel, std::vector<bool>(spec.size(), false));
    for (const auto& [c, s] : rc.all_scores()) {
        CHECK(s == 0.0);
    }
    CHECK_FALSE(rc.select_next().has_value());
}

TEST_CASE("sampling inside an uncertain cluster scores lower")
{
    auto spec = line_grid(11);  // positions x = k - 1 in [0, 10]
    std::vector<Combination> measured{{1, 1}, {1, 11}};
    std::vector<bool> weights(spec.size(), false);
    for (int k : {2, 3, 4}) {
        weights[*spec.index_of({1.0, double(k)})] = true;
    }
    VariogramModel model{VariogramFamily::Spherical, 0.0, 5.0, 1.0};
    RefinementCriterion rc(spec, measured, model, weights);
    CHECK(rc.score({1, 3}) < rc.score({1, 10}));
}

TEST_CASE("score equals the brute-force sum of hypothetical variances")
{
    auto spec = line_grid(5);
    std::vector<Combination> measured{{1, 1}, {1, 5}};
    std::vector<Combination> open{{1, 2}, {1, 3}, {1, 4}};
    for (auto family : kAllFamilies) {
        VariogramModel model{family, 0.1, 2.5, 1.0};
        for (auto method : {HypotheticalVariance::BorderedUpdate, HypotheticalVariance::Refactorize}) {
            RefinementCriterion rc(spec, measured, model, std::vector<bool>(spec.size(), true), method);
            for (auto cand : open) {
                auto augmented = measured;
                augmented.push_back(cand);
                double expected = 0.0;
                for (auto other : open) {
                    if (other != cand) {
                        expected += brute_force_variance(augmented, other, model, spec);
                    }
                }
                CHECK(std::abs(rc.score(cand) - expected) < 1e-10);
            }
        }
    }
}

TEST_CASE("bordered update agrees with refactorization")
{
    std::mt19937_64 rng(17);
    auto spec = default_grid();
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 3; ++trial) {
        auto measured = random_grid_points(spec, 12 + 10 * trial, rng);
        std::vector<bool> weights(spec.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = coin(rng);
        }
        VariogramModel model{kAllFamilies[trial % 4], 0.025, 2.0, 0.5};
        RefinementCriterion rc(spec, measured, model, weights);
        auto grid = build_grid(spec);
        std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
        int checked = 0;
        while (checked < 25) {
            auto c = grid[pick(rng)];
            if (std::find(measured.begin(), measured.end(), c) != measured.end()) {
                continue;
            }
            double a = rc.score(c, HypotheticalVariance::BorderedUpdate);
            double b = rc.score(c, HypotheticalVariance::Refactorize);
            CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)));
            auto t = grid[pick(rng)];
            if (std::find(measured.begin(), measured.end(), t) == measured.end() && t != c) {
                double va = rc.hypothetical_variance(c, t, HypotheticalVariance::BorderedUpdate);
                double vb = rc.hypothetical_variance(c, t, HypotheticalVariance::Refactorize);
                CHECK(std::abs(va - vb) < 1e-10);
            }
            ++checked;
        }
    }
}

TEST_CASE("with all weights set the selection minimizes average kriging variance")
{
    std::mt19937_64 rng(23);
    for (int n = 2; n <= 5; ++n) {
        auto spec = square_grid(n);
        auto grid = build_grid(spec);
        for (int trial = 0; trial < 6; ++trial) {
            auto measured = random_grid_points(spec, 1 + trial % 3, rng);
            VariogramModel model{kAllFamilies[trial % 4], 0.05 * trial, 1.0 + trial, 1.0};
            RefinementCriterion rc(spec, measured, model, std::vector<bool>(spec.size(), true));
            auto sel = rc.select_next();
            REQUIRE(sel.has_value());
            double best = std::numeric_limits<double>::infinity();
            std::vector<double> akv;
            for (auto cand : grid) {
                if (std::find(measured.begin(), measured.end(), cand) != measured.end()) {
                    continue;
                }
                auto augmented = measured;
                augmented.push_back(cand);
                double total = 0.0;
                for (auto t : grid) {
                    if (std::find(augmented.begin(), augmented.end(), t) == augmented.end()) {
                        total += brute_force_variance(augmented, t, model, spec);
                    }
                }
                best = std::min(best, total);
                if (cand == sel->location) {
                    CHECK(std::abs(total - sel->score) < 1e-9);
                }
            }
            CHECK(sel->score <= best + 1e-9);
        }
    }
}

TEST_CASE("equal scores break ties in row-major order")
{
    // Mirror-symmetric layout: candidates (1,k) and (1,6-k) score identically
    // up to rounding.
    auto spec = line_grid(5);
    std::vector<Combination> measured{{1, 3}};
    RefinementCriterion rc(spec, measured, kModel, std::vector<bool>(spec.size(), true));
    auto scores = rc.all_scores();
    REQUIRE(scores.size() == 4);
    CHECK(scores[0].second == doctest::Approx(scores[3].second).epsilon(1e-12));
    CHECK(scores[1].second == doctest::Approx(scores[2].second).epsilon(1e-12));
    auto sel = rc.select_next();
    REQUIRE(sel.has_value());
    CHECK(sel->location.k < 3);
}

TEST_CASE("measured and off-grid candidates are rejected; selection skips measured points")
{
    auto spec = square_grid(4);
    std::vector<Combination> measured{{1, 1}, {2, 2}};
    RefinementCriterion rc(spec, measured, kModel, std::vector<bool>(spec.size(), true));
    CHECK_THROWS_AS(rc.score({1, 1}), PreconditionError);
    CHECK_THROWS_AS(rc.score({1.5, 1}), PreconditionError);

    std::mt19937_64 rng(41);
    for (int t = 0; t < 30; ++t) {
        auto pts = random_grid_points(spec, 1 + t % 14, rng);
        std::vector<bool> w(spec.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = (i + t) % 3 != 0;
        }
        RefinementCriterion r(spec, pts, kModel, w);
        if (auto s = r.select_next()) {
            CHECK(std::find(pts.begin(), pts.end(), s->location) == pts.end());
            CHECK(s->score >= 0.0);
        }
        for (const auto& [c, s] : r.all_scores()) {
            CHECK(s >= 0.0);
        }
    }
}

TEST_CASE("exhausted domain stops")
{
    auto spec = square_grid(2);
    RefinementCriterion rc(spec, build_grid(spec), kModel, std::vector<bool>(spec.size(), true));
    CHECK_FALSE(rc.select_next().has_value());
}

TEST_CASE("stop conditions")
{
    SyntheticLogisticOracle oracle(LogisticParams{}, 0.0);

    auto measure_all = [&](const ExperimentConfig& cfg) {
        auto state = make_initial_state(cfg);
        for (auto c : cfg.initial_design) {
            state.measurements.push_back({c, oracle.evaluate(c)});
        }
        return state;
    };

    SUBCASE("budget reached")
    {
        auto state = measure_all(small_config(4.0));
        state.iteration = state.config.max_iterations;
        CHECK(check_stop(state) == StopReason::Budget);
    }
    SUBCASE("nothing uncertain")
    {
        auto state = measure_all(small_config(100.0));
        state.iteration = 3;
        CHECK(check_stop(state) == StopReason::Natural);
        CHECK_FALSE(select_next(state).has_value());
    }
    SUBCASE("uncertainty remains")
    {
        auto state = measure_all(small_config(4.0));
        state.iteration = 3;
        CHECK(check_stop(state) == StopReason::Continue);
        CHECK(select_next(state).has_value());
    }
}

TEST_CASE("unreachable threshold stops before any adaptive step")
{
    ExperimentConfig cfg;
    cfg.grid = default_grid();
    cfg.threshold = 100.0;
    cfg.initial_design = default_initial_design();
    auto state = make_initial_state(cfg);
    SyntheticLogisticOracle oracle(LogisticParams{}, std::sqrt(0.025), 1);
    auto outcome = run_experiment(state, oracle);
    CHECK(outcome.reason == StopReason::Natural);
    CHECK(state.iteration == 0);
    CHECK(state.history.empty());
    CHECK(state.measurements.size() == 12);
}

TEST_CASE("runs are deterministic and keep the measurement count invariant")
{
    auto cfg = small_config(4.0);
    cfg.seed = 5;
    SyntheticLogisticOracle oracle(LogisticParams{}, std::sqrt(0.025), 5);

    auto a = make_initial_state(cfg);
    std::vector<std::size_t> uncertain_seen;
    RunOptions opts;
    auto outcome = run_experiment(a, oracle, opts);
    auto b = make_initial_state(cfg);
    run_experiment(b, oracle);

    CHECK(a == b);
    CHECK(a.history.size() == static_cast<std::size_t>(a.iteration));
    CHECK(a.measurements.size() == cfg.initial_design.size() + static_cast<std::size_t>(a.iteration));
    CHECK(a.iteration <= cfg.max_iterations);
    if (outcome.reason == StopReason::Budget) {
        CHECK(a.iteration == cfg.max_iterations);
    }
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].iteration == static_cast<int>(i + 1));
        // Each adaptive step happened while uncertain points remained.
        CHECK(a.history[i].n_uncertain > 0);
        CHECK(a.measurements[cfg.initial_design.size() + i].location == a.history[i].chosen);
    }
}

TEST_CASE("run resumes after an interrupted oracle")
{
    struct Flaky final : Oracle {
        SyntheticLogisticOracle inner{LogisticParams{}, std::sqrt(0.025), 9};
        mutable int calls = 0;
        int fail_at;
        explicit Flaky(int f) : fail_at(f) {}
        double evaluate(Combination x) const override
        {
            if (++calls == fail_at) {
                throw OracleMiss(x);
            }
            return inner.evaluate(x);
        }
    };
    auto cfg = small_config(4.0);
    auto reference = make_initial_state(cfg);
    run_experiment(reference, Flaky(-1));

    for (int fail_at : {3, 12, 15}) {
        auto state = make_initial_state(cfg);
        CHECK_THROWS_AS(run_experiment(state, Flaky(fail_at)), OracleMiss);
        CHECK(state.measurements.size() == static_cast<std::size_t>(fail_at - 1));
        run_experiment(state, Flaky(-1));
        CHECK(state == reference);
    }
}

TEST_CASE("config validation")
{
    auto cfg = small_config(4.0);
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.alpha = 0.2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.threshold = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.initial_design.push_back({0.5, 1});
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.initial_design.push_back({0.7, 1});
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
