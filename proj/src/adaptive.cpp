#include "akriging/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "akriging/errors.hpp"

namespace akriging {

void ExperimentConfig::validate() const
{
    grid.validate();
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw ConfigError("threshold must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }
    normal_quantile(alpha);
    if (max_iterations < 1) {
        throw ConfigError("max_iterations must be >= 1");
    }
    if (initial_design.size() < 2) {
        throw ConfigError("initial_design needs at least 2 combinations");
    }
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < initial_design.size(); ++i) {
        auto idx = grid.index_of(initial_design[i]);
        if (!idx) {
            throw ConfigError("initial_design[" + std::to_string(i) + "] " + to_string(initial_design[i]) +
                              " is not a grid point");
        }
        if (!seen.insert(*idx).second) {
            throw ConfigError("initial_design[" + std::to_string(i) + "] " + to_string(initial_design[i]) +
                              " is listed twice");
        }
    }
}

std::vector<Combination> default_initial_design()
{
    std::vector<Combination> design;
    for (double m : {0.5, 2.0, 4.0, 6.0}) {
        for (double k : {10.0, 30.0, 60.0}) {
            design.push_back({m, k});
        }
    }
    return design;
}

std::vector<Combination> ExperimentState::pending_initial() const
{
    std::vector<Combination> pending;
    for (const auto& c : config.initial_design) {
        if (!is_measured(c)) {
            pending.push_back(c);
        }
    }
    return pending;
}

bool ExperimentState::is_measured(Combination c) const
{
    return std::any_of(measurements.begin(), measurements.end(),
                       [&](const Measurement& meas) { return meas.location == c; });
}

int weight_indicator(const Prediction& pred, double threshold)
{
    return (pred.ci_lower > threshold || pred.ci_upper <= threshold) ? 0 : 1;
}

SurfaceFit fit_surface(const ExperimentConfig& config, std::span<const Measurement> measurements)
{
    SurfaceFit fit;
    fit.variogram = select_model(default_empirical_variogram(measurements, config.grid));
    fit.grid = build_grid(config.grid);

    OrdinaryKriging kriging(measurements, fit.variogram.model, config.grid);
    fit.predictions = kriging.predict_grid(fit.grid, config.alpha);

    fit.measured.assign(fit.grid.size(), false);
    for (const auto& meas : measurements) {
        auto idx = config.grid.index_of(meas.location);
        if (!idx) {
            throw PreconditionError("measurement " + to_string(meas.location) + " is not a grid point");
        }
        fit.measured[*idx] = true;
    }
    fit.uncertain.assign(fit.grid.size(), false);
    for (std::size_t i = 0; i < fit.grid.size(); ++i) {
        if (fit.measured[i]) {
            continue;
        }
        ++fit.n_unmeasured;
        if (weight_indicator(fit.predictions[i], config.threshold) == 1) {
            fit.uncertain[i] = true;
            ++fit.n_uncertain;
        }
    }
    return fit;
}

namespace {

std::vector<Combination> locations_of(std::span<const Measurement> measurements)
{
    std::vector<Combination> out;
    for (const auto& meas : measurements) {
        out.push_back(meas.location);
    }
    return out;
}

double clamp_variance(double v)
{
    if (v < 0.0) {
        if (v < -1e-9) {
            throw NumericalError("negative hypothetical kriging variance " + std::to_string(v));
        }
        return 0.0;
    }
    return v;
}

// Relative gap below which two scores are treated as tied.
constexpr double kScoreTieTolerance = 1e-12;

}  // namespace

RefinementCriterion::RefinementCriterion(const GridSpec& grid,
                                         std::span<const Combination> measured,
                                         const VariogramModel& model,
                                         std::vector<bool> weights,
                                         HypotheticalVariance method)
    : spec_(grid),
      model_(model),
      method_(method),
      grid_(build_grid(grid)),
      measured_locations_(measured.begin(), measured.end()),
      kriging_(measured, model, grid)
{
    if (weights.size() != grid_.size()) {
        throw PreconditionError("indicator weights must cover every grid point");
    }
    measured_.assign(grid_.size(), false);
    for (const auto& loc : measured_locations_) {
        auto idx = spec_.index_of(loc);
        if (!idx) {
            throw PreconditionError("measured location " + to_string(loc) + " is not a grid point");
        }
        measured_[*idx] = true;
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (weights[i] && !measured_[i]) {
            weighted_.push_back(i);
        }
    }

    auto rows = static_cast<Eigen::Index>(measured_locations_.size() + 1);
    Eigen::MatrixXd rhs(rows, static_cast<Eigen::Index>(weighted_.size()));
    for (std::size_t j = 0; j < weighted_.size(); ++j) {
        rhs.col(static_cast<Eigen::Index>(j)) = kriging_.rhs(grid_[weighted_[j]]);
    }
    weighted_solutions_ = kriging_.solve_columns(rhs);
    weighted_variances_.resize(static_cast<Eigen::Index>(weighted_.size()));
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
        weighted_variances_[j] = clamp_variance(rhs.col(j).dot(weighted_solutions_.col(j)));
    }
}

RefinementCriterion::RefinementCriterion(const ExperimentConfig& config,
                                         std::span<const Measurement> measurements,
                                         const SurfaceFit& fit)
    : RefinementCriterion(config.grid, locations_of(measurements), fit.variogram.model, fit.uncertain,
                          config.method)
{
}

std::size_t RefinementCriterion::candidate_index(Combination candidate) const
{
    auto idx = spec_.index_of(candidate);
    if (!idx) {
        throw PreconditionError("candidate " + to_string(candidate) + " is not a grid point");
    }
    if (measured_[*idx]) {
        throw PreconditionError("candidate " + to_string(candidate) + " is already measured");
    }
    return *idx;
}

double RefinementCriterion::score(Combination candidate) const
{
    return score(candidate, method_);
}

double RefinementCriterion::score(Combination candidate, HypotheticalVariance method) const
{
    auto idx = candidate_index(candidate);
    return method == HypotheticalVariance::BorderedUpdate ? score_bordered(idx) : score_refactorized(idx);
}

double RefinementCriterion::score_bordered(std::size_t candidate) const
{
    // Adding c borders Gamma with D_c; the Schur complement is -sigma^2(c) and
    // sigma^2_new(x) = sigma^2(x) - (D_x^T Gamma^{-1} D_c - gamma(x, c))^2 / sigma^2(c).
    Combination c = grid_[candidate];
    Eigen::VectorXd d_c = kriging_.rhs(c);
    Eigen::VectorXd z_c = kriging_.solve_columns(d_c);
    double var_c = d_c.dot(z_c);
    double scale = model_.nugget + model_.sill;
    if (!(var_c > 1e-12 * std::max(scale, 1e-300))) {
        return score_refactorized(candidate);
    }

    double total = 0.0;
    for (std::size_t j = 0; j < weighted_.size(); ++j) {
        std::size_t x = weighted_[j];
        if (x == candidate) {
            continue;
        }
        auto col = static_cast<Eigen::Index>(j);
        double cross = weighted_solutions_.col(col).dot(d_c) - model_.evaluate(distance(grid_[x], c, spec_));
        total += clamp_variance(weighted_variances_[col] - cross * cross / var_c);
    }
    return total;
}

double RefinementCriterion::score_refactorized(std::size_t candidate) const
{
    std::vector<Combination> augmented = measured_locations_;
    augmented.push_back(grid_[candidate]);
    OrdinaryKriging kriging(std::span<const Combination>(augmented), model_, spec_);
    double total = 0.0;
    for (std::size_t x : weighted_) {
        if (x != candidate) {
            total += kriging.variance(grid_[x]);
        }
    }
    return total;
}

double RefinementCriterion::hypothetical_variance(Combination candidate,
                                                  Combination target,
                                                  HypotheticalVariance method) const
{
    auto idx = candidate_index(candidate);
    Combination c = grid_[idx];
    if (method == HypotheticalVariance::Refactorize) {
        std::vector<Combination> augmented = measured_locations_;
        augmented.push_back(c);
        return OrdinaryKriging(std::span<const Combination>(augmented), model_, spec_).variance(target);
    }
    Eigen::VectorXd d_c = kriging_.rhs(c);
    Eigen::VectorXd z_c = kriging_.solve_columns(d_c);
    double var_c = d_c.dot(z_c);
    Eigen::VectorXd d_x = kriging_.rhs(target);
    Eigen::VectorXd z_x = kriging_.solve_columns(d_x);
    double var_x = clamp_variance(d_x.dot(z_x));
    if (!(var_c > 0.0)) {
        return var_x;
    }
    double cross = z_x.dot(d_c) - model_.evaluate(distance(target, c, spec_));
    return clamp_variance(var_x - cross * cross / var_c);
}

std::vector<std::pair<Combination, double>> RefinementCriterion::all_scores() const
{
    std::vector<std::pair<Combination, double>> out;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (!measured_[i]) {
            out.emplace_back(grid_[i],
                             method_ == HypotheticalVariance::BorderedUpdate ? score_bordered(i)
                                                                            : score_refactorized(i));
        }
    }
    return out;
}

std::optional<RefinementCriterion::Selection> RefinementCriterion::select_next() const
{
    if (weighted_.empty()) {
        return std::nullopt;
    }
    auto scores = all_scores();
    if (scores.empty()) {
        return std::nullopt;
    }
    // Scores are gathered in row-major order; a later candidate only wins
    // when it is lower beyond the tie tolerance.
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        double tol = kScoreTieTolerance * std::abs(scores[best].second);
        if (scores[i].second < scores[best].second - tol) {
            best = i;
        }
    }
    return Selection{scores[best].first, scores[best].second};
}

double rc_score(Combination candidate, const ExperimentState& state)
{
    auto fit = fit_surface(state.config, state.measurements);
    RefinementCriterion criterion(state.config, state.measurements, fit);
    return criterion.score(candidate);
}

std::string_view to_string(StopReason reason)
{
    switch (reason) {
    case StopReason::Continue: return "continue";
    case StopReason::Natural: return "natural";
    case StopReason::Budget: return "budget";
    }
    return "unknown";
}

StopReason check_stop(const ExperimentState& state, const SurfaceFit& fit, int budget)
{
    if (fit.n_unmeasured == 0 || fit.n_uncertain == 0) {
        return StopReason::Natural;
    }
    if (state.iteration >= budget) {
        return StopReason::Budget;
    }
    return StopReason::Continue;
}

StopReason check_stop(const ExperimentState& state)
{
    return check_stop(state, fit_surface(state.config, state.measurements), state.config.max_iterations);
}

StepPlan plan_step(const ExperimentState& state, int budget)
{
    if (!state.pending_initial().empty()) {
        throw PreconditionError("initial design is not fully measured");
    }
    StepPlan plan;
    plan.fit = fit_surface(state.config, state.measurements);
    plan.stop = check_stop(state, plan.fit, budget);
    if (plan.stop != StopReason::Continue) {
        return plan;
    }
    RefinementCriterion criterion(state.config, state.measurements, plan.fit);
    auto selection = criterion.select_next();
    if (!selection) {
        plan.stop = StopReason::Natural;
        return plan;
    }
    plan.next = HistoryEntry{state.iteration + 1, selection->location, selection->score, plan.fit.variogram,
                             plan.fit.n_uncertain};
    return plan;
}

std::optional<Combination> select_next(const ExperimentState& state)
{
    auto plan = plan_step(state, std::numeric_limits<int>::max());
    if (!plan.next) {
        return std::nullopt;
    }
    return plan.next->chosen;
}

ExperimentState make_initial_state(ExperimentConfig config)
{
    config.validate();
    for (auto& c : config.initial_design) {
        c = config.grid.snap(c);
    }
    ExperimentState state;
    state.config = std::move(config);
    return state;
}

namespace {

double measure(const Oracle& oracle, Combination where)
{
    double value = oracle.evaluate(where);
    if (!std::isfinite(value) || value < 0.0) {
        throw ConfigError("oracle returned an invalid response at " + to_string(where));
    }
    return value;
}

}  // namespace

RunOutcome run_experiment(ExperimentState& state, const Oracle& oracle, const RunOptions& options)
{
    int budget = options.max_iterations.value_or(state.config.max_iterations);
    if (budget < 0) {
        throw ConfigError("iteration budget must be >= 0");
    }
    if (budget > state.config.max_iterations) {
        state.config.max_iterations = budget;
    }

    for (const auto& point : state.pending_initial()) {
        state.measurements.push_back({point, measure(oracle, point)});
        if (options.on_progress) {
            options.on_progress(state);
        }
    }

    while (true) {
        auto plan = plan_step(state, budget);
        state.model = plan.fit.variogram;
        if (plan.stop != StopReason::Continue) {
            return {plan.stop, std::move(plan.fit)};
        }
        const auto& next = *plan.next;
        if (options.on_suggestion) {
            options.on_suggestion(next);
        }
        double value = measure(oracle, next.chosen);
        state.measurements.push_back({next.chosen, value});
        state.history.push_back(next);
        state.iteration = next.iteration;
        if (options.on_progress) {
            options.on_progress(state);
        }
    }
}

}  // namespace akriging
