#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "akriging/grid.hpp"
#include "akriging/kriging.hpp"
#include "akriging/oracle.hpp"
#include "akriging/variogram.hpp"

namespace akriging {

/// How hypothetical kriging variances are obtained when a candidate is added.
enum class HypotheticalVariance {
    BorderedUpdate,  // Schur-complement update of the current factorization
    Refactorize,     // assemble and factor the augmented system per candidate
};

struct ExperimentConfig {
    GridSpec grid;
    double threshold = 4.0;  // d, drift percentage
    double alpha = 0.1;
    int max_iterations = 50;
    std::vector<Combination> initial_design;
    std::uint64_t seed = 0;
    HypotheticalVariance method = HypotheticalVariance::BorderedUpdate;

    /// Throws ConfigError naming the offending field or point.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Twelve space-filling starting points on the default grid.
std::vector<Combination> default_initial_design();

struct HistoryEntry {
    int iteration = 0;  // 1-based index of the adaptive addition
    Combination chosen;
    double rc_score = 0.0;
    FittedVariogram model;
    std::size_t n_uncertain = 0;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct ExperimentState {
    ExperimentConfig config;
    std::vector<Measurement> measurements;
    std::optional<FittedVariogram> model;
    int iteration = 0;
    std::vector<HistoryEntry> history;

    /// Initial-design points not yet measured, in design order.
    std::vector<Combination> pending_initial() const;
    bool is_measured(Combination c) const;

    friend bool operator==(const ExperimentState&, const ExperimentState&) = default;
};

/// 0 when the interval lies entirely above d or its upper end is at most d.
int weight_indicator(const Prediction& pred, double threshold);

/// Variogram fit, grid-wide predictions and indicators for one dataset.
struct SurfaceFit {
    FittedVariogram variogram;
    std::vector<Combination> grid;
    std::vector<Prediction> predictions;  // aligned with grid
    std::vector<bool> measured;           // aligned with grid
    std::vector<bool> uncertain;          // indicator 1, unmeasured only
    std::size_t n_uncertain = 0;
    std::size_t n_unmeasured = 0;
};

SurfaceFit fit_surface(const ExperimentConfig& config, std::span<const Measurement> measurements);

/// Indicator-weighted sum of hypothetical kriging variances with the
/// variogram held fixed.
class RefinementCriterion {
public:
    /// `weights[i]` is the indicator of grid point i; weights of measured
    /// points are ignored.
    RefinementCriterion(const GridSpec& grid,
                        std::span<const Combination> measured,
                        const VariogramModel& model,
                        std::vector<bool> weights,
                        HypotheticalVariance method = HypotheticalVariance::BorderedUpdate);

    RefinementCriterion(const ExperimentConfig& config,
                        std::span<const Measurement> measurements,
                        const SurfaceFit& fit);

    /// Throws PreconditionError for measured or off-grid candidates.
    double score(Combination candidate) const;
    double score(Combination candidate, HypotheticalVariance method) const;

    /// Score of every unmeasured grid point, row-major.
    std::vector<std::pair<Combination, double>> all_scores() const;

    struct Selection {
        Combination location;
        double score = 0.0;
    };
    /// Row-major argmin, or nullopt when nothing is unmeasured or no weight
    /// is set on an unmeasured point.
    std::optional<Selection> select_next() const;

    /// Variance at `target` after hypothetically adding `candidate`.
    double hypothetical_variance(Combination candidate, Combination target, HypotheticalVariance method) const;

    std::size_t weighted_count() const { return weighted_.size(); }

private:
    double score_bordered(std::size_t candidate) const;
    double score_refactorized(std::size_t candidate) const;
    std::size_t candidate_index(Combination candidate) const;

    GridSpec spec_;
    VariogramModel model_;
    HypotheticalVariance method_;
    std::vector<Combination> grid_;
    std::vector<Combination> measured_locations_;
    std::vector<bool> measured_;
    std::vector<std::size_t> weighted_;  // grid indices with weight 1, unmeasured
    OrdinaryKriging kriging_;
    Eigen::MatrixXd weighted_solutions_;  // Gamma^{-1} D_x, one column per weighted point
    Eigen::VectorXd weighted_variances_;
};

/// Convenience: fits the current surface and scores one candidate.
double rc_score(Combination candidate, const ExperimentState& state);

enum class StopReason { Continue, Natural, Budget };
std::string_view to_string(StopReason reason);

/// Natural stop (no unmeasured point has indicator 1) takes precedence over
/// the budget.
StopReason check_stop(const ExperimentState& state, const SurfaceFit& fit, int budget);
StopReason check_stop(const ExperimentState& state);

struct StepPlan {
    SurfaceFit fit;
    StopReason stop = StopReason::Continue;
    std::optional<HistoryEntry> next;  // set when stop == Continue
};

/// One fit + selection on the current measurements. Requires the initial
/// design to be fully measured.
StepPlan plan_step(const ExperimentState& state, int budget);

/// Returns the next selection, or nullopt on natural stop.
std::optional<Combination> select_next(const ExperimentState& state);

struct RunOptions {
    std::optional<int> max_iterations;  // overrides config.max_iterations
    /// Called after every new measurement.
    std::function<void(const ExperimentState&)> on_progress;
    /// Called with each adaptive selection before the oracle is queried.
    std::function<void(const HistoryEntry&)> on_suggestion;
};

struct RunOutcome {
    StopReason reason = StopReason::Continue;
    SurfaceFit final_fit;
};

ExperimentState make_initial_state(ExperimentConfig config);

/// Measures pending initial points, then iterates fit -> stop check ->
/// select -> measure. Mutates `state` in place so that it remains valid (and
/// resumable) if the oracle throws.
RunOutcome run_experiment(ExperimentState& state, const Oracle& oracle, const RunOptions& options = {});

}  // namespace akriging
