#include "akriging/kriging.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <set>

#include "akriging/errors.hpp"

namespace akriging {

namespace {

struct QuantileEntry {
    double alpha;
    double z;
};

constexpr std::array<QuantileEntry, 5> kQuantiles{{
    {0.5, 0.674},
    {0.25, 1.150},
    {0.1, 1.645},
    {0.05, 1.960},
    {0.01, 2.576},
}};

constexpr double kMinReciprocalCondition = 1e-12;
constexpr double kNegativeVarianceTolerance = 1e-9;

std::vector<Combination> locations_of(std::span<const Measurement> measurements)
{
    std::vector<Combination> out;
    out.reserve(measurements.size());
    for (const auto& meas : measurements) {
        out.push_back(meas.location);
    }
    return out;
}

Eigen::PartialPivLU<Eigen::MatrixXd> factorize(const KrigingSystem& system, const GridSpec& spec)
{
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.gamma_matrix());
    double rcond = lu.rcond();
    if (!(rcond >= kMinReciprocalCondition)) {
        const auto& locs = system.locations();
        if (locs.size() < 2) {
            throw NumericalError("kriging system is singular");
        }
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < locs.size(); ++i) {
            for (std::size_t j = i + 1; j < locs.size(); ++j) {
                double h = distance(locs[i], locs[j], spec);
                if (h < best) {
                    best = h;
                    bi = i;
                    bj = j;
                }
            }
        }
        throw NumericalError("kriging system is singular or ill-conditioned", locs[bi], locs[bj]);
    }
    return lu;
}

SolvedWeights weights_from(const Eigen::VectorXd& solution)
{
    auto n = solution.size() - 1;
    SolvedWeights out;
    out.weights.assign(solution.data(), solution.data() + n);
    // The last unknown of the bordered system is -lambda.
    out.lagrange = -solution[n];
    return out;
}

}  // namespace

bool is_supported_alpha(double alpha)
{
    for (const auto& entry : kQuantiles) {
        if (std::abs(entry.alpha - alpha) < 1e-12) {
            return true;
        }
    }
    return false;
}

double normal_quantile(double alpha)
{
    for (const auto& entry : kQuantiles) {
        if (std::abs(entry.alpha - alpha) < 1e-12) {
            return entry.z;
        }
    }
    throw ConfigError("unsupported significance level alpha=" + std::to_string(alpha) +
                      " (supported: 0.5, 0.25, 0.1, 0.05, 0.01)");
}

KrigingSystem KrigingSystem::assemble(std::span<const Combination> locations,
                                      const VariogramModel& model,
                                      const GridSpec& spec)
{
    if (locations.empty()) {
        throw InsufficientDataError("kriging needs at least one measurement");
    }
    std::set<Combination> seen;
    for (const auto& loc : locations) {
        if (!seen.insert(loc).second) {
            throw DuplicateLocationError(loc);
        }
    }
    auto n = static_cast<Eigen::Index>(locations.size());
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double g = model.evaluate(distance(locations[i], locations[j], spec));
            gamma(i, j) = g;
            gamma(j, i) = g;
        }
        gamma(i, n) = 1.0;
        gamma(n, i) = 1.0;
    }
    return KrigingSystem({locations.begin(), locations.end()}, std::move(gamma));
}

KrigingSystem KrigingSystem::assemble(std::span<const Measurement> measurements,
                                      const VariogramModel& model,
                                      const GridSpec& spec)
{
    auto locs = locations_of(measurements);
    return assemble(std::span<const Combination>(locs), model, spec);
}

Eigen::VectorXd kriging_rhs(std::span<const Combination> locations,
                            Combination target,
                            const VariogramModel& model,
                            const GridSpec& spec)
{
    auto n = static_cast<Eigen::Index>(locations.size());
    Eigen::VectorXd d(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        d[i] = model.evaluate(distance(locations[i], target, spec));
    }
    d[n] = 1.0;
    return d;
}

double variance_from_solution(const Eigen::VectorXd& rhs, const Eigen::VectorXd& solution)
{
    double variance = rhs.dot(solution);
    if (variance < 0.0) {
        if (variance < -kNegativeVarianceTolerance) {
            throw NumericalError("negative kriging variance " + std::to_string(variance));
        }
        variance = 0.0;
    }
    return variance;
}

Prediction make_prediction(Combination location, double mean, double variance, double alpha)
{
    double half = normal_quantile(alpha) * std::sqrt(variance);
    return {location, mean, variance, mean - half, mean + half};
}

OrdinaryKriging::OrdinaryKriging(std::span<const Measurement> measurements,
                                 VariogramModel model,
                                 GridSpec spec)
    : system_(KrigingSystem::assemble(measurements, model, spec)),
      model_(model),
      spec_(spec),
      responses_(static_cast<Eigen::Index>(measurements.size())),
      lu_(factorize(system_, spec_))
{
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        responses_[static_cast<Eigen::Index>(i)] = measurements[i].response;
        measured_.emplace(measurements[i].location, static_cast<Eigen::Index>(i));
    }
}

OrdinaryKriging::OrdinaryKriging(std::span<const Combination> locations,
                                 VariogramModel model,
                                 GridSpec spec)
    : system_(KrigingSystem::assemble(locations, model, spec)),
      model_(model),
      spec_(spec),
      responses_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(locations.size()))),
      lu_(factorize(system_, spec_))
{
}

Eigen::VectorXd OrdinaryKriging::rhs(Combination target) const
{
    return kriging_rhs(system_.locations(), target, model_, spec_);
}

Eigen::MatrixXd OrdinaryKriging::solve_columns(const Eigen::MatrixXd& rhs) const
{
    return lu_.solve(rhs);
}

OrdinaryKriging::Solution OrdinaryKriging::solve(Combination target) const
{
    Eigen::VectorXd d = rhs(target);
    Eigen::VectorXd w = lu_.solve(d);
    return {weights_from(w), variance_from_solution(d, w)};
}

double OrdinaryKriging::variance(Combination target) const
{
    Eigen::VectorXd d = rhs(target);
    return variance_from_solution(d, lu_.solve(d));
}

Prediction OrdinaryKriging::predict(Combination target, double alpha) const
{
    normal_quantile(alpha);
    if (auto hit = measured_.find(target); hit != measured_.end()) {
        return make_prediction(target, responses_[hit->second], 0.0, alpha);
    }
    Eigen::VectorXd d = rhs(target);
    Eigen::VectorXd w = lu_.solve(d);
    auto n = responses_.size();
    double mean = w.head(n).dot(responses_);
    return make_prediction(target, mean, variance_from_solution(d, w), alpha);
}

std::vector<Prediction> OrdinaryKriging::predict_grid(std::span<const Combination> targets,
                                                      double alpha) const
{
    normal_quantile(alpha);
    std::vector<Prediction> out;
    out.reserve(targets.size());
    for (const auto& target : targets) {
        out.push_back(predict(target, alpha));
    }
    return out;
}

OrdinaryKriging::Solution solve(const KrigingSystem& system,
                                Combination target,
                                const VariogramModel& model,
                                const GridSpec& spec)
{
    auto lu = factorize(system, spec);
    Eigen::VectorXd d = kriging_rhs(system.locations(), target, model, spec);
    Eigen::VectorXd w = lu.solve(d);
    return {weights_from(w), variance_from_solution(d, w)};
}

Prediction predict(std::span<const Measurement> measurements,
                   const VariogramModel& model,
                   const GridSpec& spec,
                   Combination target,
                   double alpha)
{
    return OrdinaryKriging(measurements, model, spec).predict(target, alpha);
}

std::vector<Prediction> predict_grid(std::span<const Measurement> measurements,
                                     const VariogramModel& model,
                                     const GridSpec& spec,
                                     std::span<const Combination> targets,
                                     double alpha)
{
    if (targets.empty()) {
        normal_quantile(alpha);
        return {};
    }
    return OrdinaryKriging(measurements, model, spec).predict_grid(targets, alpha);
}

}  // namespace akriging
