#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "akriging/grid.hpp"
#include "akriging/variogram.hpp"

namespace akriging {

/// Standard-normal quantile z_{1 - alpha/2}. Only the tabulated levels
/// alpha in {0.5, 0.25, 0.1, 0.05, 0.01} are supported; anything else throws
/// ConfigError.
double normal_quantile(double alpha);
bool is_supported_alpha(double alpha);

struct SolvedWeights {
    std::vector<double> weights;
    double lagrange = 0.0;
};

struct Prediction {
    Combination location;
    double mean = 0.0;
    double variance = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
};

/// Ordinary-kriging matrix: semivariances between measured locations
/// bordered by a row and column of ones with a zero corner.
class KrigingSystem {
public:
    /// Throws DuplicateLocationError when two locations coincide.
    static KrigingSystem assemble(std::span<const Combination> locations,
                                  const VariogramModel& model,
                                  const GridSpec& spec);
    static KrigingSystem assemble(std::span<const Measurement> measurements,
                                  const VariogramModel& model,
                                  const GridSpec& spec);

    const Eigen::MatrixXd& gamma_matrix() const { return gamma_; }
    const std::vector<Combination>& locations() const { return locations_; }
    std::size_t size() const { return locations_.size(); }

private:
    KrigingSystem(std::vector<Combination> locations, Eigen::MatrixXd gamma)
        : locations_(std::move(locations)), gamma_(std::move(gamma)) {}

    std::vector<Combination> locations_;
    Eigen::MatrixXd gamma_;
};

/// Right-hand side D = (gamma(x_1, target), ..., gamma(x_n, target), 1).
Eigen::VectorXd kriging_rhs(std::span<const Combination> locations,
                            Combination target,
                            const VariogramModel& model,
                            const GridSpec& spec);

/// A factorized kriging system. Built once per dataset; all queries are
/// const and may run concurrently.
class OrdinaryKriging {
public:
    /// Throws NumericalError when the system is singular or its reciprocal
    /// condition estimate is below 1e-12.
    OrdinaryKriging(std::span<const Measurement> measurements, VariogramModel model, GridSpec spec);
    OrdinaryKriging(std::span<const Combination> locations, VariogramModel model, GridSpec spec);

    struct Solution {
        SolvedWeights weights;
        double variance = 0.0;
    };

    Solution solve(Combination target) const;
    double variance(Combination target) const;
    Prediction predict(Combination target, double alpha) const;
    std::vector<Prediction> predict_grid(std::span<const Combination> targets, double alpha) const;

    /// Gamma^{-1} D for a batch of right-hand sides (one per column).
    Eigen::MatrixXd solve_columns(const Eigen::MatrixXd& rhs) const;
    Eigen::VectorXd rhs(Combination target) const;

    const KrigingSystem& system() const { return system_; }
    const VariogramModel& model() const { return model_; }
    const GridSpec& grid() const { return spec_; }

private:
    KrigingSystem system_;
    VariogramModel model_;
    GridSpec spec_;
    Eigen::VectorXd responses_;
    std::map<Combination, Eigen::Index> measured_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Kriging variance D^T W from a solved right-hand side. Values in
/// [-1e-9, 0) clamp to zero; anything lower throws NumericalError.
double variance_from_solution(const Eigen::VectorXd& rhs, const Eigen::VectorXd& solution);

OrdinaryKriging::Solution solve(const KrigingSystem& system,
                                Combination target,
                                const VariogramModel& model,
                                const GridSpec& spec);

Prediction predict(std::span<const Measurement> measurements,
                   const VariogramModel& model,
                   const GridSpec& spec,
                   Combination target,
                   double alpha);

std::vector<Prediction> predict_grid(std::span<const Measurement> measurements,
                                     const VariogramModel& model,
                                     const GridSpec& spec,
                                     std::span<const Combination> targets,
                                     double alpha);

Prediction make_prediction(Combination location, double mean, double variance, double alpha);

}  // namespace akriging
