#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "akriging/grid.hpp"

namespace akriging {

enum class VariogramFamily { BoundedLinear, Spherical, Exponential, Gaussian };

/// Selection order; earlier families win ties.
inline constexpr std::array<VariogramFamily, 4> kAllFamilies{
    VariogramFamily::BoundedLinear,
    VariogramFamily::Spherical,
    VariogramFamily::Exponential,
    VariogramFamily::Gaussian,
};

std::string_view to_string(VariogramFamily family);
/// Accepts the names produced by to_string; throws ConfigError otherwise.
VariogramFamily parse_family(std::string_view name);

/// Isotropic semi-variogram gamma(h) = C0 + b * shape(h / a) for h > 0 and
/// gamma(0) = 0, so kriging interpolates measured points exactly.
struct VariogramModel {
    VariogramFamily family = VariogramFamily::Spherical;
    double nugget = 0.0;  // C0
    double range = 1.0;   // a
    double sill = 0.0;    // partial sill b

    double evaluate(double h) const;
    /// shape(h) in [0, 1]; the model is nugget + sill * shape for h > 0.
    double shape(double h) const;

    void validate() const;

    friend bool operator==(const VariogramModel&, const VariogramModel&) = default;
};

struct VariogramBin {
    double h_center = 0.0;  // mean pair distance inside the bin
    double gamma_hat = 0.0;
    int pair_count = 0;
};

struct EmpiricalVariogram {
    std::vector<VariogramBin> bins;  // strictly increasing h_center
    /// Inputs to the low-information fallback model.
    double sample_variance = 0.0;
    double max_pair_distance = 0.0;
};

/// Method-of-moments estimator over bins of width `bin_width` centred on
/// multiples of the width. Pairs farther apart than `max_lag` are ignored.
EmpiricalVariogram empirical_variogram(std::span<const Measurement> measurements,
                                       const GridSpec& spec,
                                       double bin_width,
                                       std::optional<double> max_lag = std::nullopt);

/// Bin width = grid nearest-neighbour spacing; lags beyond half the largest
/// pairwise distance are discarded.
EmpiricalVariogram default_empirical_variogram(std::span<const Measurement> measurements,
                                               const GridSpec& spec);

enum class FitQuality {
    Normal,
    Degenerate,      // all gamma_hat are zero
    LowInformation,  // fewer than kMinFitBins bins; fallback model
};

std::string_view to_string(FitQuality quality);
FitQuality parse_fit_quality(std::string_view name);

inline constexpr std::size_t kMinFitBins = 3;

struct FittedVariogram {
    VariogramModel model;
    double fit_mse = 0.0;  // unweighted mean over bins
    FitQuality quality = FitQuality::Normal;

    friend bool operator==(const FittedVariogram&, const FittedVariogram&) = default;
};

/// Pair-count weighted least squares over C0 >= 0, b >= 0 and
/// a in [smallest bin lag, 2 * largest bin lag].
FittedVariogram fit_model(const EmpiricalVariogram& empirical, VariogramFamily family);

/// Fits every family and keeps the lowest fit_mse.
FittedVariogram select_model(const EmpiricalVariogram& empirical);

}  // namespace akriging
