#include "akriging/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "akriging/errors.hpp"

namespace akriging {

std::string_view to_string(VariogramFamily family)
{
    switch (family) {
    case VariogramFamily::BoundedLinear: return "bounded_linear";
    case VariogramFamily::Spherical: return "spherical";
    case VariogramFamily::Exponential: return "exponential";
    case VariogramFamily::Gaussian: return "gaussian";
    }
    return "unknown";
}

VariogramFamily parse_family(std::string_view name)
{
    for (auto family : kAllFamilies) {
        if (to_string(family) == name) {
            return family;
        }
    }
    throw ConfigError("unknown variogram family '" + std::string(name) + "'");
}

std::string_view to_string(FitQuality quality)
{
    switch (quality) {
    case FitQuality::Normal: return "normal";
    case FitQuality::Degenerate: return "degenerate";
    case FitQuality::LowInformation: return "low_information";
    }
    return "unknown";
}

FitQuality parse_fit_quality(std::string_view name)
{
    for (auto q : {FitQuality::Normal, FitQuality::Degenerate, FitQuality::LowInformation}) {
        if (to_string(q) == name) {
            return q;
        }
    }
    throw ConfigError("unknown fit quality '" + std::string(name) + "'");
}

double VariogramModel::shape(double h) const
{
    double r = h / range;
    switch (family) {
    case VariogramFamily::BoundedLinear:
        return r <= 1.0 ? r : 1.0;
    case VariogramFamily::Spherical:
        return r <= 1.0 ? 1.5 * r - 0.5 * r * r * r : 1.0;
    case VariogramFamily::Exponential:
        return -std::expm1(-r);
    case VariogramFamily::Gaussian:
        return -std::expm1(-r * r);
    }
    return 1.0;
}

double VariogramModel::evaluate(double h) const
{
    if (h <= 0.0) {
        return 0.0;
    }
    return nugget + sill * shape(h);
}

void VariogramModel::validate() const
{
    if (!(nugget >= 0.0) || !(sill >= 0.0) || !(range > 0.0) || !std::isfinite(nugget) ||
        !std::isfinite(sill) || !std::isfinite(range)) {
        throw ConfigError("variogram parameters must satisfy nugget >= 0, sill >= 0, range > 0");
    }
}

EmpiricalVariogram empirical_variogram(std::span<const Measurement> measurements,
                                       const GridSpec& spec,
                                       double bin_width,
                                       std::optional<double> max_lag)
{
    if (measurements.size() < 2) {
        throw InsufficientDataError("empirical variogram needs at least 2 measurements");
    }
    if (!(bin_width > 0.0)) {
        throw PreconditionError("variogram bin width must be positive");
    }

    // Canonical order makes every floating-point sum independent of input order.
    std::vector<Measurement> sorted(measurements.begin(), measurements.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const Measurement& a, const Measurement& b) { return a.location < b.location; });

    struct Accumulator {
        double sum_h = 0.0;
        double sum_sq = 0.0;
        int count = 0;
    };
    std::map<long long, Accumulator> accumulators;

    EmpiricalVariogram result;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        for (std::size_t j = i + 1; j < sorted.size(); ++j) {
            double h = distance(sorted[i].location, sorted[j].location, spec);
            result.max_pair_distance = std::max(result.max_pair_distance, h);
            if (max_lag && h > *max_lag + 1e-12) {
                continue;
            }
            double diff = sorted[i].response - sorted[j].response;
            auto& acc = accumulators[std::llround(h / bin_width)];
            acc.sum_h += h;
            acc.sum_sq += diff * diff;
            ++acc.count;
        }
    }
    for (const auto& [index, acc] : accumulators) {
        result.bins.push_back({acc.sum_h / acc.count, acc.sum_sq / (2.0 * acc.count), acc.count});
    }

    double mean = 0.0;
    for (const auto& meas : sorted) {
        mean += meas.response;
    }
    mean /= static_cast<double>(sorted.size());
    double ss = 0.0;
    for (const auto& meas : sorted) {
        ss += (meas.response - mean) * (meas.response - mean);
    }
    result.sample_variance = ss / static_cast<double>(sorted.size() - 1);
    return result;
}

EmpiricalVariogram default_empirical_variogram(std::span<const Measurement> measurements,
                                               const GridSpec& spec)
{
    if (measurements.size() < 2) {
        throw InsufficientDataError("empirical variogram needs at least 2 measurements");
    }
    double max_distance = 0.0;
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        for (std::size_t j = i + 1; j < measurements.size(); ++j) {
            max_distance = std::max(max_distance,
                                    distance(measurements[i].location, measurements[j].location, spec));
        }
    }
    return empirical_variogram(measurements, spec, spec.nearest_neighbor_spacing(), 0.5 * max_distance);
}

namespace {

struct LinearFit {
    double nugget = 0.0;
    double sill = 0.0;
    double weighted_sse = 0.0;
};

// For a fixed range the model is linear in (C0, b); solve the two-variable
// non-negative weighted least-squares problem exactly by enumerating the
// active sets.
LinearFit fit_linear_part(const std::vector<VariogramBin>& bins, const VariogramModel& shape_model)
{
    double s_w = 0.0, s_g = 0.0, s_gg = 0.0, s_y = 0.0, s_gy = 0.0;
    std::vector<double> g(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
        double w = bins[i].pair_count;
        g[i] = shape_model.shape(bins[i].h_center);
        double y = bins[i].gamma_hat;
        s_w += w;
        s_g += w * g[i];
        s_gg += w * g[i] * g[i];
        s_y += w * y;
        s_gy += w * g[i] * y;
    }

    auto sse = [&](double c0, double b) {
        double total = 0.0;
        for (std::size_t i = 0; i < bins.size(); ++i) {
            double r = c0 + b * g[i] - bins[i].gamma_hat;
            total += bins[i].pair_count * r * r;
        }
        return total;
    };

    LinearFit best{0.0, 0.0, sse(0.0, 0.0)};
    auto consider = [&](double c0, double b) {
        double value = sse(c0, b);
        if (value < best.weighted_sse) {
            best = {c0, b, value};
        }
    };

    double det = s_w * s_gg - s_g * s_g;
    if (det > 1e-14 * s_w * s_gg) {
        double c0 = (s_gg * s_y - s_g * s_gy) / det;
        double b = (s_w * s_gy - s_g * s_y) / det;
        if (c0 >= 0.0 && b >= 0.0) {
            consider(c0, b);
        }
    }
    if (s_gg > 0.0) {
        consider(0.0, std::max(0.0, s_gy / s_gg));
    }
    if (s_w > 0.0) {
        consider(std::max(0.0, s_y / s_w), 0.0);
    }
    return best;
}

double unweighted_mse(const std::vector<VariogramBin>& bins, const VariogramModel& model)
{
    if (bins.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& bin : bins) {
        double r = model.evaluate(bin.h_center) - bin.gamma_hat;
        total += r * r;
    }
    return total / static_cast<double>(bins.size());
}

constexpr int kCoarseRangeSteps = 400;
constexpr double kRangeTolerance = 1e-12;

}  // namespace

FittedVariogram fit_model(const EmpiricalVariogram& empirical, VariogramFamily family)
{
    const auto& bins = empirical.bins;
    double max_h = 0.0;
    double min_h = std::numeric_limits<double>::infinity();
    bool all_zero = true;
    for (const auto& bin : bins) {
        max_h = std::max(max_h, bin.h_center);
        min_h = std::min(min_h, bin.h_center);
        all_zero = all_zero && bin.gamma_hat == 0.0;
    }

    if (!bins.empty() && all_zero) {
        double a = empirical.max_pair_distance > 0.0 ? empirical.max_pair_distance : max_h;
        VariogramModel model{family, 0.0, a > 0.0 ? a : 1.0, 0.0};
        return {model, 0.0, FitQuality::Degenerate};
    }

    if (bins.size() < kMinFitBins) {
        double half = 0.5 * empirical.max_pair_distance;
        if (!(half > 0.0)) {
            half = max_h > 0.0 ? max_h : 1.0;
        }
        VariogramModel model{VariogramFamily::Spherical, 0.0, half, empirical.sample_variance};
        return {model, unweighted_mse(bins, model), FitQuality::LowInformation};
    }

    double lo = min_h;
    double hi = 2.0 * max_h;
    auto profile = [&](double a) {
        VariogramModel trial{family, 0.0, a, 0.0};
        return fit_linear_part(bins, trial);
    };

    // Coarse geometric sweep over the range, then golden-section refinement
    // inside the bracket around the best sweep point.
    double ratio = std::pow(hi / lo, 1.0 / kCoarseRangeSteps);
    int best_step = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= kCoarseRangeSteps; ++step) {
        double a = step == kCoarseRangeSteps ? hi : lo * std::pow(ratio, step);
        double value = profile(a).weighted_sse;
        if (value < best_sse) {
            best_sse = value;
            best_step = step;
        }
    }
    auto range_at = [&](int step) {
        step = std::clamp(step, 0, kCoarseRangeSteps);
        return step == kCoarseRangeSteps ? hi : lo * std::pow(ratio, step);
    };
    double left = range_at(best_step - 1);
    double right = range_at(best_step + 1);
    double best_a = range_at(best_step);

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = right - inv_phi * (right - left);
    double x2 = left + inv_phi * (right - left);
    double f1 = profile(x1).weighted_sse;
    double f2 = profile(x2).weighted_sse;
    while (right - left > kRangeTolerance * std::max(1.0, right)) {
        if (f1 <= f2) {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - inv_phi * (right - left);
            f1 = profile(x1).weighted_sse;
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + inv_phi * (right - left);
            f2 = profile(x2).weighted_sse;
        }
    }
    double refined_a = 0.5 * (left + right);
    if (profile(refined_a).weighted_sse <= best_sse) {
        best_a = refined_a;
    }

    LinearFit linear = profile(best_a);
    VariogramModel model{family, linear.nugget, best_a, linear.sill};
    return {model, unweighted_mse(bins, model), FitQuality::Normal};
}

FittedVariogram select_model(const EmpiricalVariogram& empirical)
{
    std::array<FittedVariogram, kAllFamilies.size()> fits;
    for (std::size_t i = 0; i < kAllFamilies.size(); ++i) {
        fits[i] = fit_model(empirical, kAllFamilies[i]);
    }
    // Strict comparison: equal errors keep the earlier family.
    std::size_t best = 0;
    for (std::size_t i = 1; i < fits.size(); ++i) {
        if (fits[i].fit_mse < fits[best].fit_mse) {
            best = i;
        }
    }
    return fits[best];
}

}  // namespace akriging
