#include "akriging/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "akriging/errors.hpp"

namespace akriging {

std::string to_string(Combination c)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "(m=%.6g, k=%.6g)", c.m, c.k);
    return buf;
}

namespace {

std::size_t axis_count(double lo, double hi, double stride)
{
    return static_cast<std::size_t>(std::floor((hi - lo) / stride + kSnapTolerance)) + 1;
}

void validate_axis(const char* name, double lo, double hi, double stride)
{
    std::string axis(name);
    if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(stride)) {
        throw ConfigError("grid axis " + axis + ": bounds and stride must be finite");
    }
    if (stride <= 0.0) {
        throw ConfigError("grid axis " + axis + ": stride must be positive");
    }
    if (hi < lo) {
        throw ConfigError("grid axis " + axis + ": max < min");
    }
    if (lo <= 0.0) {
        throw ConfigError("grid axis " + axis + ": coordinates must be positive");
    }
    double steps = (hi - lo) / stride;
    if (std::abs(steps - std::round(steps)) > 1e-9) {
        throw ConfigError("grid axis " + axis + ": (max - min) is not a multiple of stride");
    }
}

std::optional<std::size_t> axis_index(double v, double lo, double stride, std::size_t count)
{
    double r = std::round((v - lo) / stride);
    if (r < 0.0 || r >= static_cast<double>(count)) {
        return std::nullopt;
    }
    auto i = static_cast<std::size_t>(r);
    if (std::abs(v - (lo + static_cast<double>(i) * stride)) > kSnapTolerance) {
        return std::nullopt;
    }
    return i;
}

}  // namespace

void GridSpec::validate() const
{
    validate_axis("m", m_min, m_max, m_stride);
    validate_axis("k", k_min, k_max, k_stride);
    if (!(k_scale > 0.0) || !std::isfinite(k_scale)) {
        throw ConfigError("grid: k_scale must be positive");
    }
}

std::size_t GridSpec::m_count() const { return axis_count(m_min, m_max, m_stride); }
std::size_t GridSpec::k_count() const { return axis_count(k_min, k_max, k_stride); }

Combination GridSpec::at(std::size_t i, std::size_t j) const
{
    return {m_min + static_cast<double>(i) * m_stride, k_min + static_cast<double>(j) * k_stride};
}

std::optional<std::size_t> GridSpec::index_of(Combination c) const
{
    auto i = axis_index(c.m, m_min, m_stride, m_count());
    auto j = axis_index(c.k, k_min, k_stride, k_count());
    if (!i || !j) {
        return std::nullopt;
    }
    return *i * k_count() + *j;
}

Combination GridSpec::snap(Combination c) const
{
    auto idx = index_of(c);
    if (!idx) {
        throw ConfigError("combination " + to_string(c) + " is not a grid point");
    }
    return at(m_index(*idx), k_index(*idx));
}

double GridSpec::nearest_neighbor_spacing() const
{
    double dm = m_count() > 1 ? m_stride : std::numeric_limits<double>::infinity();
    double dk = k_count() > 1 ? k_stride * k_scale : std::numeric_limits<double>::infinity();
    double s = std::min(dm, dk);
    return std::isfinite(s) ? s : 1.0;
}

GridSpec default_grid() { return GridSpec{}; }

std::vector<Combination> build_grid(const GridSpec& spec)
{
    spec.validate();
    std::vector<Combination> points;
    points.reserve(spec.size());
    for (std::size_t i = 0; i < spec.m_count(); ++i) {
        for (std::size_t j = 0; j < spec.k_count(); ++j) {
            points.push_back(spec.at(i, j));
        }
    }
    return points;
}

double distance(Combination a, Combination b, const GridSpec& spec)
{
    double dm = a.m - b.m;
    double dk = (a.k - b.k) * spec.k_scale;
    return std::hypot(dm, dk);
}

void validate_measurements(std::span<const Measurement> measurements)
{
    std::set<Combination> seen;
    for (const auto& meas : measurements) {
        if (!std::isfinite(meas.response) || meas.response < 0.0) {
            throw ConfigError("measurement at " + to_string(meas.location) +
                              " has a non-finite or negative response");
        }
        if (!seen.insert(meas.location).second) {
            throw DuplicateLocationError(meas.location);
        }
    }
}

}  // namespace akriging
