#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace akriging {

/// A point of the 2-D input space: normalized mass ratio `m` and
/// normalized stiffness ratio `k`.
struct Combination {
    double m = 0.0;
    double k = 0.0;

    friend bool operator==(const Combination&, const Combination&) = default;
    friend auto operator<=>(const Combination&, const Combination&) = default;
};

std::string to_string(Combination c);

/// Tolerance used when deciding whether a coordinate lies on a grid line.
inline constexpr double kSnapTolerance = 1e-9;

/// Rectangular lattice of candidate combinations. Distances are Euclidean on
/// (m, k * k_scale).
struct GridSpec {
    double m_min = 0.5;
    double m_max = 6.0;
    double m_stride = 0.5;
    double k_min = 1.0;
    double k_max = 60.0;
    double k_stride = 1.0;
    double k_scale = 0.1;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    std::size_t m_count() const;
    std::size_t k_count() const;
    std::size_t size() const { return m_count() * k_count(); }

    /// Grid coordinate of lattice cell (i, j); computed the same way everywhere
    /// so that snapped combinations compare equal exactly.
    Combination at(std::size_t i, std::size_t j) const;

    /// Row-major index (m outer, k inner) of the lattice cell within
    /// kSnapTolerance of `c`, if any.
    std::optional<std::size_t> index_of(Combination c) const;

    /// Maps `c` onto its exact lattice coordinate; throws ConfigError when `c`
    /// is off-grid.
    Combination snap(Combination c) const;

    std::size_t m_index(std::size_t flat) const { return flat / k_count(); }
    std::size_t k_index(std::size_t flat) const { return flat % k_count(); }

    /// Smallest scaled distance between distinct lattice neighbours.
    double nearest_neighbor_spacing() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// [0.5, 6] x [1, 60] with strides 0.5 and 1, k rescaled by 1/10.
GridSpec default_grid();

/// Every lattice point in row-major order (m ascending outer, k ascending inner).
std::vector<Combination> build_grid(const GridSpec& spec);

double distance(Combination a, Combination b, const GridSpec& spec);

struct Measurement {
    Combination location;
    double response = 0.0;  // drift percentage

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Checks finite non-negative responses and distinct locations.
void validate_measurements(std::span<const Measurement> measurements);

}  // namespace akriging
