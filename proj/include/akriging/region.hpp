#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "akriging/grid.hpp"
#include "akriging/kriging.hpp"

namespace akriging {

enum class CellLabel { ReliableCandidate, Uncertain, ConfidentlyAbove, MeasuredPass, MeasuredFail };

std::string_view to_string(CellLabel label);

/// One label per grid point, row-major.
struct LabelMap {
    GridSpec grid;
    std::vector<Combination> cells;
    std::vector<CellLabel> labels;
};

/// Measured cells: pass iff response <= d. Unmeasured: reliable iff
/// mean <= d and ci_upper <= d; confidently above iff ci_lower > d.
/// Throws CoverageError unless `predictions` covers the grid in row-major order.
LabelMap classify_grid(const GridSpec& grid,
                       std::span<const Prediction> predictions,
                       std::span<const Measurement> measurements,
                       double threshold);

struct RegionReport {
    std::vector<Combination> cells;  // row-major
    std::size_t cell_count = 0;
    double m_min = 0.0;
    double m_max = 0.0;
    double k_min = 0.0;
    double k_max = 0.0;
};

/// Largest 4-connected component of ReliableCandidate and MeasuredPass cells;
/// ties go to the component whose smallest cell is lexicographically first.
RegionReport largest_reliable_region(const LabelMap& labels);

using Polyline = std::vector<Combination>;

/// Marching-squares level set {mean = threshold} with linear interpolation
/// along cell edges, in original (m, k) coordinates.
std::vector<Polyline> threshold_contour(const GridSpec& grid,
                                        std::span<const Prediction> predictions,
                                        double threshold);
std::vector<Polyline> threshold_contour(const GridSpec& grid, std::span<const double> values, double threshold);

}  // namespace akriging
