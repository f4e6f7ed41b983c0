#include "akriging/region.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>

#include "akriging/errors.hpp"

namespace akriging {

std::string_view to_string(CellLabel label)
{
    switch (label) {
    case CellLabel::ReliableCandidate: return "reliable_candidate";
    case CellLabel::Uncertain: return "uncertain";
    case CellLabel::ConfidentlyAbove: return "confidently_above";
    case CellLabel::MeasuredPass: return "measured_pass";
    case CellLabel::MeasuredFail: return "measured_fail";
    }
    return "unknown";
}

namespace {

void check_coverage(const GridSpec& grid, std::span<const Prediction> predictions)
{
    if (predictions.size() != grid.size()) {
        throw CoverageError("predictions cover " + std::to_string(predictions.size()) + " of " +
                            std::to_string(grid.size()) + " grid points");
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        auto idx = grid.index_of(predictions[i].location);
        if (!idx || *idx != i) {
            throw CoverageError("prediction " + std::to_string(i) + " at " + to_string(predictions[i].location) +
                                " is not the row-major grid point " + to_string(grid.at(grid.m_index(i), grid.k_index(i))));
        }
    }
}

bool eligible(CellLabel label)
{
    return label == CellLabel::ReliableCandidate || label == CellLabel::MeasuredPass;
}

}  // namespace

LabelMap classify_grid(const GridSpec& grid,
                       std::span<const Prediction> predictions,
                       std::span<const Measurement> measurements,
                       double threshold)
{
    check_coverage(grid, predictions);
    LabelMap map;
    map.grid = grid;
    map.cells = build_grid(grid);
    map.labels.resize(map.cells.size());

    std::vector<const Measurement*> measured(map.cells.size(), nullptr);
    for (const auto& meas : measurements) {
        auto idx = grid.index_of(meas.location);
        if (!idx) {
            throw PreconditionError("measurement " + to_string(meas.location) + " is not a grid point");
        }
        measured[*idx] = &meas;
    }

    for (std::size_t i = 0; i < map.cells.size(); ++i) {
        if (measured[i]) {
            map.labels[i] = measured[i]->response <= threshold ? CellLabel::MeasuredPass : CellLabel::MeasuredFail;
            continue;
        }
        const auto& p = predictions[i];
        if (p.mean <= threshold && p.ci_upper <= threshold) {
            map.labels[i] = CellLabel::ReliableCandidate;
        } else if (p.ci_lower > threshold) {
            map.labels[i] = CellLabel::ConfidentlyAbove;
        } else {
            map.labels[i] = CellLabel::Uncertain;
        }
    }
    return map;
}

RegionReport largest_reliable_region(const LabelMap& labels)
{
    const auto& grid = labels.grid;
    std::size_t m_count = grid.m_count();
    std::size_t k_count = grid.k_count();
    if (labels.labels.size() != m_count * k_count) {
        throw CoverageError("label map does not cover the grid");
    }

    std::vector<int> component(labels.labels.size(), -1);
    std::vector<std::size_t> best;
    int next_id = 0;
    for (std::size_t start = 0; start < labels.labels.size(); ++start) {
        if (component[start] >= 0 || !eligible(labels.labels[start])) {
            continue;
        }
        std::vector<std::size_t> members;
        std::deque<std::size_t> queue{start};
        component[start] = next_id;
        while (!queue.empty()) {
            std::size_t cur = queue.front();
            queue.pop_front();
            members.push_back(cur);
            std::size_t i = cur / k_count;
            std::size_t j = cur % k_count;
            std::array<std::pair<bool, std::size_t>, 4> neighbours{{
                {i > 0, cur - k_count},
                {i + 1 < m_count, cur + k_count},
                {j > 0, cur - 1},
                {j + 1 < k_count, cur + 1},
            }};
            for (auto [valid, nb] : neighbours) {
                if (valid && component[nb] < 0 && eligible(labels.labels[nb])) {
                    component[nb] = next_id;
                    queue.push_back(nb);
                }
            }
        }
        ++next_id;
        // Components are discovered in row-major order of their first cell,
        // so only a strictly larger one replaces the current best.
        if (members.size() > best.size()) {
            best = std::move(members);
        }
    }

    RegionReport report;
    std::sort(best.begin(), best.end());
    for (auto idx : best) {
        report.cells.push_back(grid.at(grid.m_index(idx), grid.k_index(idx)));
    }
    report.cell_count = report.cells.size();
    if (!report.cells.empty()) {
        report.m_min = report.m_max = report.cells.front().m;
        report.k_min = report.k_max = report.cells.front().k;
        for (const auto& c : report.cells) {
            report.m_min = std::min(report.m_min, c.m);
            report.m_max = std::max(report.m_max, c.m);
            report.k_min = std::min(report.k_min, c.k);
            report.k_max = std::max(report.k_max, c.k);
        }
    }
    return report;
}

std::vector<Polyline> threshold_contour(const GridSpec& grid,
                                        std::span<const Prediction> predictions,
                                        double threshold)
{
    check_coverage(grid, predictions);
    std::vector<double> values;
    values.reserve(predictions.size());
    for (const auto& p : predictions) {
        values.push_back(p.mean);
    }
    return threshold_contour(grid, values, threshold);
}

std::vector<Polyline> threshold_contour(const GridSpec& grid, std::span<const double> values, double threshold)
{
    std::size_t m_count = grid.m_count();
    std::size_t k_count = grid.k_count();
    if (values.size() != m_count * k_count) {
        throw CoverageError("contour values do not cover the grid");
    }
    auto value = [&](std::size_t i, std::size_t j) { return values[i * k_count + j]; };
    auto above = [&](std::size_t i, std::size_t j) { return value(i, j) > threshold; };

    // Edge keys: along-m edges start at (i, j) and end at (i + 1, j);
    // along-k edges start at (i, j) and end at (i, j + 1).
    struct EdgeKey {
        bool along_k;
        std::size_t i;
        std::size_t j;
        auto operator<=>(const EdgeKey&) const = default;
    };
    auto crossing = [&](const EdgeKey& e) {
        std::size_t i2 = e.along_k ? e.i : e.i + 1;
        std::size_t j2 = e.along_k ? e.j + 1 : e.j;
        double va = value(e.i, e.j);
        double vb = value(i2, j2);
        double t = (threshold - va) / (vb - va);
        Combination a = grid.at(e.i, e.j);
        Combination b = grid.at(i2, j2);
        return Combination{a.m + t * (b.m - a.m), a.k + t * (b.k - a.k)};
    };

    std::vector<std::array<EdgeKey, 2>> segments;
    for (std::size_t i = 0; i + 1 < m_count; ++i) {
        for (std::size_t j = 0; j + 1 < k_count; ++j) {
            // Corners counter-clockwise from (i, j); edge q joins corner q and q + 1.
            std::array<bool, 4> corner{above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)};
            std::array<EdgeKey, 4> edge{{
                {false, i, j},
                {true, i + 1, j},
                {false, i, j + 1},
                {true, i, j},
            }};
            std::vector<int> crossed;
            for (int q = 0; q < 4; ++q) {
                if (corner[q] != corner[(q + 1) % 4]) {
                    crossed.push_back(q);
                }
            }
            if (crossed.size() == 2) {
                segments.push_back({edge[crossed[0]], edge[crossed[1]]});
            } else if (crossed.size() == 4) {
                // Saddle: the cell centre decides which pair of opposite corners
                // is joined; each corner differing from the centre is cut off by
                // the two edges meeting at it.
                double centre = 0.25 * (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1));
                bool centre_above = centre > threshold;
                for (int q = 0; q < 4; ++q) {
                    if (corner[q] != centre_above) {
                        segments.push_back({edge[(q + 3) % 4], edge[q]});
                    }
                }
            }
        }
    }

    std::map<EdgeKey, std::vector<std::size_t>> incident;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        incident[segments[s][0]].push_back(s);
        incident[segments[s][1]].push_back(s);
    }

    std::vector<bool> used(segments.size(), false);
    std::vector<Polyline> polylines;
    auto walk = [&](EdgeKey start, std::size_t first) {
        Polyline line{crossing(start)};
        EdgeKey cur = start;
        std::size_t seg = first;
        while (true) {
            used[seg] = true;
            EdgeKey other = segments[seg][0] == cur ? segments[seg][1] : segments[seg][0];
            line.push_back(crossing(other));
            cur = other;
            auto& around = incident[cur];
            auto next = std::find_if(around.begin(), around.end(), [&](std::size_t s) { return !used[s]; });
            if (next == around.end()) {
                break;
            }
            seg = *next;
        }
        polylines.push_back(std::move(line));
    };

    for (std::size_t s = 0; s < segments.size(); ++s) {
        for (const auto& end : segments[s]) {
            if (!used[s] && incident[end].size() == 1) {
                walk(end, s);
            }
        }
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (!used[s]) {
            walk(segments[s][0], s);
        }
    }
    return polylines;
}

}  // namespace akriging
