#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "akriging/adaptive.hpp"
#include "akriging/oracle.hpp"
#include "akriging/region.hpp"

namespace akriging {

inline constexpr std::string_view kExperimentVersion = "akriging-experiment/1";
inline constexpr int kConfigVersion = 1;

/// Everything needed to start an experiment.
struct ExperimentSetup {
    ExperimentConfig config;
    OracleSpec oracle;
};

/// Parses and validates a JSON experiment configuration. Relative replay
/// table paths are resolved against `base_dir`. Throws ConfigError with a
/// line/column (syntax) or a JSON path (semantics) in the message.
ExperimentSetup parse_config(std::string_view json, const std::filesystem::path& base_dir = {});
ExperimentSetup load_config(const std::filesystem::path& path);

/// On-disk experiment: state, oracle, and an unmeasured suggestion if one is
/// outstanding.
struct ExperimentFile {
    ExperimentState state;
    OracleSpec oracle;
    std::optional<HistoryEntry> pending_suggestion;

    friend bool operator==(const ExperimentFile&, const ExperimentFile&) = default;
};

ExperimentFile new_experiment(const ExperimentSetup& setup);

std::string serialize_experiment(const ExperimentFile& file);
/// Throws ConfigError on malformed content or an unknown version tag.
ExperimentFile deserialize_experiment(std::string_view json);

void save_experiment(const std::filesystem::path& path, const ExperimentFile& file);
ExperimentFile load_experiment(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// printf("%.6g"), the formatting used by every export.
std::string format_number(double value);

std::string predictions_csv(std::span<const Prediction> predictions);
std::string labels_csv(const LabelMap& labels);
std::string region_json(const RegionReport& region);
std::string contour_csv(const std::vector<Polyline>& polylines);
/// One JSON object per line per history entry.
std::string audit_log(std::span<const HistoryEntry> history);

struct ReportProducts {
    SurfaceFit fit;
    LabelMap labels;
    RegionReport region;
    std::vector<Polyline> contours;
};

/// Refits the current measurements and derives labels, region and contour.
ReportProducts build_report(const ExperimentState& state, std::optional<double> alpha = std::nullopt);

struct ExportPaths {
    std::filesystem::path predictions;
    std::filesystem::path labels;
    std::filesystem::path region;
    std::filesystem::path contour;
    std::filesystem::path audit;
};

ExportPaths export_paths(const std::filesystem::path& output_dir);
ExportPaths write_exports(const std::filesystem::path& output_dir,
                          const ReportProducts& products,
                          std::span<const HistoryEntry> history);

}  // namespace akriging
