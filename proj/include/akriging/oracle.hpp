#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "akriging/grid.hpp"

namespace akriging {

inline constexpr std::size_t kEventCount = 15;

/// Fourth-largest of the 15 per-earthquake maximum drifts (80% non-exceedance).
/// Throws ConfigError unless exactly 15 finite non-negative values are given.
double reduce_event_maxima(std::span<const double> maxima);

enum class OracleKind { SyntheticLogistic, TableReplay };

std::string_view to_string(OracleKind kind);
OracleKind parse_oracle_kind(std::string_view name);

/// f(m, k) = floor + amplitude / (1 + exp(steepness * (k - ratio * m))).
struct LogisticParams {
    double floor = 1.0;
    double amplitude = 9.0;
    double steepness = 0.35;
    double ratio = 10.0;

    friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

struct OracleSpec {
    OracleKind kind = OracleKind::SyntheticLogistic;
    LogisticParams logistic;
    std::filesystem::path table_path;
    double noise_std = 0.15811388300841897;  // sqrt(0.025)
    std::uint64_t seed = 0;

    void validate() const;

    friend bool operator==(const OracleSpec&, const OracleSpec&) = default;
};

/// Expensive simulator stand-in. Implementations must tolerate concurrent
/// const queries.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual double evaluate(Combination x) const = 0;
};

class SyntheticLogisticOracle final : public Oracle {
public:
    explicit SyntheticLogisticOracle(LogisticParams params, double noise_std = 0.0, std::uint64_t seed = 0);

    double evaluate(Combination x) const override;
    double noiseless(Combination x) const;

    /// k on the level set noiseless(m, k) = level, or nullopt when the level
    /// lies outside (floor, floor + amplitude).
    std::optional<double> level_set_k(double m, double level) const;

    const LogisticParams& params() const { return params_; }

private:
    LogisticParams params_;
    double noise_std_;
    std::uint64_t seed_;
};

/// Standard normal deviate determined only by (seed, m, k).
double keyed_normal(std::uint64_t seed, Combination x);

struct ResponseRecord {
    Combination location;
    std::optional<std::vector<double>> per_event_maxima;
    double response = 0.0;
};

/// Parses a replay table: CSV with header `m,k,response` or `m,k,e1..e15`
/// (or both, in which case they must agree). Locations are snapped to `grid`.
std::vector<ResponseRecord> parse_replay_table(std::string_view csv, const GridSpec& grid);
std::vector<ResponseRecord> load_replay_table(const std::filesystem::path& path, const GridSpec& grid);

class TableReplayOracle final : public Oracle {
public:
    TableReplayOracle(std::vector<ResponseRecord> records, GridSpec grid);

    /// Throws OracleMiss when the location has no row.
    double evaluate(Combination x) const override;

    std::size_t size() const { return table_.size(); }

private:
    std::map<Combination, double> table_;
    GridSpec grid_;
};

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec, const GridSpec& grid);

}  // namespace akriging
