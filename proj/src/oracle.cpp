#include "akriging/oracle.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "akriging/errors.hpp"

namespace akriging {

double reduce_event_maxima(std::span<const double> maxima)
{
    if (maxima.size() != kEventCount) {
        throw ConfigError("expected " + std::to_string(kEventCount) + " per-event maxima, got " +
                          std::to_string(maxima.size()));
    }
    std::vector<double> sorted(maxima.begin(), maxima.end());
    for (double v : sorted) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ConfigError("per-event maxima must be finite and non-negative");
        }
    }
    std::nth_element(sorted.begin(), sorted.begin() + 3, sorted.end(), std::greater<>());
    return sorted[3];
}

std::string_view to_string(OracleKind kind)
{
    switch (kind) {
    case OracleKind::SyntheticLogistic: return "synthetic_logistic";
    case OracleKind::TableReplay: return "table_replay";
    }
    return "unknown";
}

OracleKind parse_oracle_kind(std::string_view name)
{
    if (name == "synthetic_logistic") {
        return OracleKind::SyntheticLogistic;
    }
    if (name == "table_replay") {
        return OracleKind::TableReplay;
    }
    throw ConfigError("unknown oracle kind '" + std::string(name) + "'");
}

void OracleSpec::validate() const
{
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw ConfigError("oracle noise_std must be finite and >= 0");
    }
    if (kind == OracleKind::TableReplay && table_path.empty()) {
        throw ConfigError("table_replay oracle requires a table path");
    }
    if (kind == OracleKind::SyntheticLogistic) {
        const auto& p = logistic;
        if (!std::isfinite(p.floor) || !std::isfinite(p.amplitude) || !std::isfinite(p.steepness) ||
            !std::isfinite(p.ratio)) {
            throw ConfigError("synthetic_logistic coefficients must be finite");
        }
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double to_unit_open(std::uint64_t bits)
{
    // 53 random bits mapped into (0, 1).
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double keyed_normal(std::uint64_t seed, Combination x)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x.m + 0.0));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x.k + 0.0));
    double u1 = to_unit_open(h);
    double u2 = to_unit_open(splitmix64(h));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SyntheticLogisticOracle::SyntheticLogisticOracle(LogisticParams params, double noise_std, std::uint64_t seed)
    : params_(params), noise_std_(noise_std), seed_(seed)
{
}

double SyntheticLogisticOracle::noiseless(Combination x) const
{
    const auto& p = params_;
    return p.floor + p.amplitude / (1.0 + std::exp(p.steepness * (x.k - p.ratio * x.m)));
}

double SyntheticLogisticOracle::evaluate(Combination x) const
{
    double value = noiseless(x);
    if (noise_std_ > 0.0) {
        value += noise_std_ * keyed_normal(seed_, x);
    }
    return std::max(0.0, value);
}

std::optional<double> SyntheticLogisticOracle::level_set_k(double m, double level) const
{
    const auto& p = params_;
    double excess = level - p.floor;
    if (!(excess > 0.0) || !(excess < p.amplitude) || p.steepness == 0.0) {
        return std::nullopt;
    }
    return p.ratio * m + std::log(p.amplitude / excess - 1.0) / p.steepness;
}

namespace {

std::vector<std::string> split_row(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) {
            cell.remove_prefix(1);
        }
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) {
            cell.remove_suffix(1);
        }
        cells.emplace_back(cell);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

double parse_number(const std::string& cell, std::size_t line_no, std::string_view column)
{
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw ConfigError("replay table line " + std::to_string(line_no) + ": column '" +
                          std::string(column) + "' is not a number: '" + cell + "'");
    }
    return value;
}

}  // namespace

std::vector<ResponseRecord> parse_replay_table(std::string_view csv, const GridSpec& grid)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto nl = csv.find('\n', start);
        auto line = csv.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        if (nl == std::string_view::npos) {
            break;
        }
        start = nl + 1;
    }

    std::size_t header_line = 0;
    while (header_line < lines.size() && lines[header_line].find_first_not_of(" \t") == std::string_view::npos) {
        ++header_line;
    }
    if (header_line == lines.size()) {
        throw ConfigError("replay table is empty");
    }

    auto header = split_row(lines[header_line]);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    auto m_col = column("m");
    auto k_col = column("k");
    if (!m_col || !k_col) {
        throw ConfigError("replay table header must contain columns 'm' and 'k'");
    }
    auto response_col = column("response");
    std::vector<std::size_t> event_cols;
    for (std::size_t e = 1; e <= kEventCount; ++e) {
        if (auto c = column("e" + std::to_string(e))) {
            event_cols.push_back(*c);
        }
    }
    if (!event_cols.empty() && event_cols.size() != kEventCount) {
        throw ConfigError("replay table must carry all of e1..e15 or none of them");
    }
    if (!response_col && event_cols.empty()) {
        throw ConfigError("replay table needs a 'response' column or columns e1..e15");
    }

    std::vector<ResponseRecord> records;
    std::map<Combination, std::size_t> seen;
    for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        std::size_t line_no = i + 1;
        auto cells = split_row(lines[i]);
        if (cells.size() != header.size()) {
            throw ConfigError("replay table line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
        }
        Combination raw{parse_number(cells[*m_col], line_no, "m"), parse_number(cells[*k_col], line_no, "k")};
        auto idx = grid.index_of(raw);
        if (!idx) {
            throw ConfigError("replay table line " + std::to_string(line_no) + ": " + to_string(raw) +
                              " is not a grid point");
        }
        ResponseRecord record;
        record.location = grid.at(grid.m_index(*idx), grid.k_index(*idx));
        if (!event_cols.empty()) {
            std::vector<double> maxima;
            for (auto c : event_cols) {
                maxima.push_back(parse_number(cells[c], line_no, header[c]));
            }
            record.response = reduce_event_maxima(maxima);
            record.per_event_maxima = std::move(maxima);
        }
        if (response_col) {
            double response = parse_number(cells[*response_col], line_no, "response");
            if (record.per_event_maxima && response != record.response) {
                throw ConfigError("replay table line " + std::to_string(line_no) +
                                  ": response disagrees with the fourth-largest per-event maximum");
            }
            record.response = response;
        }
        if (record.response < 0.0) {
            throw ConfigError("replay table line " + std::to_string(line_no) + ": negative response");
        }
        if (auto [it, inserted] = seen.emplace(record.location, line_no); !inserted) {
            throw ConfigError("replay table line " + std::to_string(line_no) + ": duplicate location " +
                              to_string(record.location) + " (first seen on line " +
                              std::to_string(it->second) + ")");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<ResponseRecord> load_replay_table(const std::filesystem::path& path, const GridSpec& grid)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open replay table " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_replay_table(buffer.str(), grid);
}

TableReplayOracle::TableReplayOracle(std::vector<ResponseRecord> records, GridSpec grid)
    : grid_(grid)
{
    for (const auto& record : records) {
        table_.emplace(grid_.snap(record.location), record.response);
    }
}

double TableReplayOracle::evaluate(Combination x) const
{
    auto idx = grid_.index_of(x);
    if (idx) {
        auto it = table_.find(grid_.at(grid_.m_index(*idx), grid_.k_index(*idx)));
        if (it != table_.end()) {
            return it->second;
        }
    }
    throw OracleMiss(x);
}

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec, const GridSpec& grid)
{
    spec.validate();
    switch (spec.kind) {
    case OracleKind::SyntheticLogistic:
        return std::make_unique<SyntheticLogisticOracle>(spec.logistic, spec.noise_std, spec.seed);
    case OracleKind::TableReplay:
        return std::make_unique<TableReplayOracle>(load_replay_table(spec.table_path, grid), grid);
    }
    throw ConfigError("unsupported oracle kind");
}

}  // namespace akriging
