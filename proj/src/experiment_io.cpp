#include "akriging/experiment_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "akriging/errors.hpp"

namespace akriging {

using json = nlohmann::json;

namespace {

// Key-checked access to a JSON object; every error names the JSON path.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    void allow_only(std::initializer_list<std::string_view> keys) const
    {
        for (const auto& [key, value] : obj_.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw ConfigError(child(key) + ": unknown key");
            }
        }
    }

    bool has(std::string_view key) const { return obj_.contains(key) && !obj_.at(std::string(key)).is_null(); }

    const json& at(std::string_view key) const
    {
        if (!obj_.contains(key)) {
            throw ConfigError(child(key) + ": missing required key");
        }
        return obj_.at(std::string(key));
    }

    double number(std::string_view key) const
    {
        const auto& v = at(key);
        if (!v.is_number()) {
            throw ConfigError(child(key) + ": expected a number");
        }
        return v.get<double>();
    }

    double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::int64_t integer(std::string_view key) const
    {
        const auto& v = at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(child(key) + ": expected an integer");
        }
        return v.get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(std::string_view key) const
    {
        const auto& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ConfigError(child(key) + ": expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string string(std::string_view key) const
    {
        const auto& v = at(key);
        if (!v.is_string()) {
            throw ConfigError(child(key) + ": expected a string");
        }
        return v.get<std::string>();
    }

    ObjectReader object(std::string_view key) const { return ObjectReader(at(key), child(key)); }

    std::string child(std::string_view key) const { return path_ + "." + std::string(key); }

private:
    const json& obj_;
    std::string path_;
};

Combination parse_pair(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(path + ": expected [m, k]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

std::string_view to_string(HypotheticalVariance method)
{
    return method == HypotheticalVariance::BorderedUpdate ? "bordered_update" : "refactorize";
}

HypotheticalVariance parse_method(const std::string& name, const std::string& path)
{
    if (name == "bordered_update") {
        return HypotheticalVariance::BorderedUpdate;
    }
    if (name == "refactorize") {
        return HypotheticalVariance::Refactorize;
    }
    throw ConfigError(path + ": expected 'bordered_update' or 'refactorize'");
}

GridSpec parse_grid(const ObjectReader& r)
{
    r.allow_only({"m_min", "m_max", "m_stride", "k_min", "k_max", "k_stride", "k_scale"});
    GridSpec defaults;
    GridSpec g;
    g.m_min = r.number_or("m_min", defaults.m_min);
    g.m_max = r.number_or("m_max", defaults.m_max);
    g.m_stride = r.number_or("m_stride", defaults.m_stride);
    g.k_min = r.number_or("k_min", defaults.k_min);
    g.k_max = r.number_or("k_max", defaults.k_max);
    g.k_stride = r.number_or("k_stride", defaults.k_stride);
    g.k_scale = r.number_or("k_scale", defaults.k_scale);
    return g;
}

json grid_to_json(const GridSpec& g)
{
    return {{"m_min", g.m_min},   {"m_max", g.m_max},   {"m_stride", g.m_stride}, {"k_min", g.k_min},
            {"k_max", g.k_max},   {"k_stride", g.k_stride}, {"k_scale", g.k_scale}};
}

// Shared by the config file (top level) and the experiment file ("config").
ExperimentConfig parse_experiment_config(const ObjectReader& r, const std::string& path, bool defaults_allowed)
{
    ExperimentConfig config;
    if (r.has("grid") || !defaults_allowed) {
        config.grid = parse_grid(r.object("grid"));
    }
    config.threshold = defaults_allowed ? r.number_or("threshold", config.threshold) : r.number("threshold");
    config.alpha = defaults_allowed ? r.number_or("alpha", config.alpha) : r.number("alpha");
    if (r.has("max_iterations") || !defaults_allowed) {
        auto iterations = r.integer("max_iterations");
        if (iterations < 1 || iterations > 1'000'000) {
            throw ConfigError(r.child("max_iterations") + ": must lie in [1, 1000000]");
        }
        config.max_iterations = static_cast<int>(iterations);
    }
    if (r.has("seed")) {
        config.seed = r.unsigned_integer("seed");
    }
    if (r.has("hypothetical_variance")) {
        config.method = parse_method(r.string("hypothetical_variance"), r.child("hypothetical_variance"));
    }
    if (r.has("initial_design") || !defaults_allowed) {
        const auto& design = r.at("initial_design");
        if (!design.is_array()) {
            throw ConfigError(r.child("initial_design") + ": expected an array of [m, k] pairs");
        }
        for (std::size_t i = 0; i < design.size(); ++i) {
            config.initial_design.push_back(
                parse_pair(design[i], r.child("initial_design") + "[" + std::to_string(i) + "]"));
        }
    } else {
        config.initial_design = default_initial_design();
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    for (auto& c : config.initial_design) {
        c = config.grid.snap(c);
    }
    return config;
}

json config_to_json(const ExperimentConfig& c)
{
    json design = json::array();
    for (const auto& p : c.initial_design) {
        design.push_back({p.m, p.k});
    }
    return {{"grid", grid_to_json(c.grid)},
            {"threshold", c.threshold},
            {"alpha", c.alpha},
            {"max_iterations", c.max_iterations},
            {"seed", c.seed},
            {"hypothetical_variance", to_string(c.method)},
            {"initial_design", design}};
}

OracleSpec parse_oracle(const ObjectReader& r, std::uint64_t default_seed, const std::filesystem::path& base_dir)
{
    r.allow_only({"kind", "noise_std", "seed", "floor", "amplitude", "steepness", "ratio", "table"});
    OracleSpec spec;
    spec.kind = parse_oracle_kind(r.string("kind"));
    spec.seed = r.has("seed") ? r.unsigned_integer("seed") : default_seed;
    if (spec.kind == OracleKind::SyntheticLogistic) {
        spec.noise_std = r.number_or("noise_std", spec.noise_std);
        spec.logistic.floor = r.number_or("floor", spec.logistic.floor);
        spec.logistic.amplitude = r.number_or("amplitude", spec.logistic.amplitude);
        spec.logistic.steepness = r.number_or("steepness", spec.logistic.steepness);
        spec.logistic.ratio = r.number_or("ratio", spec.logistic.ratio);
        if (r.has("table")) {
            throw ConfigError(r.child("table") + ": only valid for table_replay");
        }
    } else {
        spec.noise_std = 0.0;
        std::filesystem::path table = r.string("table");
        if (table.is_relative() && !base_dir.empty()) {
            table = base_dir / table;
        }
        spec.table_path = table.lexically_normal();
    }
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(r.child("kind") + ": " + e.what());
    }
    return spec;
}

json oracle_to_json(const OracleSpec& spec)
{
    json out = {{"kind", to_string(spec.kind)}, {"seed", spec.seed}};
    if (spec.kind == OracleKind::SyntheticLogistic) {
        out["noise_std"] = spec.noise_std;
        out["floor"] = spec.logistic.floor;
        out["amplitude"] = spec.logistic.amplitude;
        out["steepness"] = spec.logistic.steepness;
        out["ratio"] = spec.logistic.ratio;
    } else {
        out["table"] = spec.table_path.string();
    }
    return out;
}

json model_to_json(const FittedVariogram& fit)
{
    return {{"family", to_string(fit.model.family)},
            {"nugget", fit.model.nugget},
            {"range", fit.model.range},
            {"sill", fit.model.sill},
            {"fit_mse", fit.fit_mse},
            {"quality", to_string(fit.quality)}};
}

FittedVariogram parse_model(const ObjectReader& r)
{
    r.allow_only({"family", "nugget", "range", "sill", "fit_mse", "quality"});
    FittedVariogram fit;
    fit.model.family = parse_family(r.string("family"));
    fit.model.nugget = r.number("nugget");
    fit.model.range = r.number("range");
    fit.model.sill = r.number("sill");
    fit.fit_mse = r.number("fit_mse");
    fit.quality = parse_fit_quality(r.string("quality"));
    return fit;
}

json history_to_json(const HistoryEntry& h)
{
    return {{"iteration", h.iteration},
            {"m", h.chosen.m},
            {"k", h.chosen.k},
            {"rc_score", h.rc_score},
            {"model", model_to_json(h.model)},
            {"n_uncertain", h.n_uncertain}};
}

HistoryEntry parse_history(const ObjectReader& r)
{
    r.allow_only({"iteration", "m", "k", "rc_score", "model", "n_uncertain"});
    HistoryEntry h;
    h.iteration = static_cast<int>(r.integer("iteration"));
    h.chosen = {r.number("m"), r.number("k")};
    h.rc_score = r.number("rc_score");
    h.model = parse_model(r.object("model"));
    h.n_uncertain = r.unsigned_integer("n_uncertain");
    return h;
}

std::string describe_parse_error(std::string_view text, const json::parse_error& e)
{
    std::size_t offset = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what();
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(describe_parse_error(text, e));
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

ExperimentSetup parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
    json doc = parse_json(text);
    ObjectReader r(doc, "$");
    r.allow_only({"version", "grid", "threshold", "alpha", "max_iterations", "seed", "hypothetical_variance",
                  "initial_design", "oracle"});
    if (r.has("version") && r.integer("version") != kConfigVersion) {
        throw ConfigError("$.version: unsupported config version");
    }
    ExperimentSetup setup;
    setup.config = parse_experiment_config(r, "$", true);
    setup.oracle = parse_oracle(r.object("oracle"), setup.config.seed, base_dir);
    return setup;
}

ExperimentSetup load_config(const std::filesystem::path& path)
{
    try {
        return parse_config(read_file(path), path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ExperimentFile new_experiment(const ExperimentSetup& setup)
{
    ExperimentFile file;
    file.state = make_initial_state(setup.config);
    file.oracle = setup.oracle;
    return file;
}

std::string serialize_experiment(const ExperimentFile& file)
{
    const auto& state = file.state;
    json measurements = json::array();
    for (const auto& meas : state.measurements) {
        measurements.push_back({{"m", meas.location.m}, {"k", meas.location.k}, {"response", meas.response}});
    }
    json history = json::array();
    for (const auto& h : state.history) {
        history.push_back(history_to_json(h));
    }
    json doc = {
        {"version", kExperimentVersion},
        {"config", config_to_json(state.config)},
        {"oracle", oracle_to_json(file.oracle)},
        {"iteration", state.iteration},
        {"measurements", measurements},
        {"model", state.model ? model_to_json(*state.model) : json(nullptr)},
        {"history", history},
        {"pending_suggestion", file.pending_suggestion ? history_to_json(*file.pending_suggestion) : json(nullptr)},
    };
    return doc.dump(2) + "\n";
}

ExperimentFile deserialize_experiment(std::string_view text)
{
    json doc = parse_json(text);
    ExperimentFile file;
    try {
        ObjectReader r(doc, "$");
        r.allow_only({"version", "config", "oracle", "iteration", "measurements", "model", "history",
                      "pending_suggestion"});
        if (r.string("version") != kExperimentVersion) {
            throw ConfigError("$.version: unknown experiment file version '" + r.string("version") + "'");
        }
        auto& state = file.state;
        auto config_reader = r.object("config");
        config_reader.allow_only({"grid", "threshold", "alpha", "max_iterations", "seed", "hypothetical_variance",
                                  "initial_design"});
        state.config = parse_experiment_config(config_reader, "$.config", false);
        file.oracle = parse_oracle(r.object("oracle"), state.config.seed, {});
        state.iteration = static_cast<int>(r.integer("iteration"));

        const auto& measurements = r.at("measurements");
        if (!measurements.is_array()) {
            throw ConfigError("$.measurements: expected an array");
        }
        for (std::size_t i = 0; i < measurements.size(); ++i) {
            ObjectReader m(measurements[i], "$.measurements[" + std::to_string(i) + "]");
            m.allow_only({"m", "k", "response"});
            Combination where = state.config.grid.snap({m.number("m"), m.number("k")});
            state.measurements.push_back({where, m.number("response")});
        }
        validate_measurements(state.measurements);

        if (r.has("model")) {
            state.model = parse_model(r.object("model"));
        }
        const auto& history = r.at("history");
        if (!history.is_array()) {
            throw ConfigError("$.history: expected an array");
        }
        for (std::size_t i = 0; i < history.size(); ++i) {
            auto entry = parse_history(ObjectReader(history[i], "$.history[" + std::to_string(i) + "]"));
            entry.chosen = state.config.grid.snap(entry.chosen);
            state.history.push_back(entry);
        }
        if (r.has("pending_suggestion")) {
            auto entry = parse_history(r.object("pending_suggestion"));
            entry.chosen = state.config.grid.snap(entry.chosen);
            file.pending_suggestion = entry;
        }

        if (state.iteration < 0 || static_cast<std::size_t>(state.iteration) != state.history.size()) {
            throw ConfigError("$.iteration: does not match the history length");
        }
        if (state.iteration > state.config.max_iterations) {
            throw ConfigError("$.iteration: exceeds max_iterations");
        }
        std::size_t measured_initial = state.config.initial_design.size() - state.pending_initial().size();
        if (state.measurements.size() != measured_initial + state.history.size()) {
            throw ConfigError("$.measurements: count does not equal measured initial points plus iterations");
        }
        for (std::size_t i = 0; i < state.history.size(); ++i) {
            if (state.history[i].iteration != static_cast<int>(i) + 1 || !state.is_measured(state.history[i].chosen)) {
                throw ConfigError("$.history[" + std::to_string(i) + "]: inconsistent with measurements");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed experiment file: ") + e.what());
    } catch (const DuplicateLocationError& e) {
        throw ConfigError(std::string("$.measurements: ") + e.what());
    }
    return file;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void save_experiment(const std::filesystem::path& path, const ExperimentFile& file)
{
    write_file_atomic(path, serialize_experiment(file));
}

ExperimentFile load_experiment(const std::filesystem::path& path)
{
    try {
        return deserialize_experiment(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string format_number(double value)
{
    if (value == 0.0) {
        return "0";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string predictions_csv(std::span<const Prediction> predictions)
{
    std::string out = "m,k,mean,variance,ci_lower,ci_upper\n";
    for (const auto& p : predictions) {
        out += format_number(p.location.m) + "," + format_number(p.location.k) + "," + format_number(p.mean) + "," +
               format_number(p.variance) + "," + format_number(p.ci_lower) + "," + format_number(p.ci_upper) + "\n";
    }
    return out;
}

std::string labels_csv(const LabelMap& labels)
{
    std::string out = "m,k,label\n";
    for (std::size_t i = 0; i < labels.cells.size(); ++i) {
        out += format_number(labels.cells[i].m) + "," + format_number(labels.cells[i].k) + "," +
               std::string(to_string(labels.labels[i])) + "\n";
    }
    return out;
}

std::string region_json(const RegionReport& region)
{
    auto bound = [&](double v) { return region.cell_count == 0 ? std::string("null") : format_number(v); };
    std::string out = "{\"cell_count\": " + std::to_string(region.cell_count) + ", \"m_min\": " + bound(region.m_min) +
                      ", \"m_max\": " + bound(region.m_max) + ", \"k_min\": " + bound(region.k_min) +
                      ", \"k_max\": " + bound(region.k_max) + ", \"cells\": [";
    for (std::size_t i = 0; i < region.cells.size(); ++i) {
        out += (i ? ", [" : "[") + format_number(region.cells[i].m) + ", " + format_number(region.cells[i].k) + "]";
    }
    out += "]}\n";
    return out;
}

std::string contour_csv(const std::vector<Polyline>& polylines)
{
    std::string out = "polyline_id,m,k\n";
    for (std::size_t id = 0; id < polylines.size(); ++id) {
        for (const auto& p : polylines[id]) {
            out += std::to_string(id) + "," + format_number(p.m) + "," + format_number(p.k) + "\n";
        }
    }
    return out;
}

std::string audit_log(std::span<const HistoryEntry> history)
{
    std::string out;
    for (const auto& h : history) {
        out += "{\"iteration\": " + std::to_string(h.iteration) + ", \"chosen_m\": " + format_number(h.chosen.m) +
               ", \"chosen_k\": " + format_number(h.chosen.k) + ", \"rc_score\": " + format_number(h.rc_score) +
               ", \"model_family\": \"" + std::string(to_string(h.model.model.family)) +
               "\", \"nugget\": " + format_number(h.model.model.nugget) +
               ", \"range\": " + format_number(h.model.model.range) +
               ", \"sill\": " + format_number(h.model.model.sill) +
               ", \"n_uncertain\": " + std::to_string(h.n_uncertain) + "}\n";
    }
    return out;
}

ReportProducts build_report(const ExperimentState& state, std::optional<double> alpha)
{
    if (state.measurements.empty()) {
        throw InsufficientDataError("no measurements to report on");
    }
    ExperimentConfig config = state.config;
    if (alpha) {
        normal_quantile(*alpha);
        config.alpha = *alpha;
    }
    ReportProducts products;
    products.fit = fit_surface(config, state.measurements);
    products.labels = classify_grid(config.grid, products.fit.predictions, state.measurements, config.threshold);
    products.region = largest_reliable_region(products.labels);
    products.contours = threshold_contour(config.grid, products.fit.predictions, config.threshold);
    return products;
}

ExportPaths export_paths(const std::filesystem::path& output_dir)
{
    return {output_dir / "predictions.csv", output_dir / "labels.csv", output_dir / "region.json",
            output_dir / "contour.csv", output_dir / "audit.ndjson"};
}

ExportPaths write_exports(const std::filesystem::path& output_dir,
                          const ReportProducts& products,
                          std::span<const HistoryEntry> history)
{
    std::filesystem::create_directories(output_dir);
    auto paths = export_paths(output_dir);
    write_file_atomic(paths.predictions, predictions_csv(products.fit.predictions));
    write_file_atomic(paths.labels, labels_csv(products.labels));
    write_file_atomic(paths.region, region_json(products.region));
    write_file_atomic(paths.contour, contour_csv(products.contours));
    write_file_atomic(paths.audit, audit_log(history));
    return paths;
}

}  // namespace akriging
