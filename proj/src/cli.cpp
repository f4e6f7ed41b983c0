#include "akriging/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "akriging/errors.hpp"
#include "akriging/experiment_io.hpp"

namespace akriging {

namespace fs = std::filesystem;

namespace {

fs::path default_experiment_path(const fs::path& config)
{
    auto out = config;
    out.replace_extension(".experiment.json");
    return out;
}

fs::path output_dir_for(const fs::path& experiment)
{
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
        return env;
    }
    auto stem = experiment.stem().string();
    if (auto dot = stem.find('.'); dot != std::string::npos) {
        stem = stem.substr(0, dot);
    }
    return experiment.parent_path() / (stem + "_out");
}

void print_region(std::ostream& out, const ReportProducts& products, const ExperimentState& state)
{
    const auto& region = products.region;
    out << "measurements: " << state.measurements.size() << " (" << state.iteration << " adaptive)\n";
    out << "model: " << to_string(products.fit.variogram.model.family)
        << " nugget=" << format_number(products.fit.variogram.model.nugget)
        << " range=" << format_number(products.fit.variogram.model.range)
        << " sill=" << format_number(products.fit.variogram.model.sill) << "\n";
    out << "uncertain combinations: " << products.fit.n_uncertain << "\n";
    out << "reliable region: " << region.cell_count << " cells";
    if (region.cell_count > 0) {
        out << ", m in [" << format_number(region.m_min) << ", " << format_number(region.m_max) << "], k in ["
            << format_number(region.k_min) << ", " << format_number(region.k_max) << "]";
    }
    out << "\n";
}

void print_exports(std::ostream& out, const ExportPaths& paths)
{
    out << "wrote " << paths.predictions.string() << ", " << paths.labels.string() << ", " << paths.region.string()
        << ", " << paths.contour.string() << ", " << paths.audit.string() << "\n";
}

int cmd_init(const fs::path& config_path, std::optional<fs::path> experiment_path, bool force, std::ostream& out)
{
    auto setup = load_config(config_path);
    auto target = experiment_path.value_or(default_experiment_path(config_path));
    if (fs::exists(target) && !force) {
        throw ConfigError(target.string() + " already exists; pass --force to overwrite");
    }
    auto file = new_experiment(setup);
    save_experiment(target, file);
    out << "initialized " << target.string() << " with " << file.state.config.initial_design.size()
        << " pending initial combinations\n";
    return kExitOk;
}

int cmd_run(const fs::path& experiment_path,
            std::optional<int> max_iter,
            std::optional<std::uint64_t> seed,
            std::ostream& out,
            std::ostream& err)
{
    auto file = load_experiment(experiment_path);
    if (seed) {
        file.state.config.seed = *seed;
        file.oracle.seed = *seed;
    }
    if (max_iter && *max_iter < 0) {
        throw ConfigError("--max-iter must be >= 0");
    }
    auto oracle = make_oracle(file.oracle, file.state.config.grid);

    RunOptions options;
    options.max_iterations = max_iter;
    options.on_suggestion = [&](const HistoryEntry& entry) { file.pending_suggestion = entry; };
    options.on_progress = [&](const ExperimentState& state) {
        file.state = state;
        file.pending_suggestion.reset();
        save_experiment(experiment_path, file);
    };

    RunOutcome outcome;
    try {
        outcome = run_experiment(file.state, *oracle, options);
    } catch (const OracleMiss& miss) {
        save_experiment(experiment_path, file);
        err << "oracle-miss: no simulation result for m=" << format_number(miss.location.m)
            << " k=" << format_number(miss.location.k) << "\n";
        out << "suggest: m=" << format_number(miss.location.m) << " k=" << format_number(miss.location.k)
            << "\nrun that simulation, then `append` its response and re-run\n";
        return kExitOracleMiss;
    }
    file.pending_suggestion.reset();
    save_experiment(experiment_path, file);

    auto products = build_report(file.state);
    auto paths = write_exports(output_dir_for(experiment_path), products, file.state.history);
    out << "stop: " << to_string(outcome.reason) << " after " << file.state.iteration << " iterations\n";
    print_region(out, products, file.state);
    print_exports(out, paths);
    return kExitOk;
}

int cmd_step(const fs::path& experiment_path, std::ostream& out)
{
    auto file = load_experiment(experiment_path);
    auto pending = file.state.pending_initial();
    if (!pending.empty()) {
        out << "suggest: m=" << format_number(pending.front().m) << " k=" << format_number(pending.front().k)
            << " (initial design, " << pending.size() << " remaining)\n";
        return kExitOk;
    }
    auto plan = plan_step(file.state, file.state.config.max_iterations);
    file.state.model = plan.fit.variogram;
    if (plan.stop != StopReason::Continue) {
        file.pending_suggestion.reset();
        save_experiment(experiment_path, file);
        out << "stop: " << to_string(plan.stop) << "\n";
        return kExitOk;
    }
    file.pending_suggestion = plan.next;
    save_experiment(experiment_path, file);
    out << "suggest: m=" << format_number(plan.next->chosen.m) << " k=" << format_number(plan.next->chosen.k)
        << " rc_score=" << format_number(plan.next->rc_score) << " (iteration " << plan.next->iteration << ")\n";
    return kExitOk;
}

int cmd_append(const fs::path& experiment_path, double m, double k, double response, std::ostream& out)
{
    auto file = load_experiment(experiment_path);
    auto& state = file.state;
    Combination where = state.config.grid.snap({m, k});
    if (!std::isfinite(response) || response < 0.0) {
        throw ConfigError("--response must be finite and >= 0");
    }
    if (state.is_measured(where)) {
        throw ConfigError(to_string(where) + " is already measured");
    }
    auto pending = state.pending_initial();
    if (std::find(pending.begin(), pending.end(), where) != pending.end()) {
        state.measurements.push_back({where, response});
        out << "recorded initial measurement at " << to_string(where) << "\n";
    } else if (file.pending_suggestion && file.pending_suggestion->chosen == where && pending.empty()) {
        if (state.iteration >= state.config.max_iterations) {
            throw ConfigError("iteration budget already reached");
        }
        state.measurements.push_back({where, response});
        state.history.push_back(*file.pending_suggestion);
        state.iteration = file.pending_suggestion->iteration;
        file.pending_suggestion.reset();
        out << "recorded iteration " << state.iteration << " at " << to_string(where) << "\n";
    } else {
        throw ConfigError(to_string(where) +
                          " is neither a pending initial-design point nor the outstanding suggestion");
    }
    save_experiment(experiment_path, file);
    return kExitOk;
}

int cmd_report(const fs::path& experiment_path, std::optional<double> alpha, std::ostream& out)
{
    auto file = load_experiment(experiment_path);
    if (file.state.measurements.empty()) {
        throw ConfigError("experiment has no measurements yet");
    }
    auto products = build_report(file.state, alpha);
    auto paths = write_exports(output_dir_for(experiment_path), products, file.state.history);
    print_region(out, products, file.state);
    print_exports(out, paths);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Adaptive kriging for threshold-region estimation on a 2-D grid", "akriging"};
    app.require_subcommand(1);

    std::string config_path;
    std::string init_experiment;
    bool force = false;
    auto* init = app.add_subcommand("init", "Create an experiment file from a JSON config");
    init->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
    init->add_option("--experiment", init_experiment, "Experiment file to create (default: <config>.experiment.json)");
    init->add_flag("--force", force, "Overwrite an existing experiment file");

    std::string experiment;
    std::optional<int> max_iter;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Measure and iterate until a stopping rule fires");
    run->add_option("experiment", experiment, "Experiment file")->required();
    run->add_option("--max-iter", max_iter, "Iteration budget for this invocation");
    run->add_option("--seed", seed, "Seed for the synthetic oracle");

    auto* step = app.add_subcommand("step", "Suggest the next combination without measuring it");
    step->add_option("experiment", experiment, "Experiment file")->required();

    double m = 0.0, k = 0.0, response = 0.0;
    auto* append = app.add_subcommand("append", "Record a measured response");
    append->add_option("experiment", experiment, "Experiment file")->required();
    append->add_option("--m", m, "Normalized mass ratio")->required();
    append->add_option("--k", k, "Normalized stiffness ratio")->required();
    append->add_option("--response", response, "Measured drift (%)")->required();

    std::optional<double> alpha;
    auto* report = app.add_subcommand("report", "Refit and export predictions, labels, region and contour");
    report->add_option("experiment", experiment, "Experiment file")->required();
    report->add_option("--alpha", alpha, "Significance level override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (init->parsed()) {
            std::optional<fs::path> target;
            if (!init_experiment.empty()) {
                target = init_experiment;
            }
            return cmd_init(config_path, target, force, out);
        }
        if (run->parsed()) {
            return cmd_run(experiment, max_iter, seed, out, err);
        }
        if (step->parsed()) {
            return cmd_step(experiment, out);
        }
        if (append->parsed()) {
            return cmd_append(experiment, m, k, response, out);
        }
        if (report->parsed()) {
            return cmd_report(experiment, alpha, out);
        }
    } catch (const OracleMiss& e) {
        err << "error: " << e.what() << "\n";
        return kExitOracleMiss;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}

}  // namespace akriging
