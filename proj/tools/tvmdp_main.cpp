#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvmdp/ccmle.hpp"
#include "tvmdp/errors.hpp"
#include "tvmdp/harness.hpp"
#include "tvmdp/model.hpp"

#ifndef TVMDP_DEFAULT_CONFIG_DIR
#define TVMDP_DEFAULT_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace tvmdp;

namespace {

struct CommonOpts {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int reps = 0;
    bool reps_set = false;
    std::string out_dir = ".";
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* config = cmd->add_option("--config", opts.config, "experiment config (JSON)");
    if (config_required) config->required();
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--reps", opts.reps, "override the replication count")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { opts.reps_set = true; });
    cmd->add_option("--out-dir", opts.out_dir, "directory for output files");
    cmd->add_flag("--quiet", opts.quiet, "print errors only");
}

void apply_overrides(ExperimentConfig& config, const CommonOpts& opts) {
    if (opts.seed_set) config.seed = opts.seed;
    if (opts.reps_set) config.replications = opts.reps;
}

void info(const CommonOpts& opts, const std::string& line) {
    if (!opts.quiet) std::printf("%s\n", line.c_str());
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

void write_series(const std::vector<MetricsSeries>& series, const std::string& label,
                  const CommonOpts& opts) {
    fs::create_directories(opts.out_dir);
    for (std::size_t r = 0; r < series.size(); ++r) {
        const fs::path path =
            fs::path(opts.out_dir) / (label + "_rep" + std::to_string(r) + ".csv");
        export_csv(series[r], path.string());
        info(opts, "wrote " + path.string());
    }
}

int cmd_run(const CommonOpts& opts) {
    ExperimentConfig config = load_config(opts.config);
    apply_overrides(config, opts);
    const std::string label = stem_of(opts.config);
    info(opts, "running " + label + ": " + to_string(config.scenario) + " / " +
                   to_string(config.estimator) + ", " + std::to_string(config.steps) +
                   " steps, " + std::to_string(config.replications) + " replication(s)");
    const std::vector<MetricsSeries> series = run_experiment(config);
    write_series(series, label, opts);
    if (!opts.quiet) std::printf("%s", format_compare_table({compare_runs(label, series)}).c_str());
    return 0;
}

int cmd_reproduce(const std::string& id, const CommonOpts& opts) {
    const fs::path dir = opts.config.empty() ? fs::path(TVMDP_DEFAULT_CONFIG_DIR)
                                             : fs::path(opts.config);
    if (!fs::is_directory(dir)) throw IoError("config directory not found: " + dir.string());
    std::vector<fs::path> matches;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        const std::string stem = entry.path().stem().string();
        if (id == "all" || stem.rfind(id, 0) == 0) matches.push_back(entry.path());
    }
    std::sort(matches.begin(), matches.end());
    if (matches.empty()) throw ConfigInvalid("no bundled config matches id: " + id);

    std::vector<CompareSummary> summaries;
    for (const fs::path& path : matches) {
        ExperimentConfig config = load_config(path.string());
        apply_overrides(config, opts);
        const std::string label = stem_of(path.string());
        info(opts, "running " + label + " (" + std::to_string(config.replications) +
                       " replication(s))");
        const std::vector<MetricsSeries> series = run_experiment(config);
        write_series(series, label, opts);
        summaries.push_back(compare_runs(label, series));
    }
    if (!opts.quiet) std::printf("%s", format_compare_table(summaries).c_str());
    return 0;
}

int cmd_compare(const std::vector<std::string>& files, const CommonOpts& opts) {
    std::map<std::string, std::vector<MetricsSeries>> groups;
    std::vector<std::string> order;
    for (const std::string& file : files) {
        std::string label = stem_of(file);
        const std::size_t rep = label.rfind("_rep");
        if (rep != std::string::npos &&
            label.find_first_not_of("0123456789", rep + 4) == std::string::npos)
            label.erase(rep);
        if (!groups.count(label)) order.push_back(label);
        groups[label].push_back(load_metrics_csv(file));
    }
    std::vector<CompareSummary> summaries;
    for (const std::string& label : order)
        summaries.push_back(compare_runs(label, groups[label]));
    std::printf("%s", format_compare_table(summaries).c_str());
    return 0;
}

int cmd_estimate(const std::string& trajectory_file, const CommonOpts& opts) {
    const ExperimentConfig config = load_config(opts.config);
    const Trajectory traj = load_trajectory_csv(trajectory_file);
    if (traj.horizon() == 0) throw ShapeMismatch("trajectory has no transitions");

    int num_states = 0, num_actions = 0;
    for (int s : traj.states) num_states = std::max(num_states, s + 1);
    for (int a : traj.actions) num_actions = std::max(num_actions, a + 1);
    const int horizon = traj.horizon();
    const DriftBound bound = DriftBound::constant(config_epsilon(config));
    const bool classical = config.estimator == EstimatorId::Classical ||
                           config.estimator == EstimatorId::ClassicalWindow;

    fs::create_directories(opts.out_dir);
    const fs::path out_path =
        fs::path(opts.out_dir) / (stem_of(trajectory_file) + "_estimate.csv");
    std::string out = "state,action,t,next_state,prob\n";
    char line[96];
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            CcmleProblem problem;
            problem.n = num_states;
            for (int t = 0; t < horizon; ++t) {
                if (traj.states[t] != s || traj.actions[t] != a) continue;
                problem.times.push_back(t);
                problem.successors.push_back(traj.states[t + 1]);
            }
            if (problem.times.empty()) continue;
            problem.bound = bound;
            problem.horizon = horizon;

            std::vector<std::vector<double>> rows;
            if (classical) {
                const int cutoff = config.estimator == EstimatorId::ClassicalWindow
                                       ? horizon - *config.window
                                       : std::numeric_limits<int>::min();
                std::vector<double> counts(num_states, 0.0);
                double total = 0.0;
                for (std::size_t i = 0; i < problem.times.size(); ++i) {
                    if (problem.times[i] < cutoff) continue;
                    counts[problem.successors[i]] += 1.0;
                    total += 1.0;
                }
                for (double& c : counts) c = total > 0.0 ? c / total : 1.0 / num_states;
                rows.assign(horizon, counts);
            } else {
                if (config.estimator == EstimatorId::CcmleForgetful)
                    problem.window = config.window;
                const CcmleSolution solution = ccmle_solve(problem);
                rows.reserve(horizon);
                for (int t = 0; t < horizon; ++t)
                    rows.push_back(ccmle_complete_at(solution, problem, t));
            }
            for (int t = 0; t < horizon; ++t) {
                for (int s2 = 0; s2 < num_states; ++s2) {
                    std::snprintf(line, sizeof line, "%d,%d,%d,%d,%.9g\n", s, a, t, s2,
                                  rows[t][s2]);
                    out += line;
                }
            }
        }
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw IoError("cannot open output file: " + out_path.string());
    file << out;
    if (!file) throw IoError("failed writing output file: " + out_path.string());
    info(opts, "wrote " + out_path.string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-varying MDP estimation and experiment harness"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    CLI::App* run = app.add_subcommand("run", "run one experiment config");
    add_common(run, run_opts, true);

    CommonOpts rep_opts;
    std::string reproduce_id;
    CLI::App* reproduce =
        app.add_subcommand("reproduce", "run a bundled experiment suite by id");
    reproduce->add_option("id", reproduce_id, "suite id prefix, or 'all'")->required();
    add_common(reproduce, rep_opts, false);

    CommonOpts cmp_opts;
    std::vector<std::string> compare_files;
    CLI::App* compare =
        app.add_subcommand("compare", "summarize metrics CSV files, grouped by run name");
    compare->add_option("files", compare_files, "metrics CSV files")
        ->required()
        ->expected(-1);
    add_common(compare, cmp_opts, false);

    CommonOpts est_opts;
    std::string trajectory_file;
    CLI::App* estimate =
        app.add_subcommand("estimate", "estimate transition rows from a trajectory CSV");
    estimate->add_option("trajectory", trajectory_file, "trajectory CSV file")->required();
    add_common(estimate, est_opts, true);

    try {
        app.parse(argc, argv);
        if (*run) return cmd_run(run_opts);
        if (*reproduce) return cmd_reproduce(reproduce_id, rep_opts);
        if (*compare) return cmd_compare(compare_files, cmp_opts);
        return cmd_estimate(trajectory_file, est_opts);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigInvalid& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
