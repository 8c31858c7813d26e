#include "tvmdp/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "tvmdp/ccmle.hpp"
#include "tvmdp/env/bandit.hpp"
#include "tvmdp/env/gridworld.hpp"
#include "tvmdp/env/twostate.hpp"
#include "tvmdp/env/wind.hpp"
#include "tvmdp/errors.hpp"
#include "tvmdp/policy.hpp"
#include "tvmdp/rng.hpp"
#include "tvmdp/uncertainty.hpp"

namespace tvmdp {

std::string to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::GridworldLearning: return "gridworld-learning";
        case ScenarioId::GridworldPatrol: return "gridworld-patrol";
        case ScenarioId::TwostateLearning: return "twostate-learning";
        case ScenarioId::TwostatePlanning: return "twostate-planning";
        case ScenarioId::Bandit: return "bandit";
        default: return "wind";
    }
}

std::string to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::Ccmle: return "ccmle";
        case EstimatorId::CcmleForgetful: return "ccmle-forgetful";
        case EstimatorId::Classical: return "classical";
        default: return "classical-window";
    }
}

ScenarioId scenario_from_string(const std::string& name) {
    for (ScenarioId id : {ScenarioId::GridworldLearning, ScenarioId::GridworldPatrol,
                          ScenarioId::TwostateLearning, ScenarioId::TwostatePlanning,
                          ScenarioId::Bandit, ScenarioId::Wind})
        if (to_string(id) == name) return id;
    throw ConfigInvalid("unknown scenario: " + name);
}

EstimatorId estimator_from_string(const std::string& name) {
    for (EstimatorId id : {EstimatorId::Ccmle, EstimatorId::CcmleForgetful,
                           EstimatorId::Classical, EstimatorId::ClassicalWindow})
        if (to_string(id) == name) return id;
    throw ConfigInvalid("unknown estimator: " + name);
}

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw ConfigInvalid(key + " must be a number");
    return j.at(key).get<double>();
}

int require_int(const json& j, const std::string& key) {
    if (!j.at(key).is_number_integer()) throw ConfigInvalid(key + " must be an integer");
    return j.at(key).get<int>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigInvalid("config root must be a JSON object");

    static const std::set<std::string> known = {
        "schema_version", "scenario",       "estimator",       "steps",
        "seed",           "replications",   "epsilon",         "window",
        "beta",           "policy_horizon", "switch_duration", "instant_switch",
        "perfect_knowledge", "description",
    };
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw ConfigInvalid("unknown config key: " + item.key());

    for (const char* key : {"schema_version", "scenario", "estimator", "steps"})
        if (!j.contains(key)) throw ConfigInvalid(std::string("missing config key: ") + key);
    if (require_int(j, "schema_version") != 1)
        throw ConfigInvalid("schema_version must be 1");

    ExperimentConfig config;
    if (!j.at("scenario").is_string()) throw ConfigInvalid("scenario must be a string");
    config.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    if (!j.at("estimator").is_string()) throw ConfigInvalid("estimator must be a string");
    config.estimator = estimator_from_string(j.at("estimator").get<std::string>());
    config.steps = require_int(j, "steps");
    if (config.steps < 1) throw ConfigInvalid("steps must be >= 1");

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() || j.at("seed").get<double>() < 0)
            throw ConfigInvalid("seed must be a nonnegative integer");
        config.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("replications")) {
        config.replications = require_int(j, "replications");
        if (config.replications < 1) throw ConfigInvalid("replications must be >= 1");
    }
    if (j.contains("epsilon")) {
        const double eps = require_number(j, "epsilon");
        if (eps < 0.0 || eps > 1.0) throw ConfigInvalid("epsilon must be in [0, 1]");
        config.epsilon = eps;
    }
    if (j.contains("window")) {
        const int w = require_int(j, "window");
        if (w < 1) throw ConfigInvalid("window must be >= 1");
        config.window = w;
    }
    if (j.contains("beta")) {
        config.beta = require_number(j, "beta");
        if (config.beta < 0.0) throw ConfigInvalid("beta must be nonnegative");
    }
    if (j.contains("policy_horizon")) {
        config.policy_horizon = require_int(j, "policy_horizon");
        if (config.policy_horizon < 1) throw ConfigInvalid("policy_horizon must be >= 1");
    }
    if (j.contains("switch_duration")) {
        const double d = require_number(j, "switch_duration");
        if (!(d > 0.0)) throw ConfigInvalid("switch_duration must be positive");
        config.switch_duration = d;
    }
    if (j.contains("instant_switch")) {
        const int s = require_int(j, "instant_switch");
        if (s < 0) throw ConfigInvalid("instant_switch must be nonnegative");
        config.instant_switch = s;
    }
    if (j.contains("perfect_knowledge")) {
        if (!j.at("perfect_knowledge").is_boolean())
            throw ConfigInvalid("perfect_knowledge must be a boolean");
        config.perfect_knowledge = j.at("perfect_knowledge").get<bool>();
    }
    if (j.contains("description")) {
        if (!j.at("description").is_string())
            throw ConfigInvalid("description must be a string");
        config.description = j.at("description").get<std::string>();
    }

    const bool gridworld = config.scenario == ScenarioId::GridworldLearning ||
                           config.scenario == ScenarioId::GridworldPatrol;
    if ((config.switch_duration || config.instant_switch) && !gridworld)
        throw ConfigInvalid("switch_duration/instant_switch apply only to gridworld scenarios");
    if (config.perfect_knowledge && config.scenario != ScenarioId::TwostatePlanning)
        throw ConfigInvalid("perfect_knowledge applies only to twostate-planning");
    const bool windowed = config.estimator == EstimatorId::CcmleForgetful ||
                          config.estimator == EstimatorId::ClassicalWindow;
    if (windowed && !config.window)
        throw ConfigInvalid("window is required for windowed estimators");
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

double config_epsilon(const ExperimentConfig& config) {
    if (config.epsilon) return *config.epsilon;
    switch (config.scenario) {
        case ScenarioId::GridworldLearning:
        case ScenarioId::GridworldPatrol: return 0.01;
        case ScenarioId::TwostateLearning:
        case ScenarioId::TwostatePlanning: return TwoStateScenario{}.drift_eps();
        case ScenarioId::Bandit: return 0.25;
        default: return 0.03;
    }
}

namespace {

constexpr const char* kCsvHeader = "t,avg_err,max_err,walls,reward,avg_reward,total_uncertainty";

int sample_index(const std::vector<double>& probs, CounterRng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

// Estimation and uncertainty bookkeeping for one observation unit. The
// uncertainty metric is always drift-aware; the estimate follows the
// configured estimator kind.
struct Unit {
    Unit(int n, const DriftBound& bound, EstimatorId kind, std::optional<int> window)
        : n(n),
          kind(kind),
          window(window),
          session(n, bound, {},
                  kind == EstimatorId::CcmleForgetful ? window : std::nullopt) {}

    void observe(int t, int outcome) {
        session.observe(t, outcome);
        times.push_back(t);
        outcomes.push_back(outcome);
    }

    std::vector<double> row(int horizon, int t) {
        if (kind == EstimatorId::Ccmle || kind == EstimatorId::CcmleForgetful)
            return session.estimate_at(horizon, t);
        const int cutoff = kind == EstimatorId::ClassicalWindow
                               ? horizon - *window
                               : std::numeric_limits<int>::min();
        std::vector<double> counts(n, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] < cutoff) continue;
            counts[outcomes[i]] += 1.0;
            total += 1.0;
        }
        if (total == 0.0) return std::vector<double>(n, 1.0 / n);
        for (double& c : counts) c /= total;
        return counts;
    }

    double uncertainty_value(int horizon) { return session.uncertainty_at(horizon).value; }

    int n;
    EstimatorId kind;
    std::optional<int> window;
    UncertaintySession session;
    std::vector<int> times;
    std::vector<int> outcomes;
};

KernelSnapshot grid_snapshot(const GridworldScenario& grid, std::vector<Unit>& units,
                             int t) {
    KernelSnapshot model(grid.num_states(), GridworldScenario::num_actions);
    std::vector<std::vector<double>> dir_rows;
    dir_rows.reserve(units.size());
    for (auto& unit : units) dir_rows.push_back(unit.row(t, t));
    for (int s = 0; s < grid.num_states(); ++s) {
        for (int a = 0; a < GridworldScenario::num_actions; ++a) {
            if (grid.is_interior(s)) {
                for (int d = 0; d < GridworldScenario::num_directions; ++d)
                    model.prob(s, a, grid.move(s, d)) += dir_rows[a][d];
            } else {
                model.prob(s, a, grid.bounce_target(s)) = 1.0;
            }
        }
    }
    return model;
}

MetricsSeries run_gridworld(const ExperimentConfig& cfg, std::uint64_t seed, bool patrol) {
    GridworldScenario grid;
    if (cfg.switch_duration) grid.switch_duration = *cfg.switch_duration;
    if (cfg.instant_switch) grid.instant_switch_time = *cfg.instant_switch;
    const DriftBound bound = DriftBound::constant(config_epsilon(cfg));
    CounterRng rng(seed);

    std::vector<Unit> units;
    for (int a = 0; a < GridworldScenario::num_actions; ++a)
        units.emplace_back(GridworldScenario::num_directions, bound, cfg.estimator,
                           cfg.window);

    PatrolTracker tracker;
    std::vector<long long> use_count(GridworldScenario::num_actions, 0);
    int state = 0;
    double cumulative_reward = 0.0;
    MetricsSeries series;
    series.rows.reserve(cfg.steps);

    for (int t = 0; t < cfg.steps; ++t) {
        int action = 0;
        if (patrol) {
            const KernelSnapshot model = grid_snapshot(grid, units, t);
            const RewardFn reward = [&](int s, int) { return tracker.reward(s, grid); };
            action = value_iteration_horizon(model, reward, cfg.policy_horizon, state).second;
        } else {
            for (int a = 1; a < GridworldScenario::num_actions; ++a)
                if (use_count[a] < use_count[action]) action = a;
        }
        ++use_count[action];

        int next;
        if (grid.is_interior(state)) {
            std::vector<double> probs(GridworldScenario::num_directions);
            for (int d = 0; d < GridworldScenario::num_directions; ++d)
                probs[d] = grid.direction_prob(action, d, t);
            const int dir = sample_index(probs, rng);
            next = grid.move(state, dir);
            units[action].observe(t, dir);
        } else {
            next = grid.bounce_target(state);
        }

        MetricsRow row;
        row.t = t + 1;
        if (patrol) {
            const int before = tracker.walls_reached();
            tracker.update(next, grid);
            row.reward = tracker.walls_reached() > before ? 1.0 : 0.0;
            cumulative_reward += row.reward;
            row.walls = tracker.walls_reached();
            row.avg_reward = cumulative_reward / (t + 1);
        }
        double total_abs = 0.0;
        for (int a = 0; a < GridworldScenario::num_actions; ++a) {
            const std::vector<double> est = units[a].row(t + 1, t);
            for (int d = 0; d < GridworldScenario::num_directions; ++d) {
                const double diff = std::abs(est[d] - grid.direction_prob(a, d, t));
                total_abs += diff;
                row.max_err = std::max(row.max_err, diff);
            }
            row.total_uncertainty += units[a].uncertainty_value(t + 1);
        }
        row.avg_err = total_abs / 25.0;
        series.rows.push_back(row);
        state = next;
    }
    return series;
}

MetricsSeries run_twostate_learning(const ExperimentConfig& cfg, std::uint64_t seed) {
    TwoStateScenario scenario;
    const DriftBound bound = DriftBound::constant(config_epsilon(cfg));
    CounterRng rng(seed);
    Unit unit(2, bound, cfg.estimator, cfg.window);

    int state = 0;
    MetricsSeries series;
    series.rows.reserve(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
        int next;
        if (state == 0) {
            const int outcome = rng.next_double() < scenario.switch_prob(t) ? 1 : 0;
            unit.observe(t, outcome);
            next = outcome;
        } else {
            next = 0;
        }
        MetricsRow row;
        row.t = t + 1;
        const double est = unit.row(t + 1, t)[1];
        row.avg_err = row.max_err = std::abs(est - scenario.switch_prob(t));
        row.total_uncertainty = unit.uncertainty_value(t + 1);
        series.rows.push_back(row);
        state = next;
    }
    return series;
}

MetricsSeries run_twostate_planning(const ExperimentConfig& cfg, std::uint64_t seed) {
    TwoStateScenario scenario;
    scenario.with_actions = true;
    const DriftBound bound = DriftBound::constant(config_epsilon(cfg));
    CounterRng rng(seed);
    Unit unit(2, bound, cfg.estimator, cfg.window);

    const RewardFn reward = [&](int s, int a) { return scenario.reward(s, a); };
    PolicySettings policy;
    policy.beta = cfg.beta;
    policy.horizon = cfg.policy_horizon;

    int state = 0;
    double cumulative_reward = 0.0;
    MetricsSeries series;
    series.rows.reserve(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
        KernelSnapshot model(2, 3);
        for (int s = 0; s < 2; ++s)
            for (int a : {TwoStateScenario::kBlue, TwoStateScenario::kRed,
                          TwoStateScenario::kBlack})
                model.set_allowed(s, a, scenario.action_allowed(s, a));
        model.prob(0, TwoStateScenario::kBlue, 0) = 1.0;
        model.prob(1, TwoStateScenario::kBlack, 0) = 1.0;
        const double p_hat = cfg.perfect_knowledge ? scenario.switch_prob(t)
                                                   : unit.row(t, t)[1];
        model.prob(0, TwoStateScenario::kRed, 0) = 1.0 - p_hat;
        model.prob(0, TwoStateScenario::kRed, 1) = p_hat;
        if (cfg.beta != 0.0)
            model.set_bonus(0, TwoStateScenario::kRed, unit.uncertainty_value(t));

        const int action = control_action(model, reward, state, policy);
        int next;
        if (state == 1) {
            next = 0;
        } else if (action == TwoStateScenario::kBlue) {
            next = 0;
        } else {
            const int outcome = rng.next_double() < scenario.switch_prob(t) ? 1 : 0;
            unit.observe(t, outcome);
            next = outcome;
        }

        MetricsRow row;
        row.t = t + 1;
        row.reward = scenario.reward(state, action);
        cumulative_reward += row.reward;
        row.avg_reward = cumulative_reward / (t + 1);
        const double est =
            cfg.perfect_knowledge ? scenario.switch_prob(t) : unit.row(t + 1, t)[1];
        row.avg_err = row.max_err = std::abs(est - scenario.switch_prob(t));
        row.total_uncertainty = unit.uncertainty_value(t + 1);
        series.rows.push_back(row);
        state = next;
    }
    return series;
}

MetricsSeries run_bandit(const ExperimentConfig& cfg, std::uint64_t seed) {
    CounterRng rng(seed);
    BanditScenario scenario = BanditScenario::sample(5, rng);
    const DriftBound bound = DriftBound::constant(config_epsilon(cfg));
    const int memory = cfg.window.value_or(5);
    const int arms = scenario.arms;
    const int failure = scenario.failure_state();

    // Per-arm chain over {success, failure}, trimmed to the last `memory`
    // outcomes; classical counts keep the whole history.
    struct ArmChain {
        std::vector<int> times, outcomes;
        CcmleSolution solution;
        bool solved = false;
        long long pulls = 0, successes = 0;
    };
    std::vector<ArmChain> chains(arms + 1);

    const RewardFn reward = [&](int s, int) {
        return s >= 1 && s <= arms ? static_cast<double>(s) : 0.0;
    };
    PolicySettings policy;
    policy.beta = cfg.beta;
    policy.horizon = cfg.policy_horizon;

    double cumulative_reward = 0.0;
    MetricsSeries series;
    series.rows.reserve(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
        std::vector<double> p_hat(arms + 1, 0.5), unc(arms + 1, 0.0);
        for (int arm = 1; arm <= arms; ++arm) {
            ArmChain& chain = chains[arm];
            CcmleProblem problem;
            problem.n = 2;
            problem.times = chain.times;
            problem.successors = chain.outcomes;
            problem.bound = bound;
            problem.horizon = t;
            CcmleSolution solution;
            if (!chain.times.empty())
                solution = ccmle_solve(problem, {}, chain.solved ? &chain.solution : nullptr);
            unc[arm] = uncertainty(solution, problem, t).value;
            if (cfg.estimator == EstimatorId::Classical ||
                cfg.estimator == EstimatorId::ClassicalWindow) {
                p_hat[arm] = chain.pulls == 0
                                 ? 0.5
                                 : static_cast<double>(chain.successes) / chain.pulls;
            } else {
                p_hat[arm] = ccmle_complete_at(solution, problem, t)[0];
            }
            chain.solution = std::move(solution);
            chain.solved = !chain.times.empty();
        }

        KernelSnapshot model(arms + 2, arms);
        for (int s = 0; s <= failure; ++s)
            for (int a = 0; a < arms; ++a) model.set_allowed(s, a, s == 0 || a == 0);
        for (int a = 0; a < arms; ++a) {
            model.prob(0, a, a + 1) = p_hat[a + 1];
            model.prob(0, a, failure) = 1.0 - p_hat[a + 1];
            if (cfg.beta != 0.0) model.set_bonus(0, a, unc[a + 1]);
        }
        for (int s = 1; s <= failure; ++s) model.prob(s, 0, 0) = 1.0;

        const int arm = control_action(model, reward, 0, policy) + 1;
        const bool success = rng.next_double() < scenario.success_prob(arm, t);
        ArmChain& chain = chains[arm];
        chain.times.push_back(t);
        chain.outcomes.push_back(success ? 0 : 1);
        if (static_cast<int>(chain.times.size()) > memory) {
            chain.times.erase(chain.times.begin());
            chain.outcomes.erase(chain.outcomes.begin());
        }
        ++chain.pulls;
        if (success) ++chain.successes;

        MetricsRow row;
        row.t = t + 1;
        row.reward = success ? scenario.arm_reward(arm) : 0.0;
        cumulative_reward += row.reward;
        row.avg_reward = cumulative_reward / (t + 1);
        double total_abs = 0.0;
        for (int a = 1; a <= arms; ++a) {
            const double diff = std::abs(p_hat[a] - scenario.success_prob(a, t));
            total_abs += diff;
            row.max_err = std::max(row.max_err, diff);
            row.total_uncertainty += unc[a];
        }
        row.avg_err = total_abs / arms;
        series.rows.push_back(row);
    }
    return series;
}

MetricsSeries run_wind(const ExperimentConfig& cfg, std::uint64_t seed) {
    WindScenario scenario;
    const DriftBound bound = DriftBound::constant(config_epsilon(cfg));
    CounterRng rng(seed);
    Unit unit(WindScenario::num_outcomes, bound, cfg.estimator, cfg.window);

    double direction = scenario.initial_direction(rng);
    MetricsSeries series;
    series.rows.reserve(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
        const auto probs = scenario.outcome_probs(direction);
        const int outcome = scenario.sample_outcome(direction, rng);
        unit.observe(t, outcome);

        MetricsRow row;
        row.t = t + 1;
        const std::vector<double> est = unit.row(t + 1, t);
        double total_abs = 0.0;
        for (int o = 0; o < WindScenario::num_outcomes; ++o) {
            const double diff = std::abs(est[o] - probs[o]);
            total_abs += diff;
            row.max_err = std::max(row.max_err, diff);
        }
        row.avg_err = total_abs / WindScenario::num_outcomes;
        row.total_uncertainty = unit.uncertainty_value(t + 1);
        series.rows.push_back(row);

        direction = scenario.step_direction(direction, rng);
    }
    return series;
}

}  // namespace

MetricsSeries run_replication(const ExperimentConfig& config, std::uint64_t seed) {
    switch (config.scenario) {
        case ScenarioId::GridworldLearning: return run_gridworld(config, seed, false);
        case ScenarioId::GridworldPatrol: return run_gridworld(config, seed, true);
        case ScenarioId::TwostateLearning: return run_twostate_learning(config, seed);
        case ScenarioId::TwostatePlanning: return run_twostate_planning(config, seed);
        case ScenarioId::Bandit: return run_bandit(config, seed);
        default: return run_wind(config, seed);
    }
}

std::vector<MetricsSeries> run_experiment(const ExperimentConfig& config) {
    std::vector<MetricsSeries> out;
    out.reserve(config.replications);
    for (int r = 0; r < config.replications; ++r)
        out.push_back(run_replication(config, config.seed + r));
    return out;
}

std::string format_csv(const MetricsSeries& series) {
    std::string out = kCsvHeader;
    out += '\n';
    char line[192];
    for (const MetricsRow& row : series.rows) {
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%lld,%.9g,%.9g,%.9g\n", row.t,
                      row.avg_err, row.max_err, row.walls, row.reward, row.avg_reward,
                      row.total_uncertainty);
        out += line;
    }
    return out;
}

void export_csv(const MetricsSeries& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << format_csv(series);
    if (!out) throw IoError("failed writing output file: " + path);
}

MetricsSeries parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw ShapeMismatch("metrics file does not start with the metrics header");
    MetricsSeries series;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricsRow row;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lld,%lf,%lf,%lf", &row.t, &row.avg_err,
                        &row.max_err, &row.walls, &row.reward, &row.avg_reward,
                        &row.total_uncertainty) != 7)
            throw ShapeMismatch("bad metrics row: " + line);
        series.rows.push_back(row);
    }
    return series;
}

MetricsSeries load_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open metrics file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_metrics_csv(buffer.str());
}

SeriesStats series_stats(const MetricsSeries& series) {
    SeriesStats stats;
    if (series.rows.empty()) return stats;
    for (const MetricsRow& row : series.rows) {
        stats.time_mean_avg_err += row.avg_err;
        stats.time_mean_max_err += row.max_err;
    }
    stats.time_mean_avg_err /= series.rows.size();
    stats.time_mean_max_err /= series.rows.size();
    const MetricsRow& last = series.rows.back();
    stats.final_walls = static_cast<double>(last.walls);
    stats.final_avg_reward = last.avg_reward;
    stats.final_total_uncertainty = last.total_uncertainty;
    return stats;
}

CompareSummary compare_runs(const std::string& label,
                            const std::vector<MetricsSeries>& series) {
    if (series.empty()) throw ShapeMismatch("no series to compare");
    for (const MetricsSeries& s : series)
        if (s.rows.size() != series.front().rows.size())
            throw ShapeMismatch("series lengths differ for label " + label);

    CompareSummary summary;
    summary.label = label;
    summary.count = static_cast<int>(series.size());
    std::vector<SeriesStats> all;
    all.reserve(series.size());
    for (const MetricsSeries& s : series) all.push_back(series_stats(s));

    auto aggregate = [&](double SeriesStats::*field, double& mean, double& sd) {
        for (const SeriesStats& s : all) mean += s.*field;
        mean /= all.size();
        for (const SeriesStats& s : all) sd += (s.*field - mean) * (s.*field - mean);
        sd = std::sqrt(sd / all.size());
    };
    aggregate(&SeriesStats::time_mean_avg_err, summary.mean.time_mean_avg_err,
              summary.stddev.time_mean_avg_err);
    aggregate(&SeriesStats::time_mean_max_err, summary.mean.time_mean_max_err,
              summary.stddev.time_mean_max_err);
    aggregate(&SeriesStats::final_walls, summary.mean.final_walls,
              summary.stddev.final_walls);
    aggregate(&SeriesStats::final_avg_reward, summary.mean.final_avg_reward,
              summary.stddev.final_avg_reward);
    aggregate(&SeriesStats::final_total_uncertainty, summary.mean.final_total_uncertainty,
              summary.stddev.final_total_uncertainty);
    return summary;
}

std::string format_compare_table(const std::vector<CompareSummary>& summaries) {
    std::string out =
        "label                              reps  mean_err        max_err         walls"
        "      avg_reward\n";
    char line[256];
    for (const CompareSummary& s : summaries) {
        std::snprintf(line, sizeof line,
                      "%-34s %4d  %.4g+-%.2g  %.4g+-%.2g  %7.4g+-%.2g  %.4g+-%.2g\n",
                      s.label.c_str(), s.count, s.mean.time_mean_avg_err,
                      s.stddev.time_mean_avg_err, s.mean.time_mean_max_err,
                      s.stddev.time_mean_max_err, s.mean.final_walls,
                      s.stddev.final_walls, s.mean.final_avg_reward,
                      s.stddev.final_avg_reward);
        out += line;
    }
    return out;
}

Trajectory parse_trajectory_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t,state,action,next_state")
        throw ShapeMismatch("trajectory file must start with t,state,action,next_state");
    Trajectory traj;
    int expected_t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int t, state, action, next;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &t, &state, &action, &next) != 4)
            throw ShapeMismatch("bad trajectory row: " + line);
        if (t != expected_t)
            throw ShapeMismatch("trajectory times must be contiguous from 0");
        if (state < 0 || action < 0 || next < 0)
            throw ShapeMismatch("trajectory entries must be nonnegative");
        if (traj.states.empty())
            traj.states.push_back(state);
        else if (traj.states.back() != state)
            throw ShapeMismatch("trajectory rows must chain state -> next_state");
        traj.append(action, next);
        ++expected_t;
    }
    return traj;
}

Trajectory load_trajectory_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trajectory file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_trajectory_csv(buffer.str());
}

}  // namespace tvmdp
