#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvmdp/model.hpp"

namespace tvmdp {

enum class ScenarioId {
    GridworldLearning,
    GridworldPatrol,
    TwostateLearning,
    TwostatePlanning,
    Bandit,
    Wind,
};

enum class EstimatorId { Ccmle, CcmleForgetful, Classical, ClassicalWindow };

std::string to_string(ScenarioId id);
std::string to_string(EstimatorId id);
ScenarioId scenario_from_string(const std::string& name);
EstimatorId estimator_from_string(const std::string& name);

// One experiment: a scenario, an estimator, policy settings, and run length.
// Parsed from JSON; unknown keys and out-of-range values are rejected.
struct ExperimentConfig {
    ScenarioId scenario = ScenarioId::GridworldLearning;
    EstimatorId estimator = EstimatorId::Ccmle;
    int steps = 1;
    std::uint64_t seed = 1;
    int replications = 1;
    std::optional<double> epsilon;       // agent drift bound; scenario default
    std::optional<int> window;           // estimator memory, required for windowed kinds
    double beta = 0.0;
    int policy_horizon = 1;
    std::optional<double> switch_duration;  // gridworld only
    std::optional<int> instant_switch;      // gridworld only
    bool perfect_knowledge = false;         // twostate-planning only
    std::string description;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Drift bound the agent assumes: the configured epsilon, or the scenario
// default when none is given.
double config_epsilon(const ExperimentConfig& config);

struct MetricsRow {
    int t = 0;
    double avg_err = 0.0;
    double max_err = 0.0;
    long long walls = 0;
    double reward = 0.0;
    double avg_reward = 0.0;
    double total_uncertainty = 0.0;
};

struct MetricsSeries {
    std::vector<MetricsRow> rows;
};

// One simulated run with the given seed; deterministic.
MetricsSeries run_replication(const ExperimentConfig& config, std::uint64_t seed);

// All replications, seeded seed, seed+1, ...
std::vector<MetricsSeries> run_experiment(const ExperimentConfig& config);

std::string format_csv(const MetricsSeries& series);
void export_csv(const MetricsSeries& series, const std::string& path);
MetricsSeries parse_metrics_csv(const std::string& text);
MetricsSeries load_metrics_csv(const std::string& path);

struct SeriesStats {
    double time_mean_avg_err = 0.0;
    double time_mean_max_err = 0.0;
    double final_walls = 0.0;
    double final_avg_reward = 0.0;
    double final_total_uncertainty = 0.0;
};

SeriesStats series_stats(const MetricsSeries& series);

// Across-replication mean and standard deviation of the per-series stats.
struct CompareSummary {
    std::string label;
    int count = 0;
    SeriesStats mean;
    SeriesStats stddev;
};

CompareSummary compare_runs(const std::string& label,
                            const std::vector<MetricsSeries>& series);
std::string format_compare_table(const std::vector<CompareSummary>& summaries);

// Recorded trajectory files: header t,state,action,next_state.
Trajectory parse_trajectory_csv(const std::string& text);
Trajectory load_trajectory_csv(const std::string& path);

}  // namespace tvmdp
