#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "tvmdp/ccmle.hpp"
#include "tvmdp/estimate.hpp"
#include "tvmdp/model.hpp"

namespace tvmdp {

enum class PolicyMode { LeastUsed, Learning, Control };

struct PolicySettings {
    double beta = 0.0;
    int horizon = 1;
    PolicyMode mode = PolicyMode::Control;
    SolverSettings solver;
};

using RewardFn = std::function<double(int, int)>;

// Time-invariant model snapshot the lookahead policies plan against: one
// transition row per pair, an optional per-pair uncertainty bonus, and an
// optional per-pair availability mask.
struct KernelSnapshot {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> p;                // (s * num_actions + a) * num_states + s2
    std::vector<double> uncertainty;      // per (s, a); empty means all zero
    std::vector<unsigned char> allowed;   // per (s, a); empty means all allowed

    KernelSnapshot() = default;
    KernelSnapshot(int states, int actions);

    double prob(int s, int a, int s2) const;
    double& prob(int s, int a, int s2);
    bool is_allowed(int s, int a) const;
    double bonus(int s, int a) const;
    void set_bonus(int s, int a, double value);
    void set_allowed(int s, int a, bool value);
};

// Snapshot of one time slice of an estimate (t = -1 means the final slice).
KernelSnapshot snapshot_from(const EstimateTable& table, int t = -1);

// Action with the smallest total use count over the whole run; ties go to the
// lower index.
int least_used_action(const VisitIndex& index, int s);

// Expected next-step uncertainty of the pair (s, a): the representative
// estimate row at the current horizon weights the uncertainty recomputed with
// each hypothetical outcome appended.
double expected_uncertainty_after(const Trajectory& traj, const DriftBound& bound, int s,
                                  int a, int num_states,
                                  const SolverSettings& settings = {});

// Uncertainty-minimizing action. The one-step objective for action a is the
// expected post-observation uncertainty of (s, a) plus the passive next-step
// uncertainty of every other pair at s; longer horizons run an expectimax
// over the snapshot with those costs frozen.
int learning_action(const KernelSnapshot& model, const std::vector<double>& after_cost,
                    const std::vector<double>& next_cost, int s,
                    const PolicySettings& settings);
int learning_action(const Trajectory& traj, const DriftBound& bound, int s, int num_states,
                    int num_actions, const PolicySettings& settings);

// Reward-maximizing action with an uncertainty bonus: each lookahead stage is
// worth R(s, a) + beta * U(s, a), followed by one reward-only step. beta = 0
// never reads the uncertainty values.
int control_action(const KernelSnapshot& model, const RewardFn& reward, int s,
                   const PolicySettings& settings);
int control_action(const Trajectory& traj, const DriftBound& bound, int s, int num_states,
                   int num_actions, const RewardFn& reward, const PolicySettings& settings);

// Finite-horizon backward induction on a fixed snapshot; returns the value at
// the start state and the first action of an optimal plan.
std::pair<double, int> value_iteration_horizon(const KernelSnapshot& model,
                                               const RewardFn& reward, int H, int start);
std::pair<double, int> value_iteration_horizon(const EstimateTable& model,
                                               const RewardFn& reward, int H, int start);

}  // namespace tvmdp
