#pragma once

#include <optional>
#include <vector>

#include "tvmdp/ccmle.hpp"
#include "tvmdp/model.hpp"

namespace tvmdp {

// Estimated transition distributions for every (state, action) pair at every
// time step 0..horizon_steps-1, with a record of which successor coordinate
// was anchored by an observation at that step.
struct EstimateTable {
    int num_states = 0;
    int num_actions = 0;
    int horizon_steps = 0;

    std::vector<double> values;   // [(((s * A) + a) * T + t) * S + s2]
    std::vector<int> anchors;     // [((s * A) + a) * T + t], successor or -1

    EstimateTable() = default;
    EstimateTable(int states, int actions, int steps);

    double at(int s, int a, int s2, int t) const;
    double& at(int s, int a, int s2, int t);
    int anchor(int s, int a, int t) const;
    void set_anchor(int s, int a, int t, int successor);
};

// Frequency estimate #(s,a,s')/#(s,a) over the whole run; uniform if the pair
// was never visited.
std::vector<double> classical_estimate(const VisitIndex& index, int s, int a);

// Frequency estimate restricted to visits at times in [t - w, t - 1]; uniform
// if none. w >= 1.
std::vector<double> windowed_estimate(const VisitIndex& index, int s, int a, int t, int w);

// Drift-aware estimate for every pair: per-pair chain solve plus the
// representative completion, assembled into one table covering every step of
// the trajectory. A window keeps only the trailing W steps of observations in
// each solve.
EstimateTable ccmle_full(const Trajectory& traj, int num_states, int num_actions,
                         const DriftBound& bound, std::optional<int> window = {},
                         const SolverSettings& settings = {});

}  // namespace tvmdp
