#pragma once

#include <optional>
#include <vector>

#include "tvmdp/ccmle.hpp"
#include "tvmdp/model.hpp"
#include "tvmdp/polytope.hpp"

namespace tvmdp {

// Uncertainty of the estimate for one pair: the larger of the slice set's
// diameter and the farthest any equally-optimal estimate can move after one
// more hypothetical observation at the current time.
struct UncertaintyValue {
    double value = 0.0;
    double diameter = 0.0;
    double cross = 0.0;
};

// Uncertainty at slice time t for the pair described by `problem` (solution
// from ccmle_solve, or empty when unvisited). Appended-observation sets are
// built by re-solving with one extra visit at the problem horizon.
UncertaintyValue uncertainty(const CcmleSolution& solution, const CcmleProblem& problem,
                             int t, const SolverSettings& settings = {});

// Convenience form over a trajectory: indexes visits of (s, a) and solves.
UncertaintyValue uncertainty(const Trajectory& traj, const DriftBound& bound, int s, int a,
                             int num_states, int t, const SolverSettings& settings = {});

// Incremental per-pair state for long runs: keeps the last solution as a warm
// start and caches the forward slice-set sweep after each anchor block, so a
// new observation or an appended hypothesis only recomputes the suffix that
// actually changed.
class UncertaintySession {
  public:
    UncertaintySession(int n, DriftBound bound, SolverSettings settings = {},
                       std::optional<int> window = {});

    // Records a visit; times must be strictly increasing across calls.
    void observe(int time, int successor);

    bool has_visits() const { return !times_.empty(); }
    int visit_count() const { return static_cast<int>(times_.size()); }

    // Solver output for the chain as of the given horizon (all stored visits,
    // minus any outside the window). Cached between calls.
    const CcmleSolution& solution(int horizon);

    // Representative completed estimate at time t, as of the given horizon.
    std::vector<double> estimate_at(int horizon, int t);

    // Uncertainty at slice time = horizon.
    UncertaintyValue uncertainty_at(int horizon);

  private:
    struct Snapshot {
        int first_time = 0;
        int last_time = 0;
        std::vector<std::pair<int, double>> fixes;
        SupportFamily body;   // tight slice set at the block's span
    };

    CcmleProblem problem_at(int horizon) const;
    void ensure_solved(int horizon);
    void extend_snapshots(std::vector<Snapshot>& cache, const CcmleSolution& solution);

    int n_;
    DriftBound bound_;
    SolverSettings settings_;
    std::optional<int> window_;

    std::vector<int> times_;
    std::vector<int> successors_;

    bool have_solution_ = false;
    int solved_horizon_ = -1;
    CcmleSolution solution_;
    std::vector<Snapshot> snapshots_;
};

}  // namespace tvmdp
