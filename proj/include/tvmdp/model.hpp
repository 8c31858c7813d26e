#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace tvmdp {

// Finite MDP whose transition kernel depends on the integer time step.
// States and actions are dense 0-based indices; callers keep their own name
// tables for I/O.
struct TvmdpModel {
    int num_states = 0;
    int num_actions = 0;
    // kernel(s, a, s2, t) = probability of moving s -> s2 under a at step t.
    // Must sum to 1 over s2 for every (s, a, t).
    std::function<double(int, int, int, int)> kernel;
    std::optional<std::function<double(int, int)>> reward;
};

// Observed path: states s_0..s_T and actions a_0..a_{T-1}.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;

    int horizon() const { return static_cast<int>(actions.size()); }
    void append(int action, int next_state) {
        actions.push_back(action);
        states.push_back(next_state);
    }
};

// Per-step bound on how much any single transition probability may change
// between steps t and t+1: either one constant or a full sequence.
class DriftBound {
  public:
    static DriftBound constant(double eps);
    static DriftBound sequence(std::vector<double> eps);

    // Bound on |P(.,t+1) - P(.,t)|. A constant bound works for every t; a
    // sequence bound clamps t to its last entry.
    double at(int t) const;

    // Total allowed change between steps t0 and t1 (t0 <= t1): the partial sum
    // of per-step bounds over [t0, t1).
    double total(int t0, int t1) const;

    bool is_constant() const { return seq_.empty(); }
    double constant_value() const { return const_; }

  private:
    DriftBound() = default;
    double const_ = 0.0;
    std::vector<double> seq_;     // empty when constant
    std::vector<double> prefix_;  // prefix sums of seq_, prefix_[i] = sum of first i
};

// All visits of one (state, action) pair: strictly increasing times t with
// s_t = s, a_t = a, and the successor s_{t+1} observed at each.
struct PairVisits {
    std::vector<int> times;
    std::vector<int> successors;

    int count() const { return static_cast<int>(times.size()); }
    int count_to(int successor) const;
};

// Per-pair visit lists for a whole trajectory.
class VisitIndex {
  public:
    VisitIndex(int num_states, int num_actions)
        : num_states_(num_states),
          num_actions_(num_actions),
          pairs_(static_cast<std::size_t>(num_states) * num_actions) {}

    const PairVisits& at(int s, int a) const { return pairs_[index(s, a)]; }
    PairVisits& at(int s, int a) { return pairs_[index(s, a)]; }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    // Total times the action was used anywhere in the run.
    int action_use_count(int a) const;

  private:
    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }
    int num_states_;
    int num_actions_;
    std::vector<PairVisits> pairs_;
};

VisitIndex build_visit_index(const Trajectory& traj, int num_states, int num_actions);

// Index of the sampled successor when u ~ Uniform[0,1). Fixed-order CDF scan;
// any probability shortfall from rounding goes to the last state.
int sample_categorical(const std::vector<double>& dist, double u);

}  // namespace tvmdp
