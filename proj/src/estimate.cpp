#include "tvmdp/estimate.hpp"

#include <cassert>
#include <numeric>

#include "tvmdp/errors.hpp"

namespace tvmdp {

EstimateTable::EstimateTable(int states, int actions, int steps)
    : num_states(states),
      num_actions(actions),
      horizon_steps(steps),
      values(static_cast<std::size_t>(states) * actions * steps * states, 0.0),
      anchors(static_cast<std::size_t>(states) * actions * steps, -1) {}

double EstimateTable::at(int s, int a, int s2, int t) const {
    assert(s >= 0 && s < num_states && a >= 0 && a < num_actions);
    assert(s2 >= 0 && s2 < num_states && t >= 0 && t < horizon_steps);
    return values[((static_cast<std::size_t>(s) * num_actions + a) * horizon_steps + t) *
                      num_states +
                  s2];
}

double& EstimateTable::at(int s, int a, int s2, int t) {
    assert(s >= 0 && s < num_states && a >= 0 && a < num_actions);
    assert(s2 >= 0 && s2 < num_states && t >= 0 && t < horizon_steps);
    return values[((static_cast<std::size_t>(s) * num_actions + a) * horizon_steps + t) *
                      num_states +
                  s2];
}

int EstimateTable::anchor(int s, int a, int t) const {
    assert(t >= 0 && t < horizon_steps);
    return anchors[(static_cast<std::size_t>(s) * num_actions + a) * horizon_steps + t];
}

void EstimateTable::set_anchor(int s, int a, int t, int successor) {
    assert(t >= 0 && t < horizon_steps);
    anchors[(static_cast<std::size_t>(s) * num_actions + a) * horizon_steps + t] = successor;
}

std::vector<double> classical_estimate(const VisitIndex& index, int s, int a) {
    const PairVisits& visits = index.at(s, a);
    std::vector<double> dist(index.num_states(), 1.0 / index.num_states());
    if (visits.times.empty()) return dist;
    std::fill(dist.begin(), dist.end(), 0.0);
    for (int succ : visits.successors) dist[succ] += 1.0;
    for (double& p : dist) p /= static_cast<double>(visits.successors.size());
    return dist;
}

std::vector<double> windowed_estimate(const VisitIndex& index, int s, int a, int t, int w) {
    assert(w >= 1);
    const PairVisits& visits = index.at(s, a);
    std::vector<double> dist(index.num_states(), 1.0 / index.num_states());
    int used = 0;
    std::vector<double> counts(index.num_states(), 0.0);
    for (std::size_t i = 0; i < visits.times.size(); ++i) {
        if (visits.times[i] < t - w || visits.times[i] > t - 1) continue;
        counts[visits.successors[i]] += 1.0;
        ++used;
    }
    if (used == 0) return dist;
    for (int s2 = 0; s2 < index.num_states(); ++s2)
        dist[s2] = counts[s2] / static_cast<double>(used);
    return dist;
}

EstimateTable ccmle_full(const Trajectory& traj, int num_states, int num_actions,
                         const DriftBound& bound, std::optional<int> window,
                         const SolverSettings& settings) {
    const int horizon = traj.horizon();
    EstimateTable table(num_states, num_actions, horizon);
    if (horizon == 0) return table;

    const VisitIndex index = build_visit_index(traj, num_states, num_actions);
    std::vector<int> all_times(horizon);
    std::iota(all_times.begin(), all_times.end(), 0);

    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            const PairVisits& visits = index.at(s, a);
            CcmleProblem problem;
            problem.n = num_states;
            problem.times = visits.times;
            problem.successors = visits.successors;
            problem.bound = bound;
            problem.horizon = horizon;
            problem.window = window;

            CcmleSolution solution;
            try {
                solution = ccmle_solve(problem, settings);
            } catch (const NoVisits&) {
                // empty solution: completion falls back to uniform
            }
            const auto slices = ccmle_complete(solution, problem, all_times);
            for (int t = 0; t < horizon; ++t)
                for (int s2 = 0; s2 < num_states; ++s2)
                    table.at(s, a, s2, t) = slices[t][s2];
            for (std::size_t i = 0; i < solution.times.size(); ++i)
                table.set_anchor(s, a, solution.times[i], solution.successors[i]);
        }
    }
    return table;
}

}  // namespace tvmdp
