#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tvmdp/model.hpp"

namespace tvmdp {

// Drift-bounded maximum-likelihood problem for a single (state, action) pair:
// maximize the log-likelihood of the observed successors subject to each
// per-visit distribution lying on the simplex and consecutive visit
// distributions differing by at most the drift budget accumulated over the
// gap. Problems for different pairs are independent.
struct CcmleProblem {
    int n = 0;                     // number of successor states
    std::vector<int> times;        // strictly increasing visit times
    std::vector<int> successors;   // observed successor per visit
    DriftBound bound = DriftBound::constant(0.0);
    int horizon = 0;               // current time T; all visit times are < T
    std::optional<int> window;     // keep only visits with time >= T - W
};

struct SolverSettings {
    double obj_tol = 1e-8;     // certified objective gap at termination
    double p_min = 1e-12;      // probability floor inside the solver
    int max_iterations = 10000;
};

struct CcmleSolution {
    // Effective visits after windowing, in time order.
    std::vector<int> times;
    std::vector<int> successors;
    // Optimal value of the observed coordinate at each effective visit. These
    // are the uniquely determined coordinates of the estimate.
    std::vector<double> anchored;
    // Negative log-likelihood at the optimum.
    double objective = 0.0;

    // Visits separated by a zero drift budget share one distribution; blocks
    // group them. block_q holds the full solved distribution per block and is
    // feasible by construction (used as a completion fallback).
    std::vector<int> block_of_visit;
    std::vector<int> block_time;   // first visit time in each block
    std::vector<std::vector<double>> block_q;
};

// Solves the per-pair problem by a log-barrier interior path with Newton
// steps on a block-tridiagonal KKT system, followed by an active-set polish
// that lands boundary optima exactly, and a 0/1 snapping pass within
// 10 * p_min. `warm`, when given, seeds the iteration from a previous
// solution of a nearby problem (typically one visit shorter).
// Throws NoVisits when no visit is in scope and NonConvergence at the
// iteration cap.
CcmleSolution ccmle_solve(const CcmleProblem& problem,
                          const SolverSettings& settings = {},
                          const CcmleSolution* warm = nullptr);

// Exhaustive grid search over per-visit simplex distributions at the given
// resolution, dynamic programming over the chain. Exact with respect to the
// grid; guarded to visits <= 4 and n <= 3 (throws InstanceTooLarge).
// Returns (anchored values, objective).
std::pair<std::vector<double>, double> oracle_grid_solve(const CcmleProblem& problem,
                                                         double resolution);

// Representative completion at arbitrary times: between consecutive anchors
// the distribution moves along the straight line, with the per-step change
// proportioned to the per-step drift budget; before the first anchor and
// after the last it is held constant. Non-anchored mass at anchor times goes
// to coordinates unobserved in that block, proportionally to their classical
// frequencies (uniform when all frequencies are zero); if that choice ever
// violated a drift constraint the solver's own per-block distributions are
// used instead. With no visits every requested time gets the uniform
// distribution.
std::vector<std::vector<double>> ccmle_complete(const CcmleSolution& solution,
                                                const CcmleProblem& problem,
                                                const std::vector<int>& query_times);
std::vector<double> ccmle_complete_at(const CcmleSolution& solution,
                                      const CcmleProblem& problem, int t);

// Effective visits for a problem after windowing (shared by solver and
// classical comparisons); pairs (times, successors).
std::pair<std::vector<int>, std::vector<int>> effective_visits(const CcmleProblem& problem);

}  // namespace tvmdp
