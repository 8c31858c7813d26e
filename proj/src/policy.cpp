#include "tvmdp/policy.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "tvmdp/errors.hpp"
#include "tvmdp/uncertainty.hpp"

namespace tvmdp {

namespace {

void check_settings(const PolicySettings& settings) {
    if (settings.beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
    if (settings.horizon < 1) throw std::invalid_argument("policy horizon must be >= 1");
}

CcmleProblem pair_problem(const VisitIndex& index, const DriftBound& bound, int s, int a,
                          int num_states, int horizon) {
    CcmleProblem problem;
    problem.n = num_states;
    problem.times = index.at(s, a).times;
    problem.successors = index.at(s, a).successors;
    problem.bound = bound;
    problem.horizon = horizon;
    return problem;
}

CcmleSolution solve_or_empty(const CcmleProblem& problem, const SolverSettings& settings) {
    if (problem.times.empty()) return {};
    return ccmle_solve(problem, settings);
}

}  // namespace

KernelSnapshot::KernelSnapshot(int states, int actions)
    : num_states(states),
      num_actions(actions),
      p(static_cast<std::size_t>(states) * actions * states, 0.0) {
    assert(states > 0 && actions > 0);
}

double KernelSnapshot::prob(int s, int a, int s2) const {
    return p[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
}

double& KernelSnapshot::prob(int s, int a, int s2) {
    return p[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
}

bool KernelSnapshot::is_allowed(int s, int a) const {
    if (allowed.empty()) return true;
    return allowed[static_cast<std::size_t>(s) * num_actions + a] != 0;
}

double KernelSnapshot::bonus(int s, int a) const {
    if (uncertainty.empty()) return 0.0;
    return uncertainty[static_cast<std::size_t>(s) * num_actions + a];
}

void KernelSnapshot::set_bonus(int s, int a, double value) {
    if (uncertainty.empty())
        uncertainty.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    uncertainty[static_cast<std::size_t>(s) * num_actions + a] = value;
}

void KernelSnapshot::set_allowed(int s, int a, bool value) {
    if (allowed.empty())
        this->allowed.assign(static_cast<std::size_t>(num_states) * num_actions, 1);
    allowed[static_cast<std::size_t>(s) * num_actions + a] = value ? 1 : 0;
}

KernelSnapshot snapshot_from(const EstimateTable& table, int t) {
    KernelSnapshot model(table.num_states, table.num_actions);
    if (t < 0) t = table.horizon_steps - 1;
    for (int s = 0; s < table.num_states; ++s)
        for (int a = 0; a < table.num_actions; ++a)
            for (int s2 = 0; s2 < table.num_states; ++s2)
                model.prob(s, a, s2) = t < 0 ? 1.0 / table.num_states : table.at(s, a, s2, t);
    return model;
}

int least_used_action(const VisitIndex& index, int s) {
    (void)s;
    int best = 0;
    long long best_count = index.action_use_count(0);
    for (int a = 1; a < index.num_actions(); ++a) {
        const long long count = index.action_use_count(a);
        if (count < best_count) {
            best = a;
            best_count = count;
        }
    }
    return best;
}

double expected_uncertainty_after(const Trajectory& traj, const DriftBound& bound, int s,
                                  int a, int num_states, const SolverSettings& settings) {
    int num_actions = a + 1;
    for (int used : traj.actions) num_actions = std::max(num_actions, used + 1);
    const VisitIndex index = build_visit_index(traj, num_states, num_actions);
    const CcmleProblem problem = pair_problem(index, bound, s, a, num_states, traj.horizon());
    const CcmleSolution base = solve_or_empty(problem, settings);
    const std::vector<double> p_hat = ccmle_complete_at(base, problem, problem.horizon);

    double total = 0.0;
    for (int succ = 0; succ < num_states; ++succ) {
        if (p_hat[succ] <= 0.0) continue;
        CcmleProblem next = problem;
        next.times.push_back(problem.horizon);
        next.successors.push_back(succ);
        next.horizon = problem.horizon + 1;
        const CcmleSolution next_solution =
            ccmle_solve(next, settings, base.times.empty() ? nullptr : &base);
        total += p_hat[succ] * uncertainty(next_solution, next, next.horizon, settings).value;
    }
    return total;
}

int learning_action(const KernelSnapshot& model, const std::vector<double>& after_cost,
                    const std::vector<double>& next_cost, int s,
                    const PolicySettings& settings) {
    check_settings(settings);
    const int S = model.num_states;
    const int A = model.num_actions;
    if (static_cast<int>(after_cost.size()) != S * A ||
        static_cast<int>(next_cost.size()) != S * A)
        throw std::invalid_argument("cost vectors must have one entry per pair");

    // One-step cost of taking a at x: the visited pair moves to its expected
    // post-observation uncertainty, every other pair at x drifts passively.
    auto step_cost = [&](int x, int a) {
        double cost = after_cost[static_cast<std::size_t>(x) * A + a];
        for (int b = 0; b < A; ++b)
            if (b != a && model.is_allowed(x, b))
                cost += next_cost[static_cast<std::size_t>(x) * A + b];
        return cost;
    };

    std::vector<double> togo(S, 0.0);
    for (int h = 1; h < settings.horizon; ++h) {
        std::vector<double> next(S, 0.0);
        for (int x = 0; x < S; ++x) {
            double best = 0.0;
            bool any = false;
            for (int a = 0; a < A; ++a) {
                if (!model.is_allowed(x, a)) continue;
                double value = step_cost(x, a);
                for (int s2 = 0; s2 < S; ++s2) value += model.prob(x, a, s2) * togo[s2];
                if (!any || value < best) {
                    best = value;
                    any = true;
                }
            }
            next[x] = any ? best : 0.0;
        }
        togo = std::move(next);
    }

    int best_action = -1;
    double best_value = 0.0;
    for (int a = 0; a < A; ++a) {
        if (!model.is_allowed(s, a)) continue;
        double value = step_cost(s, a);
        if (settings.horizon > 1)
            for (int s2 = 0; s2 < S; ++s2) value += model.prob(s, a, s2) * togo[s2];
        if (best_action < 0 || value < best_value) {
            best_action = a;
            best_value = value;
        }
    }
    if (best_action < 0) throw std::invalid_argument("no allowed action at state");
    return best_action;
}

int learning_action(const Trajectory& traj, const DriftBound& bound, int s, int num_states,
                    int num_actions, const PolicySettings& settings) {
    check_settings(settings);
    const VisitIndex index = build_visit_index(traj, num_states, num_actions);
    const int horizon = traj.horizon();

    KernelSnapshot model(num_states, num_actions);
    std::vector<double> after_cost(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    std::vector<double> next_cost(after_cost.size(), 0.0);
    const bool all_states = settings.horizon > 1;
    for (int x = 0; x < num_states; ++x) {
        for (int a = 0; a < num_actions; ++a) {
            if (!all_states && x != s) {
                for (int s2 = 0; s2 < num_states; ++s2)
                    model.prob(x, a, s2) = 1.0 / num_states;
                continue;
            }
            const std::size_t at = static_cast<std::size_t>(x) * num_actions + a;
            after_cost[at] =
                expected_uncertainty_after(traj, bound, x, a, num_states, settings.solver);
            CcmleProblem drifted = pair_problem(index, bound, x, a, num_states, horizon + 1);
            const CcmleSolution solution = solve_or_empty(drifted, settings.solver);
            next_cost[at] = uncertainty(solution, drifted, horizon + 1, settings.solver).value;
            const std::vector<double> row = ccmle_complete_at(solution, drifted, horizon);
            for (int s2 = 0; s2 < num_states; ++s2) model.prob(x, a, s2) = row[s2];
        }
    }
    return learning_action(model, after_cost, next_cost, s, settings);
}

int control_action(const KernelSnapshot& model, const RewardFn& reward, int s,
                   const PolicySettings& settings) {
    check_settings(settings);
    const int S = model.num_states;
    const int A = model.num_actions;

    auto stage = [&](int x, int a) {
        double value = reward(x, a);
        if (settings.beta != 0.0) value += settings.beta * model.bonus(x, a);
        return value;
    };

    // Reward-only final step, then stages worth R + beta * U.
    std::vector<double> togo(S, 0.0);
    for (int x = 0; x < S; ++x) {
        double best = 0.0;
        bool any = false;
        for (int a = 0; a < A; ++a) {
            if (!model.is_allowed(x, a)) continue;
            const double value = reward(x, a);
            if (!any || value > best) {
                best = value;
                any = true;
            }
        }
        togo[x] = any ? best : 0.0;
    }
    for (int h = 1; h < settings.horizon; ++h) {
        std::vector<double> next(S, 0.0);
        for (int x = 0; x < S; ++x) {
            double best = 0.0;
            bool any = false;
            for (int a = 0; a < A; ++a) {
                if (!model.is_allowed(x, a)) continue;
                double value = stage(x, a);
                for (int s2 = 0; s2 < S; ++s2) value += model.prob(x, a, s2) * togo[s2];
                if (!any || value > best) {
                    best = value;
                    any = true;
                }
            }
            next[x] = any ? best : 0.0;
        }
        togo = std::move(next);
    }

    int best_action = -1;
    double best_value = 0.0;
    for (int a = 0; a < A; ++a) {
        if (!model.is_allowed(s, a)) continue;
        double value = stage(s, a);
        for (int s2 = 0; s2 < S; ++s2) value += model.prob(s, a, s2) * togo[s2];
        if (best_action < 0 || value > best_value) {
            best_action = a;
            best_value = value;
        }
    }
    if (best_action < 0) throw std::invalid_argument("no allowed action at state");
    return best_action;
}

int control_action(const Trajectory& traj, const DriftBound& bound, int s, int num_states,
                   int num_actions, const RewardFn& reward, const PolicySettings& settings) {
    check_settings(settings);
    const VisitIndex index = build_visit_index(traj, num_states, num_actions);
    const int horizon = traj.horizon();

    KernelSnapshot model(num_states, num_actions);
    for (int x = 0; x < num_states; ++x) {
        for (int a = 0; a < num_actions; ++a) {
            const CcmleProblem problem =
                pair_problem(index, bound, x, a, num_states, horizon);
            const CcmleSolution solution = solve_or_empty(problem, settings.solver);
            const std::vector<double> row = ccmle_complete_at(solution, problem, horizon);
            for (int s2 = 0; s2 < num_states; ++s2) model.prob(x, a, s2) = row[s2];
            if (settings.beta != 0.0)
                model.set_bonus(x, a,
                                uncertainty(solution, problem, horizon, settings.solver).value);
        }
    }
    return control_action(model, reward, s, settings);
}

std::pair<double, int> value_iteration_horizon(const KernelSnapshot& model,
                                               const RewardFn& reward, int H, int start) {
    if (H < 1) throw std::invalid_argument("lookahead horizon must be >= 1");
    const int S = model.num_states;
    const int A = model.num_actions;

    std::vector<double> value(S, 0.0);
    for (int h = 1; h < H; ++h) {
        std::vector<double> next(S, 0.0);
        for (int x = 0; x < S; ++x) {
            double best = 0.0;
            bool any = false;
            for (int a = 0; a < A; ++a) {
                if (!model.is_allowed(x, a)) continue;
                double q = reward(x, a);
                for (int s2 = 0; s2 < S; ++s2) q += model.prob(x, a, s2) * value[s2];
                if (!any || q > best) {
                    best = q;
                    any = true;
                }
            }
            next[x] = any ? best : 0.0;
        }
        value = std::move(next);
    }

    int best_action = -1;
    double best_value = 0.0;
    for (int a = 0; a < A; ++a) {
        if (!model.is_allowed(start, a)) continue;
        double q = reward(start, a);
        for (int s2 = 0; s2 < S; ++s2) q += model.prob(start, a, s2) * value[s2];
        if (best_action < 0 || q > best_value) {
            best_action = a;
            best_value = q;
        }
    }
    if (best_action < 0) throw std::invalid_argument("no allowed action at start state");
    return {best_value, best_action};
}

std::pair<double, int> value_iteration_horizon(const EstimateTable& model,
                                               const RewardFn& reward, int H, int start) {
    return value_iteration_horizon(snapshot_from(model), reward, H, start);
}

}  // namespace tvmdp
