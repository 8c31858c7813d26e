#include "tvmdp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "tvmdp/errors.hpp"

namespace tvmdp {

namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
}

double max_diameter(const std::vector<std::vector<double>>& vertices) {
    double best = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t j = i + 1; j < vertices.size(); ++j)
            best = std::max(best, distance(vertices[i], vertices[j]));
    return best;
}

double max_cross(const std::vector<std::vector<double>>& a,
                 const std::vector<std::vector<double>>& b) {
    double best = 0.0;
    for (const auto& x : a)
        for (const auto& y : b) best = std::max(best, distance(x, y));
    return best;
}

CcmleProblem appended_problem(const CcmleProblem& problem, int successor) {
    CcmleProblem next = problem;
    next.times.push_back(problem.horizon);
    next.successors.push_back(successor);
    next.horizon = problem.horizon + 1;
    return next;
}

bool same_block(const AnchorBlock& block, int first_time, int last_time,
                const std::vector<std::pair<int, double>>& fixes) {
    if (block.first_time != first_time || block.last_time != last_time) return false;
    if (block.fixes.size() != fixes.size()) return false;
    for (std::size_t i = 0; i < fixes.size(); ++i) {
        if (block.fixes[i].first != fixes[i].first) return false;
        if (std::abs(block.fixes[i].second - fixes[i].second) > 1e-9) return false;
    }
    return true;
}

}  // namespace

UncertaintyValue uncertainty(const CcmleSolution& solution, const CcmleProblem& problem,
                             int t, const SolverSettings& settings) {
    const auto current = enumerate_vertices(slice_polytope(solution, problem, t));

    UncertaintyValue out;
    out.diameter = max_diameter(current);
    for (int successor = 0; successor < problem.n; ++successor) {
        const CcmleProblem next = appended_problem(problem, successor);
        const CcmleSolution next_solution =
            ccmle_solve(next, settings, solution.times.empty() ? nullptr : &solution);
        const auto moved = enumerate_vertices(slice_polytope(next_solution, next, t));
        out.cross = std::max(out.cross, max_cross(current, moved));
    }
    out.value = std::max(out.diameter, out.cross);
    return out;
}

UncertaintyValue uncertainty(const Trajectory& traj, const DriftBound& bound, int s, int a,
                             int num_states, int t, const SolverSettings& settings) {
    int num_actions = a + 1;
    for (int used : traj.actions) num_actions = std::max(num_actions, used + 1);
    const VisitIndex index = build_visit_index(traj, num_states, num_actions);

    CcmleProblem problem;
    problem.n = num_states;
    problem.times = index.at(s, a).times;
    problem.successors = index.at(s, a).successors;
    problem.bound = bound;
    problem.horizon = traj.horizon();

    CcmleSolution solution;
    if (!problem.times.empty()) solution = ccmle_solve(problem, settings);
    return uncertainty(solution, problem, t, settings);
}

UncertaintySession::UncertaintySession(int n, DriftBound bound, SolverSettings settings,
                                       std::optional<int> window)
    : n_(n), bound_(std::move(bound)), settings_(settings), window_(window) {
    if (n_ < 1) throw std::invalid_argument("session dimension must be positive");
    if (window_ && *window_ < 1) throw std::invalid_argument("window must be >= 1");
}

void UncertaintySession::observe(int time, int successor) {
    if (!times_.empty() && time <= times_.back())
        throw std::invalid_argument("observation times must be strictly increasing");
    if (successor < 0 || successor >= n_)
        throw std::invalid_argument("successor outside state range");
    times_.push_back(time);
    successors_.push_back(successor);
}

CcmleProblem UncertaintySession::problem_at(int horizon) const {
    CcmleProblem problem;
    problem.n = n_;
    problem.times = times_;
    problem.successors = successors_;
    problem.bound = bound_;
    problem.horizon = horizon;
    problem.window = window_;
    return problem;
}

void UncertaintySession::ensure_solved(int horizon) {
    if (!times_.empty() && horizon <= times_.back())
        throw std::invalid_argument("horizon must exceed the last observation time");
    const CcmleProblem problem = problem_at(horizon);
    const auto [times, successors] = effective_visits(problem);
    if (have_solution_ && times == solution_.times && successors == solution_.successors) {
        solved_horizon_ = horizon;
        return;
    }

    if (times.empty()) {
        solution_ = CcmleSolution{};
        snapshots_.clear();
    } else {
        CcmleSolution next =
            ccmle_solve(problem, settings_, have_solution_ ? &solution_ : nullptr);
        const auto blocks = anchor_blocks(next);
        std::size_t keep = 0;
        while (keep < snapshots_.size() && keep < blocks.size() &&
               same_block(blocks[keep], snapshots_[keep].first_time,
                          snapshots_[keep].last_time, snapshots_[keep].fixes))
            ++keep;
        snapshots_.resize(keep);
        solution_ = std::move(next);
    }
    have_solution_ = true;
    solved_horizon_ = horizon;
}

void UncertaintySession::extend_snapshots(std::vector<Snapshot>& cache,
                                          const CcmleSolution& solution) {
    const auto blocks = anchor_blocks(solution);
    for (std::size_t b = cache.size(); b < blocks.size(); ++b) {
        SupportFamily body = b == 0 ? SupportFamily::simplex(n_) : cache[b - 1].body;
        if (b > 0) dilate(body, bound_.total(cache[b - 1].last_time, blocks[b].first_time));
        tighten(body, blocks[b].fixes);
        cache.push_back({blocks[b].first_time, blocks[b].last_time, blocks[b].fixes,
                         std::move(body)});
    }
}

const CcmleSolution& UncertaintySession::solution(int horizon) {
    ensure_solved(horizon);
    return solution_;
}

std::vector<double> UncertaintySession::estimate_at(int horizon, int t) {
    ensure_solved(horizon);
    return ccmle_complete_at(solution_, problem_at(horizon), t);
}

UncertaintyValue UncertaintySession::uncertainty_at(int horizon) {
    ensure_solved(horizon);
    extend_snapshots(snapshots_, solution_);

    SupportFamily current = SupportFamily::simplex(n_);
    if (!snapshots_.empty()) {
        current = snapshots_.back().body;
        const double budget = bound_.total(snapshots_.back().last_time, horizon);
        if (budget > 0.0) {
            dilate(current, budget);
            tighten(current, {});
        }
    }
    const auto current_vertices = enumerate_vertices(to_slice_polytope(current));

    UncertaintyValue out;
    out.diameter = max_diameter(current_vertices);
    for (int successor = 0; successor < n_; ++successor) {
        const CcmleProblem next = appended_problem(problem_at(horizon), successor);
        const CcmleSolution next_solution = ccmle_solve(
            next, settings_, solution_.times.empty() ? nullptr : &solution_);

        // Reuse cached sweep bodies for the unchanged block prefix.
        const auto blocks = anchor_blocks(next_solution);
        std::size_t keep = 0;
        while (keep < snapshots_.size() && keep < blocks.size() &&
               same_block(blocks[keep], snapshots_[keep].first_time,
                          snapshots_[keep].last_time, snapshots_[keep].fixes))
            ++keep;
        SupportFamily body =
            keep == 0 ? SupportFamily::simplex(n_) : snapshots_[keep - 1].body;
        int swept_time = keep == 0 ? -1 : snapshots_[keep - 1].last_time;
        for (std::size_t b = keep; b < blocks.size(); ++b) {
            if (b > 0) dilate(body, bound_.total(swept_time, blocks[b].first_time));
            tighten(body, blocks[b].fixes);
            swept_time = blocks[b].last_time;
        }
        const auto moved = enumerate_vertices(to_slice_polytope(body));
        out.cross = std::max(out.cross, max_cross(current_vertices, moved));
    }
    out.value = std::max(out.diameter, out.cross);
    return out;
}

}  // namespace tvmdp
