#include "tvmdp/polytope.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tvmdp/errors.hpp"
#include "tvmdp/lp.hpp"

namespace tvmdp {

namespace {

constexpr int kDimensionCap = 6;
constexpr double kVertexDedup = 1e-8;

void check_dimension(int n) {
    if (n > kDimensionCap)
        throw InstanceTooLarge("slice polytope operations support at most 6 successors");
}

int popcount(unsigned mask) { return std::popcount(mask); }

}  // namespace

SupportFamily SupportFamily::simplex(int n) {
    SupportFamily family;
    family.n = n;
    family.h.assign(std::size_t{1} << n, 1.0);
    return family;
}

SupportFamily SupportFamily::point(const std::vector<double>& q) {
    SupportFamily family;
    family.n = static_cast<int>(q.size());
    family.h.assign(std::size_t{1} << family.n, 0.0);
    for (unsigned mask = 1; mask + 1 < family.h.size(); ++mask) {
        double sum = 0.0;
        for (int s = 0; s < family.n; ++s)
            if (mask & (1u << s)) sum += q[s];
        family.h[mask] = sum;
    }
    return family;
}

double SupportFamily::at(unsigned mask) const {
    if (mask == 0) return 0.0;
    if (mask + 1 == (1u << n)) return 1.0;
    return h[mask];
}

void dilate(SupportFamily& body, double c) {
    if (c == 0.0) return;
    const unsigned full = (1u << body.n) - 1;
    for (unsigned mask = 1; mask < full; ++mask)
        body.h[mask] += c * std::min(popcount(mask), body.n - popcount(mask));
}

namespace {

// n=2 bodies are intervals in x_0; closed-form clamp replaces the LP.
void tighten_interval(SupportFamily& body, const std::vector<std::pair<int, double>>& fixes) {
    double lo = std::max(0.0, 1.0 - body.h[2]);
    double hi = std::min(1.0, body.h[1]);
    for (const auto& [coord, value] : fixes) {
        const double x0 = coord == 0 ? value : 1.0 - value;
        lo = std::max(lo, x0);
        hi = std::min(hi, x0);
    }
    if (lo > hi + 1e-9)
        throw InfeasibleAnchors("empty slice set for an optimal solution");
    if (lo > hi) lo = hi = 0.5 * (lo + hi);
    body.h[1] = hi;
    body.h[2] = 1.0 - lo;
}

void tighten_lp(SupportFamily& body, const std::vector<std::pair<int, double>>& fixes) {
    const int n = body.n;
    const unsigned full = (1u << n) - 1;

    std::vector<std::vector<double>> a_ub;
    std::vector<double> b_ub;
    for (unsigned mask = 1; mask < full; ++mask) {
        std::vector<double> row(n, 0.0);
        for (int s = 0; s < n; ++s)
            if (mask & (1u << s)) row[s] = 1.0;
        a_ub.push_back(std::move(row));
        b_ub.push_back(body.h[mask]);
    }
    std::vector<std::vector<double>> a_eq;
    std::vector<double> b_eq;
    a_eq.emplace_back(n, 1.0);
    b_eq.push_back(1.0);
    for (const auto& [coord, value] : fixes) {
        std::vector<double> row(n, 0.0);
        row[coord] = 1.0;
        a_eq.push_back(std::move(row));
        b_eq.push_back(value);
    }

    SupportFamily tightened = body;
    for (unsigned mask = 1; mask < full; ++mask) {
        std::vector<double> c(n, 0.0);
        for (int s = 0; s < n; ++s)
            if (mask & (1u << s)) c[s] = 1.0;
        const LpResult result = lp_solve(a_ub, b_ub, a_eq, b_eq, c);
        if (result.status != LpStatus::Optimal)
            throw InfeasibleAnchors("empty slice set for an optimal solution");
        tightened.h[mask] = result.objective;
    }
    body = std::move(tightened);
}

}  // namespace

void tighten(SupportFamily& body, const std::vector<std::pair<int, double>>& fixes) {
    if (body.n == 1) return;
    if (body.n == 2)
        tighten_interval(body, fixes);
    else
        tighten_lp(body, fixes);
}

std::vector<AnchorBlock> anchor_blocks(const CcmleSolution& solution) {
    std::vector<AnchorBlock> blocks;
    for (std::size_t i = 0; i < solution.times.size(); ++i) {
        const int b = solution.block_of_visit[i];
        if (b == static_cast<int>(blocks.size())) {
            blocks.push_back({solution.times[i], solution.times[i], {}});
        }
        blocks[b].last_time = solution.times[i];
        const int succ = solution.successors[i];
        auto& fixes = blocks[b].fixes;
        const bool seen = std::any_of(fixes.begin(), fixes.end(),
                                      [&](const auto& f) { return f.first == succ; });
        if (!seen) fixes.emplace_back(succ, solution.block_q[b][succ]);
    }
    return blocks;
}

SlicePolytope to_slice_polytope(const SupportFamily& body) {
    SlicePolytope poly;
    poly.n = body.n;
    const unsigned full = (1u << body.n) - 1;
    for (unsigned mask = 1; mask < full; ++mask) {
        std::vector<double> normal(body.n, 0.0);
        for (int s = 0; s < body.n; ++s)
            if (mask & (1u << s)) normal[s] = 1.0;
        poly.normals.push_back(std::move(normal));
        poly.offsets.push_back(body.h[mask]);
    }
    return poly;
}

namespace {

SupportFamily forward_body(const std::vector<AnchorBlock>& blocks, const DriftBound& bound,
                           int n, int last_block) {
    SupportFamily body = SupportFamily::simplex(n);
    for (int b = 0; b <= last_block; ++b) {
        if (b > 0) dilate(body, bound.total(blocks[b - 1].last_time, blocks[b].first_time));
        tighten(body, blocks[b].fixes);
    }
    return body;
}

SupportFamily backward_body(const std::vector<AnchorBlock>& blocks, const DriftBound& bound,
                            int n, int first_block) {
    SupportFamily body = SupportFamily::simplex(n);
    for (int b = static_cast<int>(blocks.size()) - 1; b >= first_block; --b) {
        if (b + 1 < static_cast<int>(blocks.size()))
            dilate(body, bound.total(blocks[b].last_time, blocks[b + 1].first_time));
        tighten(body, blocks[b].fixes);
    }
    return body;
}

SupportFamily intersect_families(const SupportFamily& a, const SupportFamily& b) {
    const int n = a.n;
    if (n <= 2) {
        SupportFamily out = a;
        for (std::size_t mask = 1; mask + 1 < out.h.size(); ++mask)
            out.h[mask] = std::min(a.h[mask], b.h[mask]);
        if (n == 2 && out.h[1] < 1.0 - out.h[2] - 1e-9)
            throw InfeasibleAnchors("forward and backward slice sets do not meet");
        return out;
    }
    const unsigned full = (1u << n) - 1;
    std::vector<std::vector<double>> a_ub;
    std::vector<double> b_ub;
    for (const SupportFamily* family : {&a, &b}) {
        for (unsigned mask = 1; mask < full; ++mask) {
            std::vector<double> row(n, 0.0);
            for (int s = 0; s < n; ++s)
                if (mask & (1u << s)) row[s] = 1.0;
            a_ub.push_back(std::move(row));
            b_ub.push_back(family->h[mask]);
        }
    }
    std::vector<std::vector<double>> a_eq{std::vector<double>(n, 1.0)};
    std::vector<double> b_eq{1.0};

    SupportFamily out = a;
    for (unsigned mask = 1; mask < full; ++mask) {
        std::vector<double> c(n, 0.0);
        for (int s = 0; s < n; ++s)
            if (mask & (1u << s)) c[s] = 1.0;
        const LpResult result = lp_solve(a_ub, b_ub, a_eq, b_eq, c);
        if (result.status != LpStatus::Optimal)
            throw InfeasibleAnchors("forward and backward slice sets do not meet");
        out.h[mask] = result.objective;
    }
    return out;
}

SupportFamily slice_supports(const CcmleSolution& solution, const CcmleProblem& problem,
                             int t) {
    const int n = problem.n;
    if (solution.times.empty()) return SupportFamily::simplex(n);

    const auto blocks = anchor_blocks(solution);
    int last_before = -1;
    while (last_before + 1 < static_cast<int>(blocks.size()) &&
           blocks[last_before + 1].first_time <= t)
        ++last_before;
    const int first_after = last_before + 1;

    std::optional<SupportFamily> forward;
    if (last_before >= 0) {
        SupportFamily body = forward_body(blocks, problem.bound, n, last_before);
        if (t > blocks[last_before].last_time)
            dilate(body, problem.bound.total(blocks[last_before].last_time, t));
        tighten(body, {});
        forward = std::move(body);
    }
    std::optional<SupportFamily> backward;
    if (first_after < static_cast<int>(blocks.size())) {
        SupportFamily body = backward_body(blocks, problem.bound, n, first_after);
        dilate(body, problem.bound.total(t, blocks[first_after].first_time));
        tighten(body, {});
        backward = std::move(body);
    }

    if (forward && backward) return intersect_families(*forward, *backward);
    if (forward) return *forward;
    if (backward) return *backward;
    return SupportFamily::simplex(n);
}

}  // namespace

SlicePolytope slice_polytope(const CcmleSolution& solution, const CcmleProblem& problem,
                             int t) {
    check_dimension(problem.n);
    if (t < 0 || t > problem.horizon)
        throw std::invalid_argument("slice time outside [0, horizon]");
    return to_slice_polytope(slice_supports(solution, problem, t));
}

SlicePolytope slice_polytope(const Trajectory& traj, const DriftBound& bound, int s, int a,
                             int num_states, int t, const SolverSettings& settings) {
    check_dimension(num_states);
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
    return slice_polytope(solution, problem, t);
}

std::vector<std::vector<double>> enumerate_vertices(const SlicePolytope& poly) {
    check_dimension(poly.n);
    const int n = poly.n;
    const unsigned full = (1u << n) - 1;

    // Recover the per-subset bounds from the stored half-spaces.
    std::vector<double> h(std::size_t{1} << n, std::numeric_limits<double>::infinity());
    for (std::size_t row = 0; row < poly.normals.size(); ++row) {
        unsigned mask = 0;
        bool indicator = true;
        for (int s = 0; s < n; ++s) {
            const double v = poly.normals[row][s];
            if (std::abs(v - 1.0) < 1e-9)
                mask |= 1u << s;
            else if (std::abs(v) > 1e-9)
                indicator = false;
        }
        if (!indicator || mask == 0 || mask == full)
            throw std::invalid_argument("vertex enumeration requires subset-indicator normals");
        h[mask] = std::min(h[mask], poly.offsets[row]);
    }
    for (unsigned mask = 1; mask < full; ++mask)
        if (!std::isfinite(h[mask]))
            throw std::invalid_argument("vertex enumeration requires the complete subset family");
    h[0] = 0.0;
    h[full] = 1.0;

    // Greedy point of every coordinate ordering; with tight submodular bounds
    // these are exactly the vertices.
    std::vector<std::vector<double>> vertices;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> candidate(n);
    do {
        unsigned prefix = 0;
        for (int k = 0; k < n; ++k) {
            const unsigned next = prefix | (1u << order[k]);
            candidate[order[k]] = h[next] - h[prefix];
            prefix = next;
        }
        bool valid = true;
        for (unsigned mask = 1; mask < full && valid; ++mask) {
            double sum = 0.0;
            for (int s = 0; s < n; ++s)
                if (mask & (1u << s)) sum += candidate[s];
            if (sum > h[mask] + 1e-7) valid = false;
        }
        if (!valid) continue;
        bool duplicate = false;
        for (const auto& v : vertices) {
            double diff = 0.0;
            for (int s = 0; s < n; ++s) diff = std::max(diff, std::abs(v[s] - candidate[s]));
            if (diff <= kVertexDedup) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) vertices.push_back(candidate);
    } while (std::next_permutation(order.begin(), order.end()));
    return vertices;
}

namespace {

// Dense chain LP shared by the reference checks: variables q_tau[s] for tau in
// [0, t_max], drift rows between consecutive steps, anchors fixed.
struct ChainLp {
    int n = 0;
    int t_max = 0;
    std::vector<std::vector<double>> a_ub, a_eq;
    std::vector<double> b_ub, b_eq;

    int var(int tau, int s) const { return tau * n + s; }

    ChainLp(const CcmleSolution& solution, const CcmleProblem& problem, int t) {
        n = problem.n;
        t_max = t;
        for (int time : solution.times) t_max = std::max(t_max, time);
        const int num_vars = (t_max + 1) * n;

        for (int tau = 0; tau <= t_max; ++tau) {
            std::vector<double> row(num_vars, 0.0);
            for (int s = 0; s < n; ++s) row[var(tau, s)] = 1.0;
            a_eq.push_back(std::move(row));
            b_eq.push_back(1.0);
        }
        for (std::size_t i = 0; i < solution.times.size(); ++i) {
            std::vector<double> row(num_vars, 0.0);
            row[var(solution.times[i], solution.successors[i])] = 1.0;
            a_eq.push_back(std::move(row));
            b_eq.push_back(solution.anchored[i]);
        }
        for (int tau = 0; tau + 1 <= t_max; ++tau) {
            const double eps = problem.bound.at(tau);
            for (int s = 0; s < n; ++s) {
                std::vector<double> row(num_vars, 0.0);
                row[var(tau + 1, s)] = 1.0;
                row[var(tau, s)] = -1.0;
                a_ub.push_back(row);
                b_ub.push_back(eps);
                for (double& v : row) v = -v;
                a_ub.push_back(std::move(row));
                b_ub.push_back(eps);
            }
        }
    }
};

}  // namespace

double slice_support_reference(const CcmleSolution& solution, const CcmleProblem& problem,
                               int t, const std::vector<double>& weights) {
    ChainLp chain(solution, problem, t);
    std::vector<double> c((chain.t_max + 1) * chain.n, 0.0);
    for (int s = 0; s < chain.n; ++s) c[chain.var(t, s)] = weights[s];
    const LpResult result = lp_solve(chain.a_ub, chain.b_ub, chain.a_eq, chain.b_eq, c);
    if (result.status != LpStatus::Optimal)
        throw InfeasibleAnchors("anchored chain admits no feasible completion");
    return result.objective;
}

bool slice_member_reference(const CcmleSolution& solution, const CcmleProblem& problem,
                            int t, const std::vector<double>& point, double tol) {
    ChainLp chain(solution, problem, t);
    const int num_vars = (chain.t_max + 1) * chain.n;
    for (int s = 0; s < chain.n; ++s) {
        std::vector<double> row(num_vars, 0.0);
        row[chain.var(t, s)] = 1.0;
        chain.a_ub.push_back(row);
        chain.b_ub.push_back(point[s] + tol);
        for (double& v : row) v = -v;
        chain.a_ub.push_back(std::move(row));
        chain.b_ub.push_back(-(point[s] - tol));
    }
    const std::vector<double> c(num_vars, 0.0);
    const LpResult result = lp_solve(chain.a_ub, chain.b_ub, chain.a_eq, chain.b_eq, c);
    return result.status == LpStatus::Optimal;
}

}  // namespace tvmdp
