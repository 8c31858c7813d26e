#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tvmdp/ccmle.hpp"
#include "tvmdp/model.hpp"

namespace tvmdp {

// The set of distributions an estimate may take at one time slice, as an
// intersection of half-spaces. All constructions here produce half-spaces
// whose normals are 0/1 indicator vectors of successor subsets; together with
// the simplex equality these describe the slice set exactly.
struct SlicePolytope {
    int n = 0;
    std::vector<std::vector<double>> normals;
    std::vector<double> offsets;
    std::optional<std::vector<std::vector<double>>> vertices;
};

// Tight upper bounds max sum_{i in J} x_i over the slice set, one per subset
// mask J (masks 0 and full are implicit: 0 and 1). The subset family is
// closed under every operation used by the slice sweep, so keeping these
// bounds tight preserves an exact description throughout.
struct SupportFamily {
    int n = 0;
    std::vector<double> h;   // indexed by mask, entries 0 and (1<<n)-1 unused

    static SupportFamily simplex(int n);
    static SupportFamily point(const std::vector<double>& q);
    double at(unsigned mask) const;
};

// One dilation step: the set reachable from the body within one drift budget
// c, staying inside the distribution hyperplane. Support bounds grow by
// c * min(|J|, n - |J|). Exact; no re-tightening required.
void dilate(SupportFamily& body, double c);

// Restores tightness after intersecting with the simplex and the given fixed
// coordinates (anchor constraints). Throws InfeasibleAnchors if the body
// becomes empty. n = 2 is handled in closed form; larger n re-maximizes each
// subset by a linear program.
void tighten(SupportFamily& body, const std::vector<std::pair<int, double>>& fixes);

// Half-space form of a support family (one row per subset).
SlicePolytope to_slice_polytope(const SupportFamily& body);

// Visit blocks of a solution, with the anchored coordinate values each block
// fixes. Visits separated by zero drift budget share a block.
struct AnchorBlock {
    int first_time = 0;
    int last_time = 0;
    std::vector<std::pair<int, double>> fixes;
};
std::vector<AnchorBlock> anchor_blocks(const CcmleSolution& solution);

// The slice set of estimates at time t consistent with some optimal solution
// of the given problem: forward reachability through anchors at times <= t
// intersected with backward reachability from anchors at later times.
// `solution` must come from ccmle_solve on `problem` (or be empty for a pair
// with no visits). Dimension capped at 6 (InstanceTooLarge).
SlicePolytope slice_polytope(const CcmleSolution& solution, const CcmleProblem& problem,
                             int t);

// Convenience form: index the trajectory, solve the pair's problem, then
// build the slice.
SlicePolytope slice_polytope(const Trajectory& traj, const DriftBound& bound, int s, int a,
                             int num_states, int t, const SolverSettings& settings = {});

// All vertices of the slice set, deduplicated at 1e-8. Supports are exact and
// the set's normal fan coarsens the permutation fan, so each vertex is the
// greedy point of some coordinate ordering: v[pi_k] = h(first k) - h(first
// k-1) over all orderings pi.
std::vector<std::vector<double>> enumerate_vertices(const SlicePolytope& poly);

// Reference computations over the full per-step chain (variables at every
// time step, anchors fixed, per-step drift constraints), used to validate the
// sweep: tight maximum of weights . x_t, and membership of a point at slice
// t. Small instances only; these solve one dense linear program.
double slice_support_reference(const CcmleSolution& solution, const CcmleProblem& problem,
                               int t, const std::vector<double>& weights);
bool slice_member_reference(const CcmleSolution& solution, const CcmleProblem& problem,
                            int t, const std::vector<double>& point, double tol = 1e-7);

}  // namespace tvmdp
