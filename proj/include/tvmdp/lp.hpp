#pragma once

#include <vector>

namespace tvmdp {

// Small dense linear programs. Sizes here are tens of variables at most, so a
// dense two-phase primal simplex is plenty; feasibility tolerance 1e-9.

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;       // value of c.x at the optimum
    std::vector<double> x;        // primal solution (empty unless Optimal)
};

// maximize c.x  subject to  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0.
LpResult lp_solve(const std::vector<std::vector<double>>& a_ub,
                  const std::vector<double>& b_ub,
                  const std::vector<std::vector<double>>& a_eq,
                  const std::vector<double>& b_eq,
                  const std::vector<double>& c);

}  // namespace tvmdp
