#include "tvmdp/lp.hpp"

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>

namespace tvmdp {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kFeasTol = 1e-9;

// Dense simplex over an explicit tableau. Rows 0..m-1 are constraints, row m
// is the (maximization) objective in reduced form; column n_cols is the RHS.
struct Tableau {
    int m = 0;
    int n_cols = 0;
    std::vector<double> a;        // (m + 1) x (n_cols + 1)
    std::vector<int> basis;       // basic column per row

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * (n_cols + 1) + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * (n_cols + 1) + c]; }

    void pivot(int pr, int pc) {
        const double pivot_value = at(pr, pc);
        for (int c = 0; c <= n_cols; ++c) at(pr, c) /= pivot_value;
        for (int r = 0; r <= m; ++r) {
            if (r == pr) continue;
            const double factor = at(r, pc);
            if (factor == 0.0) continue;
            for (int c = 0; c <= n_cols; ++c) at(r, c) -= factor * at(pr, c);
            at(r, pc) = 0.0;
        }
        basis[pr] = pc;
    }

    // Returns true on optimality, false if unbounded. allowed(c) gates which
    // columns may enter (used to keep artificials out in phase 2).
    template <class Allowed>
    bool run(const Allowed& allowed) {
        long iterations = 0;
        const long bland_after = 200L * (m + n_cols);
        while (true) {
            // Entering column: most positive reduced cost (objective row holds
            // c_j - z_j for maximization); Bland's rule after the iteration
            // threshold to break ties and rule out cycling.
            int pc = -1;
            double best = kPivotTol;
            for (int c = 0; c < n_cols; ++c) {
                if (!allowed(c)) continue;
                const double rc = at(m, c);
                if (iterations > bland_after) {
                    if (rc > kPivotTol) { pc = c; break; }
                } else if (rc > best) {
                    best = rc;
                    pc = c;
                }
            }
            if (pc < 0) return true;

            int pr = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m; ++r) {
                const double col = at(r, pc);
                if (col <= kPivotTol) continue;
                const double ratio = at(r, n_cols) / col;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && (pr < 0 || basis[r] < basis[pr]))) {
                    best_ratio = ratio;
                    pr = r;
                }
            }
            if (pr < 0) return false;
            pivot(pr, pc);
            ++iterations;
        }
    }
};

}  // namespace

LpResult lp_solve(const std::vector<std::vector<double>>& a_ub,
                  const std::vector<double>& b_ub,
                  const std::vector<std::vector<double>>& a_eq,
                  const std::vector<double>& b_eq,
                  const std::vector<double>& c) {
    const int n = static_cast<int>(c.size());
    const int m_ub = static_cast<int>(a_ub.size());
    const int m_eq = static_cast<int>(a_eq.size());
    const int m = m_ub + m_eq;

    // Columns: n structurals, m_ub slacks, then one artificial per row that
    // needs it. Rows are normalized to nonnegative RHS first.
    std::vector<std::vector<double>> rows(m, std::vector<double>(n, 0.0));
    std::vector<double> rhs(m, 0.0);
    std::vector<double> slack_sign(m, 0.0);  // 0 for equality rows
    for (int r = 0; r < m_ub; ++r) {
        assert(static_cast<int>(a_ub[r].size()) == n);
        rows[r] = a_ub[r];
        rhs[r] = b_ub[r];
        slack_sign[r] = 1.0;
        if (rhs[r] < 0.0) {
            for (double& v : rows[r]) v = -v;
            rhs[r] = -rhs[r];
            slack_sign[r] = -1.0;
        }
    }
    for (int r = 0; r < m_eq; ++r) {
        assert(static_cast<int>(a_eq[r].size()) == n);
        rows[m_ub + r] = a_eq[r];
        rhs[m_ub + r] = b_eq[r];
        if (rhs[m_ub + r] < 0.0) {
            for (double& v : rows[m_ub + r]) v = -v;
            rhs[m_ub + r] = -rhs[m_ub + r];
        }
    }

    // A row starts with its slack basic when the slack enters positively;
    // otherwise it gets an artificial.
    std::vector<int> artificial_of_row(m, -1);
    int n_art = 0;
    for (int r = 0; r < m; ++r)
        if (slack_sign[r] <= 0.0) artificial_of_row[r] = n_art++;

    Tableau t;
    t.m = m;
    t.n_cols = n + m_ub + n_art;
    t.a.assign(static_cast<std::size_t>(m + 1) * (t.n_cols + 1), 0.0);
    t.basis.assign(m, -1);

    for (int r = 0; r < m; ++r) {
        for (int j = 0; j < n; ++j) t.at(r, j) = rows[r][j];
        if (r < m_ub) t.at(r, n + r) = slack_sign[r];
        if (artificial_of_row[r] >= 0) {
            const int col = n + m_ub + artificial_of_row[r];
            t.at(r, col) = 1.0;
            t.basis[r] = col;
        } else {
            t.basis[r] = n + r;
        }
        t.at(r, t.n_cols) = rhs[r];
    }

    const int first_art = n + m_ub;
    if (n_art > 0) {
        // Phase 1: maximize -(sum of artificials); reduced costs must reflect
        // the artificial basis, so subtract each artificial row.
        for (int r = 0; r < m; ++r) {
            if (artificial_of_row[r] < 0) continue;
            for (int ccol = 0; ccol <= t.n_cols; ++ccol) t.at(m, ccol) += t.at(r, ccol);
            t.at(m, t.basis[r]) = 0.0;
        }
        const bool ok = t.run([](int) { return true; });
        assert(ok);
        (void)ok;
        if (t.at(m, t.n_cols) > kFeasTol) return {LpStatus::Infeasible, 0.0, {}};
        // Pivot any lingering artificial out of the basis (degenerate rows).
        for (int r = 0; r < m; ++r) {
            if (t.basis[r] < first_art) continue;
            int pc = -1;
            for (int ccol = 0; ccol < first_art; ++ccol)
                if (std::abs(t.at(r, ccol)) > kPivotTol) { pc = ccol; break; }
            if (pc >= 0) t.pivot(r, pc);
            // else: the row is all zeros over real columns; harmless.
        }
    }

    // Phase 2 objective.
    for (int ccol = 0; ccol <= t.n_cols; ++ccol) t.at(m, ccol) = 0.0;
    for (int j = 0; j < n; ++j) t.at(m, j) = c[j];
    for (int r = 0; r < m; ++r) {
        const int b = t.basis[r];
        if (b < n && c[b] != 0.0) {
            const double factor = c[b];
            for (int ccol = 0; ccol <= t.n_cols; ++ccol)
                t.at(m, ccol) -= factor * t.at(r, ccol);
            t.at(m, b) = 0.0;
        }
    }
    if (!t.run([&](int ccol) { return ccol < first_art; }))
        return {LpStatus::Unbounded, 0.0, {}};

    LpResult result;
    result.status = LpStatus::Optimal;
    result.x.assign(n, 0.0);
    for (int r = 0; r < m; ++r)
        if (t.basis[r] < n) result.x[t.basis[r]] = t.at(r, t.n_cols);
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += c[j] * result.x[j];
    result.objective = obj;
    return result;
}

}  // namespace tvmdp
