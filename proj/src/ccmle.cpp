#include "tvmdp/ccmle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "tvmdp/errors.hpp"

namespace tvmdp {

namespace {

constexpr double kZeroGap = 1e-15;   // drift budgets below this merge visits
constexpr double kMuFloor = 1e-12;
constexpr double kActiveDetect = 1e-6;

// ---------------------------------------------------------------------------
// Small dense LU with partial pivoting (blocks are at most ~2n+2 wide).

struct DenseLu {
    int n = 0;
    std::vector<double> a;   // row-major, overwritten by factors
    std::vector<int> piv;

    bool factor() {
        piv.resize(n);
        for (int c = 0; c < n; ++c) {
            int p = c;
            for (int r = c + 1; r < n; ++r)
                if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
            piv[c] = p;
            if (p != c)
                for (int j = 0; j < n; ++j) std::swap(a[c * n + j], a[p * n + j]);
            const double d = a[c * n + c];
            if (std::abs(d) < 1e-300) return false;
            for (int r = c + 1; r < n; ++r) {
                const double f = a[r * n + c] / d;
                a[r * n + c] = f;
                for (int j = c + 1; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
            }
        }
        return true;
    }

    void solve(double* b) const {
        // factor() swaps whole rows, so the permutation must be applied in
        // full before the triangular sweeps.
        for (int c = 0; c < n; ++c)
            if (piv[c] != c) std::swap(b[c], b[piv[c]]);
        for (int c = 0; c < n; ++c)
            for (int r = c + 1; r < n; ++r) b[r] -= a[r * n + c] * b[c];
        for (int r = n - 1; r >= 0; --r) {
            for (int c = r + 1; c < n; ++c) b[r] -= a[r * n + c] * b[c];
            b[r] /= a[r * n + r];
        }
    }
};

// Symmetric block-tridiagonal indefinite solve (Thomas recursion with dense
// LU per pivot block). Block sizes may vary. E[b] couples block b to b+1,
// stored as a dense size_b x size_{b+1} matrix; K[b+1][b] is its transpose.
struct BlockTridiag {
    std::vector<int> size;
    std::vector<std::vector<double>> d;   // diagonal blocks, row-major
    std::vector<std::vector<double>> e;   // off-diagonal blocks

    // Scratch buffers persist across calls so repeated solves on a chain of
    // the same shape stay allocation-free.
    std::vector<DenseLu> lu;
    std::vector<std::vector<double>> w;   // M_b^{-1} E_b
    std::vector<std::vector<double>> z;   // M_b^{-1} y_b
    std::vector<double> m, col;

    // Solves K x = rhs in place. Returns false if a pivot block is singular.
    bool solve(std::vector<std::vector<double>>& rhs) {
        const int k = static_cast<int>(size.size());
        lu.resize(k);
        w.resize(std::max(0, k - 1));
        z.resize(k);

        m.assign(d[0].begin(), d[0].end());
        for (int b = 0;; ++b) {
            lu[b].n = size[b];
            lu[b].a.assign(m.begin(), m.end());
            if (!lu[b].factor()) return false;
            z[b].assign(rhs[b].begin(), rhs[b].end());
            if (b > 0) {
                // y_b = rhs_b - E_{b-1}^T z_{b-1}
                const int sp = size[b - 1];
                for (int i = 0; i < size[b]; ++i) {
                    double acc = 0.0;
                    for (int r = 0; r < sp; ++r) acc += e[b - 1][r * size[b] + i] * z[b - 1][r];
                    z[b][i] -= acc;
                }
            }
            lu[b].solve(z[b].data());
            if (b == k - 1) break;

            // W_b = M_b^{-1} E_b, column by column.
            const int sb = size[b], sn = size[b + 1];
            w[b].assign(static_cast<std::size_t>(sb) * sn, 0.0);
            col.resize(sb);
            for (int j = 0; j < sn; ++j) {
                for (int i = 0; i < sb; ++i) col[i] = e[b][i * sn + j];
                lu[b].solve(col.data());
                for (int i = 0; i < sb; ++i) w[b][i * sn + j] = col[i];
            }
            // M_{b+1} = D_{b+1} - E_b^T W_b
            m.assign(d[b + 1].begin(), d[b + 1].end());
            for (int i = 0; i < sn; ++i)
                for (int j = 0; j < sn; ++j) {
                    double acc = 0.0;
                    for (int r = 0; r < sb; ++r) acc += e[b][r * sn + i] * w[b][r * sn + j];
                    m[i * sn + j] -= acc;
                }
        }

        // Back substitution: x_b = z_b - W_b x_{b+1}.
        for (int b = k - 2; b >= 0; --b) {
            const int sb = size[b], sn = size[b + 1];
            for (int i = 0; i < sb; ++i) {
                double acc = 0.0;
                for (int j = 0; j < sn; ++j) acc += w[b][i * sn + j] * z[b + 1][j];
                z[b][i] -= acc;
            }
        }
        for (int b = 0; b < k; ++b) rhs[b].assign(z[b].begin(), z[b].end());
        return true;
    }
};

// ---------------------------------------------------------------------------
// Problem preprocessing.

struct Blocks {
    int n = 0;
    int k = 0;                                  // number of blocks
    std::vector<std::vector<double>> counts;    // per block, per successor
    std::vector<double> total_count;
    std::vector<int> first_time, last_time;
    std::vector<double> gap;                    // drift budget between b and b+1
    std::vector<bool> gap_active;               // gap < 1 can bind
    std::vector<int> block_of_visit;
};

Blocks build_blocks(const CcmleProblem& problem, const std::vector<int>& times,
                    const std::vector<int>& successors) {
    Blocks blocks;
    blocks.n = problem.n;
    const int v = static_cast<int>(times.size());
    blocks.block_of_visit.resize(v);
    for (int i = 0; i < v; ++i) {
        const bool merge =
            i > 0 && problem.bound.total(times[i - 1], times[i]) < kZeroGap;
        if (!merge) {
            blocks.counts.emplace_back(problem.n, 0.0);
            blocks.total_count.push_back(0.0);
            blocks.first_time.push_back(times[i]);
            blocks.last_time.push_back(times[i]);
        }
        const int b = static_cast<int>(blocks.counts.size()) - 1;
        blocks.block_of_visit[i] = b;
        blocks.counts[b][successors[i]] += 1.0;
        blocks.total_count[b] += 1.0;
        blocks.last_time[b] = times[i];
    }
    blocks.k = static_cast<int>(blocks.counts.size());
    blocks.gap.resize(std::max(0, blocks.k - 1));
    blocks.gap_active.resize(std::max(0, blocks.k - 1));
    for (int b = 0; b + 1 < blocks.k; ++b) {
        blocks.gap[b] = problem.bound.total(blocks.last_time[b], blocks.first_time[b + 1]);
        blocks.gap_active[b] = blocks.gap[b] < 1.0;
    }
    return blocks;
}

double chain_objective(const Blocks& blocks, const std::vector<std::vector<double>>& q) {
    double obj = 0.0;
    for (int b = 0; b < blocks.k; ++b)
        for (int s = 0; s < blocks.n; ++s)
            if (blocks.counts[b][s] > 0.0) obj -= blocks.counts[b][s] * std::log(q[b][s]);
    return obj;
}

bool chain_feasible(const Blocks& blocks, const std::vector<std::vector<double>>& q,
                    double tol) {
    for (int b = 0; b < blocks.k; ++b) {
        double sum = 0.0;
        for (int s = 0; s < blocks.n; ++s) {
            if (q[b][s] < -tol) return false;
            sum += q[b][s];
        }
        if (std::abs(sum - 1.0) > tol) return false;
        if (b + 1 < blocks.k)
            for (int s = 0; s < blocks.n; ++s)
                if (std::abs(q[b + 1][s] - q[b][s]) > blocks.gap[b] + tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Log-barrier interior solver.

struct BarrierState {
    std::vector<std::vector<double>> q;
    double mu = 1.0;
};

double barrier_value(const Blocks& blocks, const std::vector<std::vector<double>>& q,
                     double mu, double p_min) {
    double value = 0.0;
    const int n = blocks.n;
    for (int b = 0; b < blocks.k; ++b) {
        for (int s = 0; s < n; ++s) {
            const double margin = q[b][s] - p_min;
            if (margin <= 0.0) return std::numeric_limits<double>::infinity();
            if (blocks.counts[b][s] > 0.0) value -= blocks.counts[b][s] * std::log(q[b][s]);
            value -= mu * std::log(margin);
        }
        if (b + 1 < blocks.k && blocks.gap_active[b]) {
            const double c = blocks.gap[b];
            for (int s = 0; s < n; ++s) {
                const double diff = q[b + 1][s] - q[b][s];
                if (c - diff <= 0.0 || c + diff <= 0.0)
                    return std::numeric_limits<double>::infinity();
                value -= mu * (std::log(c - diff) + std::log(c + diff));
            }
        }
    }
    return value;
}

// One Newton step on the equality-constrained barrier subproblem. Returns the
// Newton decrement estimate, or a negative value on linear-algebra failure.
double barrier_newton_step(const Blocks& blocks, BarrierState& state, double p_min,
                           BlockTridiag& kkt, std::vector<std::vector<double>>& rhs,
                           std::vector<std::vector<double>>& delta) {
    const int n = blocks.n;
    const int k = blocks.k;
    const int sz = n + 1;

    kkt.size.assign(k, sz);
    kkt.d.resize(k);
    kkt.e.resize(std::max(0, k - 1));
    rhs.resize(k);
    for (int b = 0; b < k; ++b) {
        kkt.d[b].assign(static_cast<std::size_t>(sz) * sz, 0.0);
        rhs[b].assign(sz, 0.0);
        if (b + 1 < k) kkt.e[b].assign(static_cast<std::size_t>(sz) * sz, 0.0);
    }

    for (int b = 0; b < k; ++b) {
        double sum = 0.0;
        for (int s = 0; s < n; ++s) sum += state.q[b][s];
        rhs[b][n] = 1.0 - sum;
        for (int s = 0; s < n; ++s) {
            const double qv = state.q[b][s];
            double grad = -state.mu / (qv - p_min);
            double hess = state.mu / ((qv - p_min) * (qv - p_min));
            if (blocks.counts[b][s] > 0.0) {
                grad -= blocks.counts[b][s] / qv;
                hess += blocks.counts[b][s] / (qv * qv);
            }
            if (b > 0 && blocks.gap_active[b - 1]) {
                const double c = blocks.gap[b - 1];
                const double diff = state.q[b][s] - state.q[b - 1][s];
                grad += state.mu * (1.0 / (c - diff) - 1.0 / (c + diff));
                hess += state.mu * (1.0 / ((c - diff) * (c - diff)) +
                                    1.0 / ((c + diff) * (c + diff)));
            }
            if (b + 1 < k && blocks.gap_active[b]) {
                const double c = blocks.gap[b];
                const double diff = state.q[b + 1][s] - state.q[b][s];
                grad -= state.mu * (1.0 / (c - diff) - 1.0 / (c + diff));
                const double h = state.mu * (1.0 / ((c - diff) * (c - diff)) +
                                             1.0 / ((c + diff) * (c + diff)));
                hess += h;
                kkt.e[b][s * sz + s] = -h;
            }
            kkt.d[b][s * sz + s] = hess;
            kkt.d[b][s * sz + n] = 1.0;
            kkt.d[b][n * sz + s] = 1.0;
            rhs[b][s] = -grad;
        }
    }

    if (!kkt.solve(rhs)) return -std::numeric_limits<double>::infinity();

    double decrement = 0.0;
    delta.resize(k);
    for (int b = 0; b < k; ++b) delta[b].assign(n, 0.0);
    for (int b = 0; b < k; ++b)
        for (int s = 0; s < n; ++s) {
            delta[b][s] = rhs[b][s];
            // g^T delta with the multiplier part dropping out (A delta = 0).
            const double qv = state.q[b][s];
            double grad = -state.mu / (qv - p_min);
            if (blocks.counts[b][s] > 0.0) grad -= blocks.counts[b][s] / qv;
            if (b > 0 && blocks.gap_active[b - 1]) {
                const double c = blocks.gap[b - 1];
                const double diff = state.q[b][s] - state.q[b - 1][s];
                grad += state.mu * (1.0 / (c - diff) - 1.0 / (c + diff));
            }
            if (b + 1 < k && blocks.gap_active[b]) {
                const double c = blocks.gap[b];
                const double diff = state.q[b + 1][s] - state.q[b][s];
                grad -= state.mu * (1.0 / (c - diff) - 1.0 / (c + diff));
            }
            decrement -= grad * delta[b][s];
        }
    return decrement;
}

double max_feasible_step(const Blocks& blocks, const BarrierState& state,
                         const std::vector<std::vector<double>>& delta, double p_min) {
    double alpha = 1.0;
    for (int b = 0; b < blocks.k; ++b) {
        for (int s = 0; s < blocks.n; ++s) {
            if (delta[b][s] < 0.0)
                alpha = std::min(alpha, 0.995 * (state.q[b][s] - p_min) / -delta[b][s]);
            if (b + 1 < blocks.k && blocks.gap_active[b]) {
                const double c = blocks.gap[b];
                const double diff = state.q[b + 1][s] - state.q[b][s];
                const double dd = delta[b + 1][s] - delta[b][s];
                if (dd > 0.0) alpha = std::min(alpha, 0.995 * (c - diff) / dd);
                if (dd < 0.0) alpha = std::min(alpha, 0.995 * (c + diff) / -dd);
            }
        }
    }
    return alpha;
}

// ---------------------------------------------------------------------------
// Active-set polish: equality-constrained Newton on the true problem with the
// detected active set pinned, then a KKT sign check. Success certifies the
// exact optimum (convex problem), which is what makes boundary anchors land
// exactly on 0/1.

struct PinSet {
    // pinned_zero[b][s]: q_b[s] = 0. pinned_gap[g][s]: 0 none, +1 at +c, -1 at -c.
    std::vector<std::vector<char>> zero;
    std::vector<std::vector<char>> gap;
    int count() const {
        int c = 0;
        for (const auto& v : zero) c += static_cast<int>(std::count(v.begin(), v.end(), 1));
        for (const auto& v : gap)
            c += static_cast<int>(v.size() - std::count(v.begin(), v.end(), 0));
        return c;
    }
};

struct PolishResult {
    bool ok = false;
    std::vector<std::vector<double>> q;
};

PolishResult polish(const Blocks& blocks, const std::vector<std::vector<double>>& q_start,
                    PinSet pins, int max_rounds) {
    const int n = blocks.n;
    const int k = blocks.k;
    constexpr double kRho = 1e-10;

    BlockTridiag kkt;
    std::vector<std::vector<double>> rhs;
    std::vector<int> size(k);
    std::vector<std::vector<int>> zero_rows(k), gap_rows(k);
    std::vector<std::vector<double>> mult(k);

    auto rebuild = [&] {
        // Layout per block: q (n), lambda (1), one row per pinned zero, one
        // row per pinned gap coordinate entering this block from the left.
        for (int b = 0; b < k; ++b) {
            zero_rows[b].clear();
            gap_rows[b].clear();
            for (int s = 0; s < n; ++s)
                if (pins.zero[b][s]) zero_rows[b].push_back(s);
            if (b > 0) {
                for (int s = 0; s < n; ++s)
                    if (pins.gap[b - 1][s]) gap_rows[b].push_back(s);
                // A gap with every coordinate pinned is redundant against the
                // two simplex rows (the differences always sum to zero); keep
                // n - 1 rows but leave every pin recorded so the step limiter
                // still treats the dropped coordinate as held.
                if (static_cast<int>(gap_rows[b].size()) == n)
                    gap_rows[b].pop_back();
            }
            size[b] = n + 1 + static_cast<int>(zero_rows[b].size()) +
                      static_cast<int>(gap_rows[b].size());
        }
    };
    rebuild();

    std::vector<std::vector<double>> q = q_start;
    const int iter_budget = 25 * std::max(1, max_rounds);
    int stalled = 0;

    for (int iter = 0; iter < iter_budget; ++iter) {
        kkt.size = size;
        kkt.d.resize(k);
        kkt.e.resize(std::max(0, k - 1));
        rhs.resize(k);

        for (int b = 0; b < k; ++b) {
            const int sb = size[b];
            kkt.d[b].assign(static_cast<std::size_t>(sb) * sb, 0.0);
            rhs[b].assign(sb, 0.0);
            double sum = 0.0;
            for (int s = 0; s < n; ++s) {
                double grad = 0.0, hess = kRho;
                if (blocks.counts[b][s] > 0.0) {
                    grad = -blocks.counts[b][s] / q[b][s];
                    hess = blocks.counts[b][s] / (q[b][s] * q[b][s]);
                }
                kkt.d[b][s * sb + s] = hess;
                kkt.d[b][s * sb + n] = 1.0;
                kkt.d[b][n * sb + s] = 1.0;
                rhs[b][s] = -grad;
                sum += q[b][s];
            }
            rhs[b][n] = 1.0 - sum;
            int row = n + 1;
            for (int s : zero_rows[b]) {
                kkt.d[b][s * sb + row] = 1.0;
                kkt.d[b][row * sb + s] = 1.0;
                rhs[b][row] = -q[b][s];
                ++row;
            }
            for (int s : gap_rows[b]) {
                // Constraint q_b[s] - q_{b-1}[s] = sign * c_{b-1}.
                kkt.d[b][s * sb + row] = 1.0;
                kkt.d[b][row * sb + s] = 1.0;
                const double target = pins.gap[b - 1][s] * blocks.gap[b - 1];
                rhs[b][row] = target - (q[b][s] - q[b - 1][s]);
                ++row;
            }
            if (b + 1 < k) {
                const int sn2 = size[b + 1];
                kkt.e[b].assign(static_cast<std::size_t>(sb) * sn2, 0.0);
                int col = n + 1 + static_cast<int>(zero_rows[b + 1].size());
                for (int s : gap_rows[b + 1]) {
                    kkt.e[b][s * sn2 + col] = -1.0;
                    ++col;
                }
            }
        }

        // The stationarity right-hand side carries the residuals, so the
        // solve returns fresh multipliers along with the primal step.
        if (!kkt.solve(rhs)) return {};

        double max_dq = 0.0;
        for (int b = 0; b < k; ++b)
            for (int s = 0; s < n; ++s)
                max_dq = std::max(max_dq, std::abs(rhs[b][s]));

        if (max_dq < 1e-11) {
            // Converged on this face; release the single most wrongly signed
            // pin, if any, or accept. Releasing one constraint at a time is
            // what guarantees the next step moves off the released face;
            // releasing several at once can drive the step straight back
            // through one of them.
            for (int b = 0; b < k; ++b)
                mult[b].assign(rhs[b].begin() + n, rhs[b].end());
            double worst = 1e-7;
            int rel_b = -1, rel_s = -1;
            bool rel_zero = false;
            for (int b = 0; b < k; ++b) {
                int idx = 1;  // mult[b][0] is lambda
                for (int s : zero_rows[b]) {
                    if (mult[b][idx] > worst) {
                        worst = mult[b][idx];
                        rel_b = b;
                        rel_s = s;
                        rel_zero = true;
                    }
                    ++idx;
                }
                for (int s : gap_rows[b]) {
                    const double nu = mult[b][idx];
                    const double bad = pins.gap[b - 1][s] > 0 ? -nu : nu;
                    if (bad > worst) {
                        worst = bad;
                        rel_b = b - 1;
                        rel_s = s;
                        rel_zero = false;
                    }
                    ++idx;
                }
            }
            if (rel_b >= 0) {
                if (rel_zero)
                    pins.zero[rel_b][rel_s] = 0;
                else
                    pins.gap[rel_b][rel_s] = 0;
                rebuild();
                stalled = 0;
                continue;
            }
            if (!chain_feasible(blocks, q, 1e-9)) return {};
            PolishResult result;
            result.ok = true;
            result.q = std::move(q);
            return result;
        }

        // Step limit: damp far-from-quadratic steps, keep observed
        // coordinates positive, and stop at the first inequality the step
        // runs into; that constraint joins the active set.
        double alpha = max_dq > 0.25 ? 0.25 / max_dq : 1.0;
        int hit_b = -1, hit_s = -1;
        char hit_sign = 0;
        bool hit_zero = false;
        for (int b = 0; b < k; ++b)
            for (int s = 0; s < n; ++s) {
                const double dq = rhs[b][s];
                if (blocks.counts[b][s] > 0.0) {
                    if (dq < 0.0) alpha = std::min(alpha, -0.9 * q[b][s] / dq);
                } else if (!pins.zero[b][s] && dq < 0.0 && q[b][s] < -dq) {
                    const double cap = 0.999 * q[b][s] / -dq;
                    if (cap < alpha) {
                        alpha = cap;
                        hit_b = b;
                        hit_s = s;
                        hit_zero = true;
                        hit_sign = 0;
                    }
                }
                if (b + 1 < k && blocks.gap_active[b] && !pins.gap[b][s]) {
                    const double c = blocks.gap[b];
                    const double diff = q[b + 1][s] - q[b][s];
                    const double dd = rhs[b + 1][s] - rhs[b][s];
                    double cap = 1.0;
                    char sign = 0;
                    if (dd > 0.0 && c - diff < dd) {
                        cap = 0.999 * std::max(0.0, c - diff) / dd;
                        sign = 1;
                    } else if (dd < 0.0 && c + diff < -dd) {
                        cap = 0.999 * std::max(0.0, c + diff) / -dd;
                        sign = -1;
                    }
                    if (sign != 0 && cap < alpha) {
                        alpha = cap;
                        hit_b = b;
                        hit_s = s;
                        hit_sign = sign;
                        hit_zero = false;
                    }
                }
            }

        for (int b = 0; b < k; ++b)
            for (int s = 0; s < n; ++s) q[b][s] += alpha * rhs[b][s];

        if (hit_b >= 0) {
            if (hit_zero)
                pins.zero[hit_b][hit_s] = 1;
            else
                pins.gap[hit_b][hit_s] = hit_sign;
            rebuild();
            stalled = 0;
            continue;
        }
        // A vanishing step without a constraint to blame cannot make
        // progress.
        if (alpha < 1e-10) {
            if (++stalled >= 3) return {};
        } else {
            stalled = 0;
        }
    }
    return {};
}

// Active inequalities at a point, used to seed the polish stage.
PinSet detect_pins(const Blocks& blocks, const std::vector<std::vector<double>>& q,
                   double p_min) {
    PinSet pins;
    pins.zero.assign(blocks.k, std::vector<char>(blocks.n, 0));
    pins.gap.assign(std::max(0, blocks.k - 1), std::vector<char>(blocks.n, 0));
    for (int b = 0; b < blocks.k; ++b)
        for (int s = 0; s < blocks.n; ++s)
            if (blocks.counts[b][s] == 0.0 && q[b][s] - p_min < kActiveDetect)
                pins.zero[b][s] = 1;
    for (int b = 0; b + 1 < blocks.k; ++b) {
        if (!blocks.gap_active[b]) continue;
        for (int s = 0; s < blocks.n; ++s) {
            const double diff = q[b + 1][s] - q[b][s];
            if (blocks.gap[b] - std::abs(diff) < kActiveDetect)
                pins.gap[b][s] = diff >= 0.0 ? 1 : -1;
        }
    }
    return pins;
}

// Snap values within 10 * p_min of 0 or 1 to exactly 0/1 when the snapped
// chain stays feasible; otherwise leave the point untouched.
void snap_chain(const Blocks& blocks, std::vector<std::vector<double>>& q, double p_min) {
    const double window = 10.0 * p_min;
    auto snapped = q;
    bool any = false;
    for (int b = 0; b < blocks.k; ++b) {
        double free_sum = 0.0;
        int unit = -1;
        for (int s = 0; s < blocks.n; ++s) {
            if (snapped[b][s] < window) {
                snapped[b][s] = 0.0;
                any = true;
            } else if (snapped[b][s] > 1.0 - window) {
                snapped[b][s] = 1.0;
                unit = s;
                any = true;
            }
            free_sum += snapped[b][s];
        }
        if (unit >= 0) {
            for (int s = 0; s < blocks.n; ++s) snapped[b][s] = (s == unit) ? 1.0 : 0.0;
        } else if (std::abs(free_sum - 1.0) > 0.0 && free_sum > 0.0) {
            for (int s = 0; s < blocks.n; ++s) snapped[b][s] /= free_sum;
        }
    }
    if (!any) return;
    for (int b = 0; b + 1 < blocks.k; ++b)
        for (int s = 0; s < blocks.n; ++s)
            if (std::abs(snapped[b + 1][s] - snapped[b][s]) >
                blocks.gap[b] * (1.0 + 1e-12) + 1e-15)
                return;
    q = std::move(snapped);
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> effective_visits(const CcmleProblem& problem) {
    std::vector<int> times, successors;
    const int cutoff = problem.window ? problem.horizon - *problem.window
                                      : std::numeric_limits<int>::min();
    if (problem.window && *problem.window < 1)
        throw std::invalid_argument("window must be >= 1");
    for (std::size_t i = 0; i < problem.times.size(); ++i) {
        if (problem.times[i] < cutoff) continue;
        times.push_back(problem.times[i]);
        successors.push_back(problem.successors[i]);
    }
    return {times, successors};
}

namespace {

CcmleSolution solve_visits(const CcmleProblem& problem, const SolverSettings& settings,
                           const CcmleSolution* warm, std::vector<int> times,
                           std::vector<int> successors) {
    Blocks blocks = build_blocks(problem, times, successors);
    const int n = blocks.n;
    const int k = blocks.k;

    CcmleSolution solution;
    solution.times = times;
    solution.successors = successors;
    solution.block_of_visit = blocks.block_of_visit;
    solution.block_time = blocks.first_time;

    if (n == 1) {
        solution.block_q.assign(k, {1.0});
        solution.anchored.assign(times.size(), 1.0);
        solution.objective = 0.0;
        return solution;
    }

    auto finish = [&](std::vector<std::vector<double>> q) {
        snap_chain(blocks, q, settings.p_min);
        solution.block_q = std::move(q);
        solution.objective = chain_objective(blocks, solution.block_q);
        solution.anchored.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i)
            solution.anchored[i] =
                solution.block_q[blocks.block_of_visit[i]][successors[i]];
        return std::move(solution);
    };

    // Initial point: uniform everywhere (always strictly feasible), or the
    // warm solution matched by block time and blended slightly toward uniform
    // to restore strict interiority.
    BarrierState state;
    state.q.assign(k, std::vector<double>(n, 1.0 / n));
    if (warm && !warm->block_q.empty()) {
        for (int b = 0; b < k; ++b) {
            // Last warm block whose time is <= this block's time.
            const auto it = std::upper_bound(warm->block_time.begin(),
                                             warm->block_time.end(), blocks.first_time[b]);
            const std::size_t idx =
                it == warm->block_time.begin() ? 0 : (it - warm->block_time.begin()) - 1;
            if (warm->block_q[idx].size() == static_cast<std::size_t>(n))
                state.q[b] = warm->block_q[idx];
        }

        // Fast path: from a near-optimal start the pinned Newton iteration
        // reaches the new optimum in a few steps, and its sign check is a full
        // KKT certificate, so no barrier sweep is needed. The tiny blend keeps
        // the start strictly inside every constraint.
        {
            auto q = state.q;
            constexpr double theta = 1e-6;
            for (int b = 0; b < k; ++b)
                for (int s = 0; s < n; ++s)
                    q[b][s] = (1.0 - theta) * q[b][s] + theta / n;
            PolishResult fast =
                polish(blocks, q, detect_pins(blocks, q, settings.p_min), 16);
            if (fast.ok && chain_feasible(blocks, fast.q, 1e-9))
                return finish(std::move(fast.q));
        }

        double theta = 1e-6;
        for (int b = 0; b + 1 < k; ++b) {
            const double c = blocks.gap[b];
            if (!blocks.gap_active[b]) continue;
            for (int s = 0; s < n; ++s) {
                const double diff = std::abs(state.q[b + 1][s] - state.q[b][s]);
                if (diff >= c * 0.9999)
                    theta = std::max(theta, 1.0 - 0.995 * c / std::max(diff, 1e-300));
            }
        }
        theta = std::min(theta, 1.0);
        for (int b = 0; b < k; ++b)
            for (int s = 0; s < n; ++s)
                state.q[b][s] = (1.0 - theta) * state.q[b][s] + theta / n;
    }

    long inequality_count = static_cast<long>(k) * n;
    for (int b = 0; b + 1 < k; ++b)
        if (blocks.gap_active[b]) inequality_count += 2 * n;

    const double mu_stop =
        std::max(settings.obj_tol / static_cast<double>(inequality_count), kMuFloor);
    state.mu = warm ? std::max(1e-6, mu_stop) : 1.0;

    int iterations = 0;
    BlockTridiag kkt;
    std::vector<std::vector<double>> rhs;
    std::vector<std::vector<double>> delta;
    while (true) {
        const double inner_tol = 0.05 * std::max(state.mu, 1e-10);
        for (int inner = 0; inner < 60; ++inner) {
            if (++iterations > settings.max_iterations)
                throw NonConvergence("iteration limit reached in ccmle_solve");
            const double dec =
                barrier_newton_step(blocks, state, settings.p_min, kkt, rhs, delta);
            if (std::isinf(dec)) throw NonConvergence("singular KKT system in ccmle_solve");
            if (dec < inner_tol) break;
            double alpha = max_feasible_step(blocks, state, delta, settings.p_min);
            const double f0 = barrier_value(blocks, state.q, state.mu, settings.p_min);
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                auto trial = state.q;
                for (int b = 0; b < k; ++b)
                    for (int s = 0; s < n; ++s) trial[b][s] += alpha * delta[b][s];
                const double f1 = barrier_value(blocks, trial, state.mu, settings.p_min);
                if (f1 <= f0 - 0.25 * alpha * dec + 1e-14 * std::abs(f0)) {
                    state.q = std::move(trial);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;  // numerically stalled at this mu
        }
        if (state.mu <= mu_stop * (1.0 + 1e-12)) break;
        state.mu = std::max(state.mu * 0.2, mu_stop);
    }

    if (!chain_feasible(blocks, state.q, 1e-7)) {
        if (warm) return ccmle_solve(problem, settings, nullptr);
        throw NonConvergence("barrier iterate left the feasible chain");
    }

    // Polish the active set so boundary optima come out exact.
    PinSet pins = detect_pins(blocks, state.q, settings.p_min);
    if (pins.count() > 0) {
        const double barrier_obj = chain_objective(blocks, state.q);
        PolishResult polished = polish(blocks, state.q, pins, 8);
        if (polished.ok &&
            chain_objective(blocks, polished.q) <=
                barrier_obj + 1e-9 * (1.0 + std::abs(barrier_obj)))
            state.q = std::move(polished.q);
    }

    return finish(std::move(state.q));
}

// When new observations only extend a previously solved problem, the chain can
// be re-solved from a drift constraint that held with slack far enough back
// that the new data's influence dies out before it. An inactive constraint
// carries a zero multiplier, so the untouched prefix and the re-solved suffix
// together satisfy the stationarity conditions of the full problem, provided
// the severed constraint stays slack afterwards. If it does not, the cut was
// too close and a deeper one is tried.
CcmleSolution solve_appended(const CcmleProblem& problem, const SolverSettings& settings,
                             const CcmleSolution* warm, const std::vector<int>& times,
                             const std::vector<int>& successors, bool& done) {
    done = false;
    CcmleSolution out;
    const int n = problem.n;
    if (!warm || warm->times.empty() || warm->times.size() >= times.size()) return out;
    const std::size_t vw = warm->times.size();
    const int kw = static_cast<int>(warm->block_time.size());
    if (kw < 2 || warm->block_q.size() != static_cast<std::size_t>(kw) ||
        warm->block_of_visit.size() != vw || warm->anchored.size() != vw)
        return out;
    for (std::size_t i = 0; i < vw; ++i)
        if (warm->times[i] != times[i] || warm->successors[i] != successors[i]) return out;
    for (int b = 0; b < kw; ++b)
        if (warm->block_q[b].size() != static_cast<std::size_t>(n)) return out;

    // Last visit time of each solved block, for gap budgets.
    std::vector<int> last_time(kw);
    for (std::size_t i = 0; i < vw; ++i)
        last_time[warm->block_of_visit[i]] = warm->times[i];

    const int max_depth = 600;
    int depth_min = 16;
    while (true) {
        // Nearest gap at least depth_min blocks from the end that is slack or
        // vacuous at the solved optimum.
        int b0 = -1;
        double c0 = 2.0;
        for (int g = std::min(kw - 2, kw - 1 - depth_min); g >= 0; --g) {
            if (kw - 1 - g > max_depth) break;
            const double c =
                problem.bound.total(last_time[g], warm->block_time[g + 1]);
            if (c >= 1.0) {
                b0 = g + 1;
                c0 = c;
                break;
            }
            double diff = 0.0;
            for (int s = 0; s < n; ++s)
                diff = std::max(diff,
                                std::abs(warm->block_q[g + 1][s] - warm->block_q[g][s]));
            if (c - diff >= 1e-4) {
                b0 = g + 1;
                c0 = c;
                break;
            }
        }
        if (b0 <= 0) return out;

        const std::size_t first_visit =
            std::lower_bound(warm->block_of_visit.begin(), warm->block_of_visit.end(),
                             b0) -
            warm->block_of_visit.begin();

        CcmleProblem sub;
        sub.n = n;
        sub.bound = problem.bound;
        sub.horizon = problem.horizon;
        std::vector<int> sub_times(times.begin() + first_visit, times.end());
        std::vector<int> sub_successors(successors.begin() + first_visit,
                                        successors.end());
        sub.times = sub_times;
        sub.successors = sub_successors;

        CcmleSolution sub_warm;
        sub_warm.block_time.assign(warm->block_time.begin() + b0,
                                   warm->block_time.end());
        sub_warm.block_q.assign(warm->block_q.begin() + b0, warm->block_q.end());
        CcmleSolution sub_sol = solve_visits(sub, settings, &sub_warm,
                                             std::move(sub_times),
                                             std::move(sub_successors));

        if (sub_sol.block_time.empty() || sub_sol.block_time[0] != warm->block_time[b0])
            return out;
        if (c0 < 1.0) {
            double diff = 0.0;
            for (int s = 0; s < n; ++s)
                diff = std::max(diff, std::abs(sub_sol.block_q[0][s] -
                                               warm->block_q[b0 - 1][s]));
            if (diff > c0 - 1e-7) {
                // The cut constraint re-activated: the perturbation reaches
                // deeper. Retry with a cut at least twice as far back.
                depth_min = std::max(2 * depth_min, 2 * (kw - b0));
                if (depth_min > max_depth) return out;
                continue;
            }
        }

        out.times = times;
        out.successors = successors;
        out.block_time.assign(warm->block_time.begin(), warm->block_time.begin() + b0);
        out.block_time.insert(out.block_time.end(), sub_sol.block_time.begin(),
                              sub_sol.block_time.end());
        out.block_q.assign(warm->block_q.begin(), warm->block_q.begin() + b0);
        out.block_q.insert(out.block_q.end(),
                           std::make_move_iterator(sub_sol.block_q.begin()),
                           std::make_move_iterator(sub_sol.block_q.end()));
        out.block_of_visit.assign(warm->block_of_visit.begin(),
                                  warm->block_of_visit.begin() + first_visit);
        for (int b : sub_sol.block_of_visit) out.block_of_visit.push_back(b + b0);
        out.anchored.assign(warm->anchored.begin(), warm->anchored.begin() + first_visit);
        out.anchored.insert(out.anchored.end(), sub_sol.anchored.begin(),
                            sub_sol.anchored.end());

        // Objective over the kept prefix: the full solved objective minus the
        // replaced tail's contribution.
        double prefix_obj = warm->objective;
        for (std::size_t i = first_visit; i < vw; ++i)
            prefix_obj += std::log(warm->anchored[i]);
        out.objective = prefix_obj + sub_sol.objective;
        done = true;
        return out;
    }
}

}  // namespace

CcmleSolution ccmle_solve(const CcmleProblem& problem, const SolverSettings& settings,
                          const CcmleSolution* warm) {
    if (problem.n < 1) throw std::invalid_argument("problem dimension must be positive");
    if (!(settings.p_min > 0.0) || settings.p_min >= 1.0 / problem.n)
        throw std::invalid_argument("p_min must satisfy 0 < p_min < 1/n");
    if (!(settings.obj_tol > 0.0)) throw std::invalid_argument("obj_tol must be positive");

    auto [times, successors] = effective_visits(problem);
    if (times.empty()) throw NoVisits("no observations for pair within scope");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        assert(times[i] < times[i + 1]);

    if (problem.n > 1 && !problem.window) {
        bool done = false;
        CcmleSolution fast =
            solve_appended(problem, settings, warm, times, successors, done);
        if (done) return fast;
    }
    return solve_visits(problem, settings, warm, std::move(times), std::move(successors));
}

// ---------------------------------------------------------------------------

std::pair<std::vector<double>, double> oracle_grid_solve(const CcmleProblem& problem,
                                                         double resolution) {
    auto [times, successors] = effective_visits(problem);
    if (times.empty()) throw NoVisits("no observations for pair within scope");
    if (times.size() > 4 || problem.n > 3)
        throw InstanceTooLarge("oracle limited to <= 4 visits and n <= 3");

    const int d = std::max(1, static_cast<int>(std::lround(1.0 / resolution)));
    const int n = problem.n;

    // All compositions of d into n parts.
    std::vector<std::vector<int>> points;
    std::vector<int> current(n, 0);
    const std::function<void(int, int)> gen = [&](int coord, int left) {
        if (coord == n - 1) {
            current[coord] = left;
            points.push_back(current);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            current[coord] = v;
            gen(coord + 1, left - v);
        }
    };
    gen(0, d);

    const int v = static_cast<int>(times.size());
    const int p = static_cast<int>(points.size());
    const double inf = std::numeric_limits<double>::infinity();

    auto visit_cost = [&](int visit, int point) {
        const int cnt = points[point][successors[visit]];
        if (cnt == 0) return inf;
        return -std::log(static_cast<double>(cnt) / d);
    };

    std::vector<double> dp(p);
    std::vector<std::vector<int>> parent(v, std::vector<int>(p, -1));
    for (int j = 0; j < p; ++j) dp[j] = visit_cost(0, j);
    for (int i = 1; i < v; ++i) {
        const double budget = problem.bound.total(times[i - 1], times[i]) + 1e-12;
        const int max_step = static_cast<int>(std::floor(budget * d));
        std::vector<double> next(p, inf);
        for (int j = 0; j < p; ++j) {
            const double cost = visit_cost(i, j);
            if (cost == inf) continue;
            for (int prev = 0; prev < p; ++prev) {
                if (dp[prev] == inf) continue;
                bool ok = true;
                for (int s = 0; s < n; ++s)
                    if (std::abs(points[j][s] - points[prev][s]) > max_step) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                const double total = dp[prev] + cost;
                if (total < next[j]) {
                    next[j] = total;
                    parent[i][j] = prev;
                }
            }
        }
        dp = std::move(next);
    }

    int best = -1;
    double best_obj = inf;
    for (int j = 0; j < p; ++j)
        if (dp[j] < best_obj) {
            best_obj = dp[j];
            best = j;
        }
    if (best < 0) throw NonConvergence("oracle found no feasible grid chain");

    std::vector<int> path(v);
    path[v - 1] = best;
    for (int i = v - 1; i > 0; --i) path[i - 1] = parent[i][path[i]];
    std::vector<double> anchored(v);
    for (int i = 0; i < v; ++i)
        anchored[i] = static_cast<double>(points[path[i]][successors[i]]) / d;
    return {anchored, best_obj};
}

// ---------------------------------------------------------------------------

namespace {

// Canonical anchor-time distributions: solved values on coordinates observed
// in the block, remaining mass on the others proportional to their overall
// visit frequencies (uniform fallback).
std::vector<std::vector<double>> anchor_distributions(const CcmleSolution& solution,
                                                      const CcmleProblem& problem,
                                                      const Blocks& blocks) {
    const int n = problem.n;
    std::vector<double> overall(n, 0.0);
    for (int s : solution.successors) overall[s] += 1.0;

    std::vector<std::vector<double>> dists(blocks.k, std::vector<double>(n, 0.0));
    for (int b = 0; b < blocks.k; ++b) {
        double observed_mass = 0.0;
        double free_weight = 0.0;
        for (int s = 0; s < n; ++s) {
            if (blocks.counts[b][s] > 0.0) {
                dists[b][s] = solution.block_q[b][s];
                observed_mass += dists[b][s];
            } else {
                free_weight += overall[s];
            }
        }
        const double free_mass = std::max(0.0, 1.0 - observed_mass);
        int unobserved = 0;
        for (int s = 0; s < n; ++s)
            if (blocks.counts[b][s] == 0.0) ++unobserved;
        for (int s = 0; s < n; ++s) {
            if (blocks.counts[b][s] > 0.0) continue;
            if (free_weight > 0.0)
                dists[b][s] = free_mass * overall[s] / free_weight;
            else if (unobserved > 0)
                dists[b][s] = free_mass / unobserved;
        }
    }

    for (int b = 0; b + 1 < blocks.k; ++b)
        for (int s = 0; s < n; ++s)
            if (std::abs(dists[b + 1][s] - dists[b][s]) > blocks.gap[b] + 1e-12)
                return solution.block_q;  // feasible by construction
    return dists;
}

}  // namespace

std::vector<std::vector<double>> ccmle_complete(const CcmleSolution& solution,
                                                const CcmleProblem& problem,
                                                const std::vector<int>& query_times) {
    const int n = problem.n;
    std::vector<std::vector<double>> result;
    result.reserve(query_times.size());
    if (solution.times.empty()) {
        result.assign(query_times.size(), std::vector<double>(n, 1.0 / n));
        return result;
    }

    Blocks blocks = build_blocks(problem, solution.times, solution.successors);
    const auto dists = anchor_distributions(solution, problem, blocks);

    for (int t : query_times) {
        // Find the last block starting at or before t.
        const auto it = std::upper_bound(blocks.first_time.begin(), blocks.first_time.end(), t);
        if (it == blocks.first_time.begin()) {
            result.push_back(dists.front());
            continue;
        }
        const int b = static_cast<int>(it - blocks.first_time.begin()) - 1;
        if (b == blocks.k - 1 || t <= blocks.last_time[b]) {
            result.push_back(dists[b]);
            continue;
        }
        const double whole = problem.bound.total(blocks.last_time[b], blocks.first_time[b + 1]);
        const double part = problem.bound.total(blocks.last_time[b], t);
        const double w = whole > 0.0 ? std::min(1.0, part / whole) : 1.0;
        std::vector<double> row(n);
        for (int s = 0; s < n; ++s)
            row[s] = (1.0 - w) * dists[b][s] + w * dists[b + 1][s];
        result.push_back(std::move(row));
    }
    return result;
}

std::vector<double> ccmle_complete_at(const CcmleSolution& solution,
                                      const CcmleProblem& problem, int t) {
    return ccmle_complete(solution, problem, {t}).front();
}

}  // namespace tvmdp
