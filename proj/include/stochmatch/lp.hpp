#pragma once

// The matching LP with the second-moment cap: maximize sum w_ij x_ij subject to
//   sum_j x_ij <= lambda_i,   sum_i x_ij <= 1,
//   sum_i max{2 x_ij - lambda_i, 0} <= 1 - ln 2   (per offline j),
// linearized with one auxiliary z_ij per edge (z >= 2x - lambda, z >= 0).
// Solved with a dense primal simplex using Bland's rule: instances here are
// desk-scale, and Bland makes the solve deterministic and cycle-free.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "instance.hpp"

namespace stochmatch {

struct LpRow {
    enum class Family { XRate, XOffline, ZLink, ZNonneg, ZCap };
    Family family;
    std::string label;
    // Sparse row of the <=-constraint over structural variables; ZNonneg rows
    // are descriptors only (handled as variable bounds by the solver).
    std::vector<std::pair<int, double>> coefs;
    double rhs = 0.0;
};

struct JlLinearProgram {
    std::vector<Edge> edges;      // variable order: x_e = e, z_e = |E| + e
    std::vector<double> lambda;   // rate of edge e's online type
    std::vector<double> objective;
    std::vector<LpRow> rows;

    int num_x() const { return static_cast<int>(edges.size()); }
    int num_z() const { return static_cast<int>(edges.size()); }
    int num_vars() const { return 2 * num_x(); }
    int num_rows() const { return static_cast<int>(rows.size()); }
};

inline JlLinearProgram build_jl_lp(const Instance& inst) {
    auto v = validate_instance(inst);
    if (!v.ok())
        throw std::invalid_argument("invalid instance: " + v.problems.front());

    JlLinearProgram lp;
    lp.edges = inst.edges;
    const int ne = lp.num_x();
    lp.lambda.resize(ne);
    lp.objective.assign(2 * ne, 0.0);
    for (int e = 0; e < ne; ++e) {
        lp.lambda[e] = inst.online[inst.online_index(lp.edges[e].i)].rate;
        lp.objective[e] = lp.edges[e].w;
    }

    for (const auto& t : inst.online) {
        LpRow row{LpRow::Family::XRate, "rate:" + t.id, {}, t.rate};
        for (int e = 0; e < ne; ++e)
            if (lp.edges[e].i == t.id) row.coefs.emplace_back(e, 1.0);
        lp.rows.push_back(std::move(row));
    }
    for (const auto& j : inst.offline) {
        LpRow row{LpRow::Family::XOffline, "offline:" + j, {}, 1.0};
        for (int e = 0; e < ne; ++e)
            if (lp.edges[e].j == j) row.coefs.emplace_back(e, 1.0);
        lp.rows.push_back(std::move(row));
    }
    for (int e = 0; e < ne; ++e) {
        // 2 x_e - z_e <= lambda_e
        lp.rows.push_back({LpRow::Family::ZLink,
                           "zlink:" + lp.edges[e].i + ":" + lp.edges[e].j,
                           {{e, 2.0}, {ne + e, -1.0}},
                           lp.lambda[e]});
    }
    for (int e = 0; e < ne; ++e) {
        lp.rows.push_back({LpRow::Family::ZNonneg,
                           "znonneg:" + lp.edges[e].i + ":" + lp.edges[e].j,
                           {{ne + e, 1.0}},
                           0.0});
    }
    for (const auto& j : inst.offline) {
        LpRow row{LpRow::Family::ZCap, "zcap:" + j, {}, 1.0 - std::log(2.0)};
        for (int e = 0; e < ne; ++e)
            if (lp.edges[e].j == j) row.coefs.emplace_back(ne + e, 1.0);
        lp.rows.push_back(std::move(row));
    }
    return lp;
}

struct LpSolution {
    FractionalSolution x;
    std::vector<double> vars;  // x then z, in edge order
    double objective = 0.0;
    int iterations = 0;
};

// Primal simplex on the slack-augmented tableau. All right-hand sides are
// nonnegative (rates, 1, 1 - ln 2), so the slack basis is feasible and no
// phase-1 is needed. Bland's rule: entering = lowest-index variable with a
// positive reduced cost, leaving = lowest-index among ratio-test ties.
inline LpSolution solve_jl_lp(const JlLinearProgram& lp, double tol = 1e-7) {
    const int n = lp.num_vars();
    std::vector<const LpRow*> active;
    for (const auto& r : lp.rows)
        if (r.family != LpRow::Family::ZNonneg) active.push_back(&r);
    const int m = static_cast<int>(active.size());

    // tableau: m constraint rows + 1 objective row; columns: n structural,
    // m slacks, rhs.
    const int cols = n + m + 1;
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(cols, 0.0));
    for (int r = 0; r < m; ++r) {
        for (const auto& [c, a] : active[r]->coefs) T[r][c] = a;
        T[r][n + r] = 1.0;
        T[r][cols - 1] = active[r]->rhs;
        if (active[r]->rhs < 0.0)
            throw std::logic_error("negative rhs; slack basis infeasible");
    }
    for (int c = 0; c < n; ++c) T[m][c] = lp.objective[c];  // maximize

    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) basis[r] = n + r;

    const double piv_tol = 1e-11;
    int iter = 0;
    const int max_iter = 200000;
    while (iter < max_iter) {
        int enter = -1;
        for (int c = 0; c < n + m; ++c) {
            if (T[m][c] > piv_tol) {
                enter = c;
                break;
            }
        }
        if (enter < 0) break;  // optimal

        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
            if (T[r][enter] > piv_tol) {
                const double ratio = T[r][cols - 1] / T[r][enter];
                if (ratio < best_ratio - piv_tol ||
                    (ratio < best_ratio + piv_tol &&
                     (leave < 0 || basis[r] < basis[leave]))) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
        }
        if (leave < 0)
            throw std::logic_error("LP unbounded; the x <= 1 rows forbid this");

        const double p = T[leave][enter];
        for (int c = 0; c < cols; ++c) T[leave][c] /= p;
        for (int r = 0; r <= m; ++r) {
            if (r == leave) continue;
            const double factor = T[r][enter];
            if (factor == 0.0) continue;
            for (int c = 0; c < cols; ++c) T[r][c] -= factor * T[leave][c];
        }
        basis[leave] = enter;
        ++iter;
    }
    if (iter >= max_iter) throw std::logic_error("simplex iteration cap exceeded");

    LpSolution sol;
    sol.vars.assign(n, 0.0);
    for (int r = 0; r < m; ++r)
        if (basis[r] < n) sol.vars[basis[r]] = T[r][cols - 1];
    sol.objective = 0.0;
    for (int c = 0; c < n; ++c) sol.objective += lp.objective[c] * sol.vars[c];
    sol.iterations = iter;
    for (int e = 0; e < lp.num_x(); ++e)
        sol.x.x[{lp.edges[e].i, lp.edges[e].j}] = sol.vars[e];

    // Defensive post-check: the returned point satisfies every row within tol.
    for (const auto& r : lp.rows) {
        double lhs = 0.0;
        for (const auto& [c, a] : r.coefs) lhs += a * sol.vars[c];
        const double resid = r.family == LpRow::Family::ZNonneg ? -lhs : lhs - r.rhs;
        if (resid > tol)
            throw std::logic_error("solver residual exceeds tolerance on row " + r.label);
    }
    for (double v : sol.vars)
        if (v < -tol) throw std::logic_error("negative variable in solver output");
    return sol;
}

struct FeasibilityReport {
    double max_x_negative = 0.0;   // max over edges of (-x_ij)+
    double max_rate = 0.0;         // max over i of (sum_j x - lambda_i)+
    double max_offline = 0.0;      // max over j of (sum_i x - 1)+
    double max_zcap = 0.0;         // max over j of (sum_i max{2x - lambda, 0} - (1 - ln 2))+
    bool ok = false;
    double worst() const {
        return std::max(std::max(max_x_negative, max_rate), std::max(max_offline, max_zcap));
    }
};

inline FeasibilityReport check_feasibility(const Instance& inst, const FractionalSolution& x,
                                           double tol = 1e-7) {
    for (const auto& e : inst.edges)
        if (!x.x.count({e.i, e.j}))
            throw std::invalid_argument("solution missing variable for edge " + e.i + " -> " +
                                        e.j);
    FeasibilityReport rep;
    for (const auto& e : inst.edges)
        rep.max_x_negative = std::max(rep.max_x_negative, -x.at(e.i, e.j));
    for (const auto& t : inst.online) {
        double s = 0.0;
        for (const auto& n : t.neighbors) s += x.at(t.id, n);
        rep.max_rate = std::max(rep.max_rate, s - t.rate);
    }
    for (const auto& j : inst.offline) {
        double s = 0.0, zs = 0.0;
        for (const auto& t : inst.online)
            for (const auto& n : t.neighbors)
                if (n == j) {
                    const double xe = x.at(t.id, j);
                    s += xe;
                    zs += std::max(2.0 * xe - t.rate, 0.0);
                }
        rep.max_offline = std::max(rep.max_offline, s - 1.0);
        rep.max_zcap = std::max(rep.max_zcap, zs - (1.0 - std::log(2.0)));
    }
    rep.max_x_negative = std::max(rep.max_x_negative, 0.0);
    rep.max_rate = std::max(rep.max_rate, 0.0);
    rep.max_offline = std::max(rep.max_offline, 0.0);
    rep.max_zcap = std::max(rep.max_zcap, 0.0);
    rep.ok = rep.worst() <= tol;
    return rep;
}

}  // namespace stochmatch
