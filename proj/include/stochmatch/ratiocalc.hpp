#pragma once

// Analytic evaluation of the certificate quantities for a piecewise-constant
// activation function: the edge-probability lower bounds r1(y), r2(y), the two
// derivative constraints cons1/cons2 that pin their minimum over y at
// y* = 1 - ln 2, and the assembled RatioReport.
//
// Every integrand restricted to one discretization interval is (a + b t)e^{c + d t},
// so all integrals are evaluated in closed form; a secondary "conservative"
// evaluator bounds the affine prefactor by its worst interval endpoint and
// integrates only the exponential, mirroring the coarser discretization bound.

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "activation.hpp"
#include "instance.hpp"

namespace stochmatch {

namespace detail {

// E0(x) = (e^x - 1)/x and E1(x) = (x e^x - (e^x - 1))/x^2, stable near 0.
inline double E0(double x) {
    if (std::abs(x) < 1e-8) return 1.0 + x / 2.0 + x * x / 6.0;
    return std::expm1(x) / x;
}

inline double E1(double x) {
    if (std::abs(x) < 1e-4) return 0.5 + x / 3.0 + x * x / 8.0 + x * x * x / 30.0;
    return (x * std::exp(x) - std::expm1(x)) / (x * x);
}

// Exact integral of (a + b t) e^{c + d t} over [lo, hi].
inline double int_affine_exp(double a, double b, double c, double d, double lo, double hi) {
    const double len = hi - lo;
    const double x = d * len;
    const double e = std::exp(c + d * lo);
    return e * ((a + b * lo) * len * E0(x) + b * len * len * E1(x));
}

inline double int_exp(double c, double d, double lo, double hi) {
    return int_affine_exp(1.0, 0.0, c, d, lo, hi);
}

// Affine coefficients of the exponent's integral term on interval i:
// G(t) = aG + bG t equals F(t) for i < k* and z(t) for i >= k*.
struct IntervalG {
    double a, b;
};

inline IntervalG interval_G(const PiecewiseConstantF& f, int i) {
    const int m = f.m();
    const double lo = static_cast<double>(i) / m;
    const double fi = f.values()[i];
    const double aF = f.F_at_grid(i) - fi * lo;
    if (i < f.kstar()) return {aF, fi};
    const double beta = f.beta();
    return {beta * f.F_tstar() + (1.0 - beta) * aF - beta * f.tstar(),
            (1.0 - beta) * fi + beta};
}

}  // namespace detail

inline void require_y(double y) {
    if (!(y >= 0.0 && y <= 1.0)) throw std::domain_error("y outside [0,1]");
}

// z(t) as a free function (delegates to the activation object).
inline double z_of(const PiecewiseConstantF& f, double t) { return f.z(t); }

struct RPair {
    double r1, r2;
};

// r1(y) = int_0^{t*} e^{-y t - (1-y)F} + int_{t*}^1 e^{-y t - (1-y)z};
// r2(y) adds the factor f(t) and subtracts the correlated-competitor term
// (f(t)-1) e^{-y t* - (2-y)F(t*) - 2(t-t*)} on [t*, 1].
inline RPair r_pair(const PiecewiseConstantF& f, double y) {
    require_y(y);
    const int m = f.m();
    const double tstar = f.tstar();
    const double Fts = f.F_tstar();
    const double ctail = -y * tstar - (2.0 - y) * Fts + 2.0 * tstar;
    double r1 = 0.0, r2 = 0.0;
    for (int i = 0; i < m; ++i) {
        const double lo = static_cast<double>(i) / m;
        const double hi = static_cast<double>(i + 1) / m;
        const double fi = f.values()[i];
        const auto G = detail::interval_G(f, i);
        const double c = -(1.0 - y) * G.a;
        const double d = -y - (1.0 - y) * G.b;
        assert(c + d * lo >= -4.0000001 && c + d * lo <= 1e-9);
        const double I0 = detail::int_exp(c, d, lo, hi);
        r1 += I0;
        r2 += fi * I0;
        if (i >= f.kstar())
            r2 -= (fi - 1.0) * detail::int_exp(ctail, -2.0, lo, hi);
    }
    return {r1, r2};
}

inline double r1(const PiecewiseConstantF& f, double y) { return r_pair(f, y).r1; }
inline double r2(const PiecewiseConstantF& f, double y) { return r_pair(f, y).r2; }

struct ConsPair {
    double cons1, cons2;
};

// Left-hand sides of the two derivative constraints, evaluated at y*:
// cons1 = int (G(t) - t) e^{-y* t - (1-y*)G(t)} over [0,1] with G = F then z;
// cons2 adds the factor f(t) and the positive correction
// (f(t)-1)(t* - F(t*)) e^{-2F(t*) - 2(t-t*)} on [t*, 1].
// Non-positive values certify that r1/r2 attain their minimum over [0, y*] at y*.
// `conservative` bounds each affine prefactor by its worst interval endpoint
// (an upper bound on the integral) instead of integrating it exactly.
inline ConsPair cons_pair(const PiecewiseConstantF& f, bool conservative = false) {
    const int m = f.m();
    const double ys = ystar();
    const double tstar = f.tstar();
    const double Fts = f.F_tstar();
    const double ctail = -2.0 * Fts + 2.0 * tstar;
    double cons1 = 0.0, cons2 = 0.0;
    for (int i = 0; i < m; ++i) {
        const double lo = static_cast<double>(i) / m;
        const double hi = static_cast<double>(i + 1) / m;
        const double fi = f.values()[i];
        const auto G = detail::interval_G(f, i);
        const double c = -(1.0 - ys) * G.a;
        const double d = -ys - (1.0 - ys) * G.b;
        // Prefactor G(t) - t is affine with slope G.b - 1.
        double I1;
        if (conservative) {
            const double t_at = G.b - 1.0 <= 0.0 ? lo : hi;
            I1 = (G.a + (G.b - 1.0) * t_at) * detail::int_exp(c, d, lo, hi);
        } else {
            I1 = detail::int_affine_exp(G.a, G.b - 1.0, c, d, lo, hi);
        }
        cons1 += I1;
        cons2 += fi * I1;
        if (i >= f.kstar())
            cons2 += (fi - 1.0) * (tstar - Fts) * detail::int_exp(ctail, -2.0, lo, hi);
    }
    return {cons1, cons2};
}

inline double cons1(const PiecewiseConstantF& f) { return cons_pair(f).cons1; }
inline double cons2(const PiecewiseConstantF& f) { return cons_pair(f).cons2; }

struct YGridPoint {
    double y, r1, r2;
};

inline std::vector<YGridPoint> y_grid(const PiecewiseConstantF& f, int n) {
    if (n < 2) throw std::invalid_argument("y grid needs at least 2 points");
    std::vector<YGridPoint> out;
    out.reserve(n);
    const double ys = ystar();
    for (int g = 0; g < n; ++g) {
        const double y = ys * g / (n - 1);
        const auto rp = r_pair(f, y);
        out.push_back({y, rp.r1, rp.r2});
    }
    return out;
}

struct RatioReport {
    double r1_ystar = 0.0, r2_ystar = 0.0, min_ratio = 0.0;
    double cons1 = 0.0, cons2 = 0.0;
    double cons1_conservative = 0.0, cons2_conservative = 0.0;
    double F1 = 0.0;
    double ystar_value = 0.0;
    double grid_min = 0.0;
    bool flag_monotone = false;
    bool flag_F1 = false;            // F(1) >= 1
    bool flag_cons1 = false;         // cons1 <= 0
    bool flag_cons2 = false;         // cons2 <= 0
    bool grid_min_at_ystar = false;  // 64-point spot check of the convexity conclusion
    bool certified = false;
    double certified_ratio = 0.0;    // min_ratio when certified, else 0
};

// Feasibility flags use a small epsilon: cons1 is exactly 0 in real arithmetic
// for f == 1, and prefix-sum roundoff of either sign must not flip the flag.
inline RatioReport check_all(const PiecewiseConstantF& f, double eps = 1e-12,
                             int grid_points = 64) {
    RatioReport rep;
    rep.ystar_value = ystar();
    const auto rp = r_pair(f, rep.ystar_value);
    rep.r1_ystar = rp.r1;
    rep.r2_ystar = rp.r2;
    rep.min_ratio = std::min(rp.r1, rp.r2);
    const auto cp = cons_pair(f, false);
    rep.cons1 = cp.cons1;
    rep.cons2 = cp.cons2;
    const auto cc = cons_pair(f, true);
    rep.cons1_conservative = cc.cons1;
    rep.cons2_conservative = cc.cons2;
    rep.F1 = f.F1();
    rep.flag_monotone = true;  // enforced by the PiecewiseConstantF invariant
    rep.flag_F1 = rep.F1 >= 1.0 - eps;
    rep.flag_cons1 = rep.cons1 <= eps;
    rep.flag_cons2 = rep.cons2 <= eps;

    double gmin = rep.min_ratio;
    for (const auto& p : y_grid(f, grid_points))
        gmin = std::min(gmin, std::min(p.r1, p.r2));
    rep.grid_min = gmin;
    rep.grid_min_at_ystar = gmin >= rep.min_ratio - 1e-9;

    rep.certified = rep.flag_monotone && rep.flag_F1 && rep.flag_cons1 && rep.flag_cons2 &&
                    rep.grid_min_at_ystar;
    rep.certified_ratio = rep.certified ? rep.min_ratio : 0.0;
    return rep;
}

}  // namespace stochmatch
