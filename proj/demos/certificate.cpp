// Builds the shipped activation function in code and walks through the full
// analytic certificate: the two ratio integrals at the worst-case first-class
// rate, the feasibility constraints, and the grid spot check that the minimum
// really sits at y*. Exits nonzero if the certificate fails.

#include <cstdio>

#include "stochmatch/stochmatch.hpp"

using namespace stochmatch;

int main() {
    // Step levels on a 40-interval grid: 0 until 0.05, 0.4 until 0.075,
    // 1 until 0.675, 1.2 until 0.7, then 2.
    std::vector<double> v(40, 1.0);
    v[0] = v[1] = 0.0;
    v[2] = 0.4;
    v[27] = 1.2;
    for (int i = 28; i < 40; ++i) v[i] = 2.0;
    const PiecewiseConstantF f(v);

    std::printf("activation function (m = %d)\n", f.m());
    std::printf("  %-18s %s\n", "interval", "f");
    double level = f.values()[0];
    double lo = 0.0;
    for (int i = 1; i <= f.m(); ++i) {
        if (i == f.m() || f.values()[i] != level) {
            std::printf("  (%.3f, %.3f]     %.2f\n", lo, static_cast<double>(i) / f.m(), level);
            lo = static_cast<double>(i) / f.m();
            if (i < f.m()) level = f.values()[i];
        }
    }
    std::printf("  F(1) = %.17g, t* = %.17g, F(t*) = %.17g\n\n", f.F(1.0), f.tstar(),
                f.F_tstar());

    const auto rep = check_all(f);
    std::printf("certificate at y* = 1 - ln 2 = %.17g\n", rep.ystar_value);
    std::printf("  r1(y*)              = %.17g\n", rep.r1_ystar);
    std::printf("  r2(y*)              = %.17g\n", rep.r2_ystar);
    std::printf("  min ratio           = %.17g\n", rep.min_ratio);
    std::printf("  cons1               = %.17g  (must be <= 0)\n", rep.cons1);
    std::printf("  cons2               = %.17g  (must be <= 0)\n", rep.cons2);
    std::printf("  cons1, conservative = %.17g\n", rep.cons1_conservative);
    std::printf("  cons2, conservative = %.17g\n", rep.cons2_conservative);
    std::printf("  64-point y-grid min = %.17g  (attained at y*: %s)\n", rep.grid_min,
                rep.grid_min_at_ystar ? "yes" : "no");
    std::printf("  certified           = %s\n", rep.certified ? "yes" : "no");

    std::printf("\nratio curve in the first-class rate y\n");
    std::printf("  %-8s %-22s %s\n", "y", "r1", "r2");
    for (const auto& pt : y_grid(f, 9))
        std::printf("  %-8.4f %-22.17g %.17g\n", pt.y, pt.r1, pt.r2);

    return rep.certified && rep.min_ratio >= 0.6503 ? 0 : 1;
}
