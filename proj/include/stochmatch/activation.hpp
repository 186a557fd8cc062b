#pragma once

// Discretized activation functions: non-decreasing piecewise-constant
// f: [0,1] -> [0,2] on m equal intervals, with the derived quantities the
// analysis needs (cumulative integral F, threshold t*, adjusted integral z).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochmatch {

class PiecewiseConstantF {
  public:
    // values[i] is f on ((i)/m, (i+1)/m]; f(0) uses values[0].
    explicit PiecewiseConstantF(std::vector<double> values) : v_(std::move(values)) {
        if (v_.empty())
            throw std::invalid_argument("activation function needs at least one interval");
        for (size_t i = 0; i < v_.size(); ++i) {
            if (!(v_[i] >= 0.0 && v_[i] <= 2.0))
                throw std::invalid_argument("activation value out of [0,2] at interval " +
                                            std::to_string(i));
            if (i > 0 && v_[i] < v_[i - 1])
                throw std::invalid_argument("activation function must be non-decreasing");
        }
        const int m = static_cast<int>(v_.size());
        Fpre_.assign(m + 1, 0.0);
        for (int i = 0; i < m; ++i) Fpre_[i + 1] = Fpre_[i] + v_[i] / m;
        kstar_ = 0;
        for (int i = 0; i < m; ++i)
            if (v_[i] <= 1.0) kstar_ = i + 1;
        beta_ = std::exp(-Fpre_[m]);
    }

    int m() const { return static_cast<int>(v_.size()); }
    const std::vector<double>& values() const { return v_; }

    // Interval index for time t: intervals are right-closed, t = 0 maps to the first.
    int interval(double t) const {
        if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("t outside [0,1]");
        int i = static_cast<int>(std::ceil(t * m())) - 1;
        return i < 0 ? 0 : i;
    }

    double operator()(double t) const { return v_[interval(t)]; }

    // Cumulative integral F(t) = int_0^t f; piecewise affine, F(0) = 0.
    double F(double t) const {
        int i = interval(t);
        return Fpre_[i] + v_[i] * (t - static_cast<double>(i) / m());
    }

    double F1() const { return Fpre_.back(); }
    double F_at_grid(int i) const { return Fpre_[i]; }  // F(i/m)

    // k* = max{i : f_i <= 1} (0 if f > 1 everywhere), t* = k*/m.
    int kstar() const { return kstar_; }
    double tstar() const { return static_cast<double>(kstar_) / m(); }
    double F_tstar() const { return Fpre_[kstar_]; }
    double beta() const { return beta_; }  // e^{-F(1)}

    // z(t) = e^{-F(1)} F(t*) + (1 - e^{-F(1)}) F(t) + e^{-F(1)} (t - t*), t in [t*, 1].
    double z(double t) const {
        if (t < tstar() - 1e-15)
            throw std::domain_error("z(t) defined only for t >= t*");
        return beta_ * F_tstar() + (1.0 - beta_) * F(t) + beta_ * (t - tstar());
    }

  private:
    std::vector<double> v_;
    std::vector<double> Fpre_;
    int kstar_ = 0;
    double beta_ = 1.0;
};

inline PiecewiseConstantF flat_f(int m, double level) {
    return PiecewiseConstantF(std::vector<double>(m, level));
}

// The three-stage step function recovering the staged baseline as a special
// case: 0 until 0.05, 1 until 0.75, 2 afterwards (m = 20).
inline PiecewiseConstantF msm_f() {
    std::vector<double> v(20, 1.0);
    v[0] = 0.0;
    for (int i = 15; i < 20; ++i) v[i] = 2.0;
    return PiecewiseConstantF(std::move(v));
}

}  // namespace stochmatch
