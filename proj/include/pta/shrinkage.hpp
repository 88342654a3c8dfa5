#pragma once

#include <Eigen/Dense>

namespace pta {

// sgn(x) * (|x| - c)_+, the proximal map of the L1 penalty.
inline double soft_threshold(double x, double c) {
    const double shrunk = std::abs(x) - c;
    if (shrunk <= 0.0) return 0.0;
    return x > 0.0 ? shrunk : -shrunk;
}

template <typename Derived>
Eigen::VectorXd soft_threshold(const Eigen::MatrixBase<Derived>& x, double c) {
    return x.array().sign() * (x.array().abs() - c).max(0.0);
}

struct L1BoundedResult {
    Eigen::VectorXd unit;   // empty when the input is all zero
    double threshold = 0.0; // soft threshold that met the bound (0 when inactive)
};

// Solves max g'a - threshold*|a|_1 over |a|_2 <= 1 with the threshold chosen
// by bisection so that the normalized result satisfies |a|_1 <= bound, with
// equality when the unconstrained solution violates it. The L1 norm of the
// normalized soft-thresholded vector is nonincreasing in the threshold, so
// bisection converges; 50 steps reach the 1e-6 tolerance on |a|_1.
L1BoundedResult l1_bounded_unit(const Eigen::VectorXd& g, double bound);

}  // namespace pta
