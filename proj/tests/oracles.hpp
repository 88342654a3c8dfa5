// Test-only reference computations, kept independent of the library paths
// they check: quadrature instead of closed forms, finite differences instead
// of solved systems, exhaustive loops instead of matrix contractions.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>

#include "pta/data.hpp"
#include "pta/spline.hpp"

namespace oracle {

// Composite Simpson over [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

// Roughness matrix by Simpson quadrature of basis second derivatives.
inline Eigen::MatrixXd roughness_by_simpson(const pta::TimeGrid& grid, int panels = 10000) {
    const int n = grid.size() + 2;
    Eigen::MatrixXd omega(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double value = simpson(
                [&](double x) {
                    const Eigen::VectorXd d2 = pta::basis_row(grid, x, 2);
                    return d2(i) * d2(j);
                },
                grid.front(), grid.back(), panels);
            omega(i, j) = value;
            omega(j, i) = value;
        }
    }
    return omega;
}

// Central second difference of basis values; independent of the derivative
// recursion inside basis_row.
inline Eigen::VectorXd second_derivative_fd(const pta::TimeGrid& grid, double x, double h) {
    const Eigen::VectorXd lo = pta::basis_row(grid, x - h, 0);
    const Eigen::VectorXd mid = pta::basis_row(grid, x, 0);
    const Eigen::VectorXd hi = pta::basis_row(grid, x + h, 0);
    return (lo - 2.0 * mid + hi) / (h * h);
}

// Masked SSE the slow way.
inline double triple_loop_sse(const pta::LongitudinalData& data, const Eigen::MatrixXd& rec) {
    double total = 0.0;
    for (int n = 0; n < data.n_subjects(); ++n) {
        for (int p = 0; p < data.n_features(); ++p) {
            for (int t = 0; t < data.n_times(); ++t) {
                if (!data.observed[n](p, t)) continue;
                const double r = data.values[n](p, t) - rec(p, t);
                total += r * r;
            }
        }
    }
    return total;
}

// Central-difference gradient of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + step;
        const double up = f(probe);
        probe(i) = x(i) - step;
        const double down = f(probe);
        probe(i) = x(i);
        grad(i) = (up - down) / (2.0 * step);
    }
    return grad;
}

// Gradient descent with backtracking to stationarity; for checking that a
// solved linear system really minimizes the quadratic it came from.
inline Eigen::VectorXd fd_gradient_descent(const std::function<double(const Eigen::VectorXd&)>& f,
                                           Eigen::VectorXd x, int max_iter = 20000,
                                           double grad_tol = 1e-9) {
    const double fd_step = 1e-6 * std::max(1.0, x.norm());
    double value = f(x);
    double step = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad = oracle::fd_gradient(f, x, fd_step);
        if (grad.norm() <= grad_tol * std::max(1.0, std::abs(value))) break;
        step *= 4.0;
        for (;;) {
            const Eigen::VectorXd candidate = x - step * grad;
            const double next = f(candidate);
            if (next < value - 0.25 * step * grad.squaredNorm()) {
                x = candidate;
                value = next;
                break;
            }
            step *= 0.5;
            if (step < 1e-18) return x;
        }
    }
    return x;
}

// max of g'a - penalty * |a|_1 over the unit ball, by projected subgradient
// ascent with averaging; returns the best objective found.
inline double subgradient_score_objective(const Eigen::VectorXd& g, double penalty,
                                          int iters = 20000) {
    Eigen::VectorXd a = g.norm() > 0 ? Eigen::VectorXd(g / g.norm())
                                     : Eigen::VectorXd::Zero(g.size());
    auto value = [&](const Eigen::VectorXd& v) { return g.dot(v) - penalty * v.lpNorm<1>(); };
    double best = value(a);
    for (int it = 1; it <= iters; ++it) {
        Eigen::VectorXd sub = g;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            sub(i) -= penalty * (a(i) > 0 ? 1.0 : (a(i) < 0 ? -1.0 : 0.0));
        }
        a += (0.5 / std::sqrt(static_cast<double>(it))) * sub;
        const double norm = a.norm();
        if (norm > 1.0) a /= norm;
        best = std::max(best, value(a));
    }
    return best;
}

// Largest singular value via the eigendecomposition of Y'Y.
inline double leading_singular_by_eig(const Eigen::MatrixXd& y) {
    const Eigen::MatrixXd gram = y.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    return std::sqrt(eig.eigenvalues().maxCoeff());
}

inline double lag_correlation(const Eigen::VectorXd& x, int lag) {
    const int n = static_cast<int>(x.size()) - lag;
    const double mean = x.mean();
    double cov = 0.0, var = 0.0;
    for (int i = 0; i < n; ++i) cov += (x(i) - mean) * (x(i + lag) - mean);
    for (Eigen::Index i = 0; i < x.size(); ++i) var += (x(i) - mean) * (x(i) - mean);
    return cov / var * x.size() / n;
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    return ac.dot(bc) / (ac.norm() * bc.norm());
}

}  // namespace oracle
