#include "pta/spline.hpp"

#include <cmath>
#include <vector>

#include "pta/errors.hpp"

namespace pta {

namespace {

constexpr int kOrder = 4;  // cubic

// Clamped knot vector: four copies of each boundary point, interior grid
// points once. Gives knots.size() - 4 = T + 2 cubic basis functions.
std::vector<double> clamped_knots(const TimeGrid& grid) {
    const int T = grid.size();
    std::vector<double> knots;
    knots.reserve(T + 6);
    for (int i = 0; i < kOrder; ++i) knots.push_back(grid.points(0));
    for (int i = 1; i < T - 1; ++i) knots.push_back(grid.points(i));
    for (int i = 0; i < kOrder; ++i) knots.push_back(grid.points(T - 1));
    return knots;
}

// Values of all basis functions of the given order at x. Cox-de Boor with
// the 0/0 -> 0 convention at repeated knots; x equal to the right boundary
// is assigned to the last nonempty interval so the basis sums to one there.
Eigen::VectorXd all_values(const std::vector<double>& knots, int order, double x) {
    const int n_knots = static_cast<int>(knots.size());
    const double right = knots[n_knots - 1];

    Eigen::VectorXd vals = Eigen::VectorXd::Zero(n_knots - 1);
    for (int i = 0; i + 1 < n_knots; ++i) {
        const bool inside = knots[i] <= x && x < knots[i + 1];
        const bool at_right_end = x == right && knots[i] < knots[i + 1] && knots[i + 1] == right;
        vals(i) = (inside || at_right_end) ? 1.0 : 0.0;
    }
    for (int k = 2; k <= order; ++k) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n_knots - k);
        for (int i = 0; i + k < n_knots; ++i) {
            double acc = 0.0;
            const double d1 = knots[i + k - 1] - knots[i];
            if (d1 > 0.0) acc += (x - knots[i]) / d1 * vals(i);
            const double d2 = knots[i + k] - knots[i + 1];
            if (d2 > 0.0) acc += (knots[i + k] - x) / d2 * vals(i + 1);
            next(i) = acc;
        }
        vals = std::move(next);
    }
    return vals;
}

// Derivative of order `deriv` of all order-`order` basis functions at x,
// from the recursion D B_{i,k} = (k-1) (B_{i,k-1}/gap_i - B_{i+1,k-1}/gap_{i+1}).
Eigen::VectorXd all_derivs(const std::vector<double>& knots, int order, int deriv, double x) {
    if (deriv == 0) return all_values(knots, order, x);
    Eigen::VectorXd lower = all_derivs(knots, order - 1, deriv - 1, x);
    const int n = static_cast<int>(knots.size()) - order;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        const double d1 = knots[i + order - 1] - knots[i];
        if (d1 > 0.0) acc += lower(i) / d1;
        const double d2 = knots[i + order] - knots[i + 1];
        if (d2 > 0.0) acc -= lower(i + 1) / d2;
        out(i) = (order - 1) * acc;
    }
    return out;
}

}  // namespace

Eigen::VectorXd basis_row(const TimeGrid& grid, double x, int deriv) {
    if (deriv < 0 || deriv > 3) {
        throw ValidationError("basis_row supports derivative orders 0..3");
    }
    if (x < grid.front() || x > grid.back()) {
        throw ValidationError("evaluation point outside the time grid");
    }
    return all_derivs(clamped_knots(grid), kOrder, deriv, x);
}

SplineSystem build_basis(const TimeGrid& grid) {
    const int T = grid.size();
    if (T < 4) {
        throw ValidationError("cubic basis needs at least 4 time points, got " +
                              std::to_string(T));
    }
    const int n = T + 2;
    const std::vector<double> knots = clamped_knots(grid);

    Eigen::MatrixXd basis(T, n);
    for (int i = 0; i < T; ++i) {
        basis.row(i) = all_derivs(knots, kOrder, 0, grid.points(i)).transpose();
    }

    // Second derivatives are piecewise linear, so their pairwise products are
    // quadratic per knot interval and two-point Gauss-Legendre is exact.
    Eigen::MatrixXd roughness = Eigen::MatrixXd::Zero(n, n);
    const double gauss_offset = 0.5 / std::sqrt(3.0);
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
        const double a = knots[j];
        const double b = knots[j + 1];
        if (!(b > a)) continue;
        const double h = b - a;
        const double mid = 0.5 * (a + b);
        for (const double node : {mid - h * gauss_offset, mid + h * gauss_offset}) {
            const Eigen::VectorXd d2 = all_derivs(knots, kOrder, 2, node);
            roughness.noalias() += (0.5 * h) * (d2 * d2.transpose());
        }
    }
    roughness = 0.5 * (roughness + roughness.transpose()).eval();

    return SplineSystem{std::move(basis), std::move(roughness), grid};
}

double roughness_quadform(const Eigen::VectorXd& theta, const SplineSystem& system) {
    if (theta.size() != system.roughness.rows()) {
        throw ValidationError("coefficient length " + std::to_string(theta.size()) +
                              " does not match basis dimension " +
                              std::to_string(system.roughness.rows()));
    }
    const double q = theta.dot(system.roughness * theta);
    return q < 0.0 ? 0.0 : q;  // clip roundoff, the form is PSD
}

}  // namespace pta
