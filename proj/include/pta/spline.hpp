#pragma once

#include <Eigen/Dense>

#include "pta/time_grid.hpp"

namespace pta {

// Cubic B-spline system over a time grid with T points:
//   basis      B   (T x (T+2)),  B(i,m) = B_m(t_i)
//   roughness  Omega ((T+2) x (T+2)),  Omega(i,j) = integral of B_i'' B_j''
// The knot vector clamps four copies of each boundary point around the
// interior grid points, which is the standard cubic construction with
// exactly T+2 basis functions.
struct SplineSystem {
    Eigen::MatrixXd basis;
    Eigen::MatrixXd roughness;
    TimeGrid grid;

    int n_times() const { return static_cast<int>(basis.rows()); }
    int n_coeffs() const { return static_cast<int>(basis.cols()); }
};

SplineSystem build_basis(const TimeGrid& grid);

// Values (deriv = 0) or derivatives (deriv = 1, 2) of every basis function at
// one point x inside [grid.front(), grid.back()]. Second derivatives of a
// cubic basis are piecewise linear, which makes the roughness integral exact
// under two-point Gauss-Legendre per knot interval.
Eigen::VectorXd basis_row(const TimeGrid& grid, double x, int deriv = 0);

// theta' Omega theta, the integrated squared curvature of the curve with
// coefficients theta.
double roughness_quadform(const Eigen::VectorXd& theta, const SplineSystem& system);

}  // namespace pta
