#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "pta/errors.hpp"
#include "pta/rng.hpp"
#include "pta/spline.hpp"

using pta::basis_row;
using pta::build_basis;
using pta::make_time_grid;
using pta::SplineSystem;
using pta::TimeGrid;

namespace {

TimeGrid equispaced(int n, double lo, double hi) {
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t(i) = lo + (hi - lo) * i / (n - 1);
    return make_time_grid(t);
}

// Least-squares coefficients reproducing the given grid values. The
// minimum-norm solution can wiggle between grid points, so the smooth variant
// breaks the tie with a whisper of curvature penalty instead.
Eigen::VectorXd coeffs_for(const SplineSystem& system, const Eigen::VectorXd& grid_values) {
    return system.basis.completeOrthogonalDecomposition().solve(grid_values);
}

Eigen::VectorXd smooth_coeffs_for(const SplineSystem& system, const Eigen::VectorXd& grid_values) {
    // curves with zero curvature solve this exactly for any ridge weight
    const Eigen::MatrixXd lhs =
        system.basis.transpose() * system.basis + 1e-8 * system.roughness;
    return lhs.ldlt().solve(system.basis.transpose() * grid_values);
}

}  // namespace

TEST_CASE("basis has T+2 columns and rows sum to one") {
    const SplineSystem system = build_basis(equispaced(4, 0.0, 3.0));
    CHECK(system.basis.rows() == 4);
    CHECK(system.basis.cols() == 6);
    for (int i = 0; i < 4; ++i) {
        CHECK(system.basis.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    // interior, non-grid points too
    const TimeGrid grid = equispaced(9, 0.0, 4.0);
    for (double x : {0.13, 1.7, 2.49, 3.9999, 4.0}) {
        CHECK(basis_row(grid, x, 0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("roughness matrix is symmetric PSD with a two-dimensional null space") {
    const SplineSystem system = build_basis(equispaced(7, 1.0, 7.0));
    CHECK((system.roughness - system.roughness.transpose()).norm() == doctest::Approx(0.0));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system.roughness);
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    int near_zero = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        CHECK(eig.eigenvalues()(i) >= -1e-10 * scale);
        if (eig.eigenvalues()(i) < 1e-10 * scale) ++near_zero;
    }
    CHECK(near_zero == 2);  // affine curves have zero curvature
}

TEST_CASE("roughness matches a Simpson quadrature oracle") {
    const TimeGrid grid = equispaced(10, 0.0, 9.0);
    const SplineSystem system = build_basis(grid);
    const Eigen::MatrixXd reference = oracle::roughness_by_simpson(grid);
    const double rel = (system.roughness - reference).cwiseAbs().maxCoeff() /
                       reference.cwiseAbs().maxCoeff();
    CHECK(rel < 1e-6);
}

TEST_CASE("second-derivative rows agree with finite differences of values") {
    const TimeGrid grid = equispaced(8, 0.0, 7.0);
    for (double x : {0.55, 2.2, 3.75, 6.3}) {  // away from knots
        const Eigen::VectorXd fd = oracle::second_derivative_fd(grid, x, 1e-4);
        const Eigen::VectorXd exact = basis_row(grid, x, 2);
        CHECK((fd - exact).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + exact.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("quadform is zero exactly on affine curves") {
    const SplineSystem system = build_basis(equispaced(9, 0.0, 8.0));

    CHECK(pta::roughness_quadform(Eigen::VectorXd::Zero(11), system) == 0.0);

    const Eigen::VectorXd line = 2.0 * system.grid.points.array() + 1.0;
    const Eigen::VectorXd theta = smooth_coeffs_for(system, line);
    CHECK((system.basis * theta - line).norm() < 1e-8);  // representable
    CHECK(pta::roughness_quadform(theta, system) <= 1e-10);

    pta::Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd random_theta(11);
        for (int i = 0; i < 11; ++i) random_theta(i) = rng.gaussian();
        const double q = pta::roughness_quadform(random_theta, system);
        CHECK(q >= 0.0);
        // zero quadform forces the curve to be affine in t
        if (q <= 1e-10) {
            Eigen::MatrixXd design(9, 2);
            design.col(0).setOnes();
            design.col(1) = system.grid.points;
            const Eigen::VectorXd curve = system.basis * random_theta;
            const Eigen::VectorXd fitted = design * design.colPivHouseholderQr().solve(curve);
            CHECK((curve - fitted).norm() <= 1e-8);
        }
    }
}

TEST_CASE("quadform of a fitted sinusoid matches Simpson quadrature of its curvature") {
    const TimeGrid grid = equispaced(50, 0.0, 5.0);
    const SplineSystem system = build_basis(grid);
    const Eigen::VectorXd values =
        (2.0 * 3.14159265358979323846 * grid.points.array()).sin().matrix();
    const Eigen::VectorXd theta = coeffs_for(system, values);

    const double reference = oracle::simpson(
        [&](double x) {
            const double s2 = basis_row(grid, x, 2).dot(theta);
            return s2 * s2;
        },
        grid.front(), grid.back(), 20000);
    CHECK(pta::roughness_quadform(theta, system) == doctest::Approx(reference).epsilon(1e-6));
}

TEST_CASE("basis has full row-relevant rank T") {
    const SplineSystem system = build_basis(equispaced(12, 0.0, 11.0));
    CHECK(system.basis.completeOrthogonalDecomposition().rank() == 12);
}

TEST_CASE("doubling the time coordinates scales the roughness by 1/8") {
    Eigen::VectorXd t(6);
    t << 0.0, 0.7, 1.1, 2.0, 3.2, 4.0;
    const SplineSystem base = build_basis(make_time_grid(t));
    const SplineSystem doubled = build_basis(make_time_grid(Eigen::VectorXd(2.0 * t)));
    const double rel = (doubled.roughness - base.roughness / 8.0).cwiseAbs().maxCoeff() /
                       base.roughness.cwiseAbs().maxCoeff();
    CHECK(rel < 1e-8);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(build_basis(make_time_grid(std::vector<double>{0.0, 1.0, 2.0})),
                    pta::ValidationError);
    CHECK_THROWS_AS(make_time_grid(std::vector<double>{0.0, 1.0, 1.0, 2.0}), pta::ValidationError);
    CHECK_THROWS_AS(make_time_grid(std::vector<double>{3.0, 2.0, 1.0, 0.0}), pta::ValidationError);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_time_grid(std::vector<double>{0.0, 1.0, 2.0, inf}), pta::ValidationError);

    const SplineSystem system = build_basis(equispaced(5, 0.0, 4.0));
    CHECK_THROWS_AS(pta::roughness_quadform(Eigen::VectorXd::Zero(5), system),
                    pta::ValidationError);
    CHECK_THROWS_AS(basis_row(system.grid, -0.5, 0), pta::ValidationError);
}
