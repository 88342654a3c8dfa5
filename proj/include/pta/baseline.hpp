#pragma once

#include <Eigen/Dense>

namespace pta {

// Rank-1 penalized matrix decomposition: maximize u'Yv over unit-norm u, v
// with L1 bounds on both factors. No smoothness penalty; the time profile v
// tracks the raw column pattern.
struct PmaModel {
    Eigen::VectorXd u;  // length P, unit L2 norm
    Eigen::VectorXd v;  // length T, unit L2 norm
    double d = 0.0;     // u'Yv

    Eigen::MatrixXd reconstruction() const { return d * u * v.transpose(); }
};

PmaModel fit_pma_rank1(const Eigen::MatrixXd& matrix, double bound_u, double bound_v,
                       int max_iter = 200, double tol = 1e-8);

struct Rank1Svd {
    Eigen::VectorXd u;
    double s = 0.0;
    Eigen::VectorXd v;
};

// Leading singular triple, sign-pinned so the largest-magnitude entry of u is
// positive.
Rank1Svd svd_rank1(const Eigen::MatrixXd& matrix);

}  // namespace pta
