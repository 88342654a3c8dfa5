#include "pta/baseline.hpp"

#include <cmath>

#include "pta/errors.hpp"
#include "pta/shrinkage.hpp"

namespace pta {

Rank1Svd svd_rank1(const Eigen::MatrixXd& matrix) {
    if (matrix.size() == 0 || matrix.isZero(0.0)) {
        throw ValidationError("rank-1 SVD of an empty or all-zero matrix");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Rank1Svd out;
    out.u = svd.matrixU().col(0);
    out.v = svd.matrixV().col(0);
    out.s = svd.singularValues()(0);
    int arg = 0;
    out.u.cwiseAbs().maxCoeff(&arg);
    if (out.u(arg) < 0.0) {
        out.u = -out.u;
        out.v = -out.v;
    }
    return out;
}

PmaModel fit_pma_rank1(const Eigen::MatrixXd& matrix, double bound_u, double bound_v,
                       int max_iter, double tol) {
    if (matrix.size() == 0 || matrix.isZero(0.0)) {
        throw ValidationError("penalized decomposition of an empty or all-zero matrix");
    }
    const double root_p = std::sqrt(static_cast<double>(matrix.rows()));
    const double root_t = std::sqrt(static_cast<double>(matrix.cols()));
    if (bound_u < 1.0 || bound_u > root_p) {
        throw ValidationError("feature L1 bound must lie in [1, sqrt(P)]");
    }
    if (bound_v < 1.0 || bound_v > root_t) {
        throw ValidationError("time L1 bound must lie in [1, sqrt(T)]");
    }

    const Rank1Svd init = svd_rank1(matrix);
    PmaModel model;
    model.u = init.u;
    model.v = init.v;

    double objective = model.u.dot(matrix * model.v);
    for (int iter = 0; iter < max_iter; ++iter) {
        L1BoundedResult u_step = l1_bounded_unit(matrix * model.v, bound_u);
        if (u_step.unit.size() == 0) break;
        model.u = std::move(u_step.unit);

        L1BoundedResult v_step = l1_bounded_unit(matrix.transpose() * model.u, bound_v);
        if (v_step.unit.size() == 0) break;
        model.v = std::move(v_step.unit);

        const double next = model.u.dot(matrix * model.v);
        if (std::abs(next - objective) <= tol * std::max(std::abs(objective), 1e-300)) {
            objective = next;
            break;
        }
        objective = next;
    }
    model.d = objective;
    return model;
}

}  // namespace pta
