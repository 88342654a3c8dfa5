#include "pta/shrinkage.hpp"

namespace pta {

L1BoundedResult l1_bounded_unit(const Eigen::VectorXd& g, double bound) {
    L1BoundedResult result;
    const double g_norm = g.norm();
    if (g_norm == 0.0) return result;

    Eigen::VectorXd unit = g / g_norm;
    if (unit.lpNorm<1>() <= bound) {
        result.unit = std::move(unit);
        return result;
    }

    // 50 halvings shrink the bracket to machine precision, which keeps the
    // alternating updates that call this effectively exact minimizers.
    double lo = 0.0;
    double hi = g.cwiseAbs().maxCoeff();
    double threshold = hi;
    Eigen::VectorXd shrunk;
    for (int step = 0; step < 50; ++step) {
        threshold = 0.5 * (lo + hi);
        shrunk = soft_threshold(g, threshold);
        const double norm = shrunk.norm();
        if (norm == 0.0) {
            hi = threshold;
            continue;
        }
        if (shrunk.lpNorm<1>() / norm > bound) {
            lo = threshold;
        } else {
            hi = threshold;
        }
    }
    threshold = hi;  // the feasible side of the final bracket
    shrunk = soft_threshold(g, threshold);
    if (shrunk.norm() == 0.0) {
        // Tied maxima can make the bound unreachable from above; the limit
        // solution concentrates on one coordinate.
        Eigen::Index i = 0;
        g.cwiseAbs().maxCoeff(&i);
        shrunk = Eigen::VectorXd::Zero(g.size());
        shrunk(i) = g(i);
    }
    result.unit = shrunk / shrunk.norm();
    result.threshold = threshold;
    return result;
}

}  // namespace pta
