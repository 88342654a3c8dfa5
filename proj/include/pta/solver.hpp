#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pta/data.hpp"
#include "pta/spline.hpp"

namespace pta {

// Sparsity control for the score update. Exactly one flavor is active:
//   none            no shrinkage
//   penalty         fixed soft threshold lambda_sparse / 2 on the raw gradient
//   l1_bound        |a|_1 <= bound enforced by per-iteration bisection
//   scaled_penalty  threshold proportional to |B theta|_2; this is the
//                   scale-free form carried across deflated components, where
//                   the gradient magnitude shrinks with the residual
struct SparsityControl {
    enum class Kind { none, penalty, l1_bound, scaled_penalty };
    Kind kind = Kind::none;
    double value = 0.0;

    static SparsityControl none() { return {}; }
    static SparsityControl penalty(double lambda_sparse);
    static SparsityControl l1_bound(double bound);
    static SparsityControl scaled_penalty(double threshold);
};

struct FitOptions {
    double lambda_smooth = 0.0;            // weight on the curvature penalty
    SparsityControl sparsity;
    int components = 1;
    int max_iter = 500;
    double tol = 1e-7;                     // relative objective change
    std::uint64_t seed = 0;
    int restarts = 1;                      // 1 = deterministic SVD start only
    bool rebisect_per_component = false;   // re-run the L1 bisection on every component
};

struct FitDiagnostics {
    std::vector<double> objective_trace;   // objective at start and after each sweep
    int iterations = 0;
    bool converged = false;
    bool monotone = true;                  // trace nonincreasing within 1e-10
    bool vanished = false;                 // score update returned all zeros
    double lambda_sparse_effective = 0.0;  // threshold*2 actually applied at the last sweep
};

struct Rank1Fit {
    Eigen::VectorXd scores;   // unit L2 norm
    Eigen::VectorXd coeffs;   // spline coefficients, length T+2
    FitDiagnostics diagnostics;
};

struct ComponentTuning {
    double lambda_smooth = 0.0;
    std::optional<double> l1_bound;
    double lambda_sparse = 0.0;  // effective soft-threshold weight (2x threshold)
};

struct TrendModel {
    Eigen::MatrixXd scores;                 // P x K, unit-norm columns
    Eigen::MatrixXd coeffs;                 // K x (T+2)
    Eigen::MatrixXd trends;                 // K x T, equals coeffs * basis'
    std::vector<double> explained_variance; // per component, fraction of total SS
    std::vector<ComponentTuning> tuning;
    std::vector<FitDiagnostics> diagnostics;
    TimeGrid grid;

    int n_components() const { return static_cast<int>(coeffs.rows()); }
    double cumulative_explained_variance() const;
};

// Penalized loss: masked SSE + lambda_smooth * theta'Omega theta
// + lambda_sparse * |a|_1. The unit-norm constraint on the scores is kept by
// projection, so its multiplier never appears.
double objective(const LongitudinalData& data, const Eigen::VectorXd& scores,
                 const Eigen::VectorXd& coeffs, double lambda_smooth, double lambda_sparse,
                 const SplineSystem& system);

// Exact minimizer of the penalized masked loss in theta for fixed scores:
// (B' diag(w) B + lambda_smooth * Omega) theta = B' r, with per-time weights
// w_t and right-hand side r_t accumulated over observed cells. Fully observed
// data reduces this to (N (a'a) B'B + lambda_smooth * Omega) theta = B' (sum_n Y_n)' a.
Eigen::VectorXd update_theta(const LongitudinalData& data, const Eigen::VectorXd& scores,
                             double lambda_smooth, const SplineSystem& system);

// Score update: soft threshold of the per-feature gradient
// g_p = sum over observed (n,t) of y_npt (B theta)_t at lambda_sparse / 2,
// then normalized to unit L2 norm. Returns nullopt when every entry is
// thresholded away (the component vanished).
std::optional<Eigen::VectorXd> update_scores(const LongitudinalData& data,
                                             const Eigen::VectorXd& coeffs, double lambda_sparse,
                                             const SplineSystem& system);

Rank1Fit fit_rank1(const LongitudinalData& data, const FitOptions& options,
                   const SplineSystem& system);

// Rank-K model by sequential rank-1 fits on deflated residuals. When an L1
// bound is given it is bisected on the first component and the resulting
// threshold is carried to deeper components relative to each trend's norm
// (see SparsityControl::scaled_penalty); rebisect_per_component restores an
// independent bisection per component.
TrendModel fit(const LongitudinalData& data, const FitOptions& options,
               const SplineSystem& system);

// A * Theta * B', the shared P x T reconstruction.
Eigen::MatrixXd predict(const TrendModel& model, const SplineSystem& system);
Eigen::MatrixXd predict(const TrendModel& model, const SplineSystem& system,
                        const CenteringRecord& centering);

}  // namespace pta
