#include "pta/solver.hpp"

#include <cmath>
#include <limits>

#include "pta/errors.hpp"
#include "pta/rng.hpp"
#include "pta/shrinkage.hpp"

namespace pta {

namespace {

constexpr double kDescentSlack = 1e-10;

// Per-cell aggregates over subjects. Every update and the masked SSE reduce
// to P x T contractions against these, so iteration cost is independent of N.
struct DataSummary {
    Eigen::MatrixXd obs_count;   // P x T, subjects observed per cell
    Eigen::MatrixXd value_sum;   // P x T, sum of observed values
    double total_sq = 0.0;       // sum of squared observed values
    bool fully_observed = true;
    int n_subjects = 0;

    static DataSummary from(const LongitudinalData& data) {
        const int P = data.n_features();
        const int T = data.n_times();
        DataSummary s;
        s.n_subjects = data.n_subjects();
        s.obs_count = Eigen::MatrixXd::Zero(P, T);
        s.value_sum = Eigen::MatrixXd::Zero(P, T);
        for (int n = 0; n < data.n_subjects(); ++n) {
            if (data.observed[n].all()) {
                s.obs_count.array() += 1.0;
                s.value_sum += data.values[n];
                s.total_sq += data.values[n].squaredNorm();
            } else {
                s.fully_observed = false;
                for (int p = 0; p < P; ++p) {
                    for (int t = 0; t < T; ++t) {
                        if (!data.observed[n](p, t)) continue;
                        const double y = data.values[n](p, t);
                        s.obs_count(p, t) += 1.0;
                        s.value_sum(p, t) += y;
                        s.total_sq += y * y;
                    }
                }
            }
        }
        return s;
    }

    // Deflate by a rank-1 reconstruction: values shift by -rec on observed
    // cells, so sums shift by -count.*rec and the total square follows.
    void deflate(const Eigen::MatrixXd& rec) {
        total_sq += -2.0 * (value_sum.array() * rec.array()).sum() +
                    (obs_count.array() * rec.array().square()).sum();
        value_sum -= obs_count.cwiseProduct(rec);
    }

    double masked_sse_rank1(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const {
        const Eigen::VectorXd g = value_sum * s;
        const Eigen::VectorXd h = obs_count * s.cwiseAbs2();
        return total_sq - 2.0 * a.dot(g) + a.cwiseAbs2().dot(h);
    }
};

Eigen::VectorXd solve_theta(const DataSummary& summary, const Eigen::VectorXd& scores,
                            double lambda_smooth, const SplineSystem& system) {
    const Eigen::MatrixXd& B = system.basis;
    const Eigen::VectorXd weights = summary.obs_count.transpose() * scores.cwiseAbs2();
    Eigen::MatrixXd lhs = B.transpose() * weights.asDiagonal() * B;
    if (lambda_smooth > 0.0) lhs += lambda_smooth * system.roughness;
    const Eigen::VectorXd rhs = B.transpose() * (summary.value_sum.transpose() * scores);

    Eigen::VectorXd theta;
    if (lambda_smooth > 0.0) {
        theta = lhs.ldlt().solve(rhs);
    } else {
        // B'diag(w)B has rank at most T < T+2; take the minimum-norm solution.
        theta = lhs.completeOrthogonalDecomposition().solve(rhs);
    }

    // Backward-error style residual: inconsistency shows up against the
    // scale of the system, not only against |rhs|.
    auto rel_residual = [&](const Eigen::VectorXd& th) {
        const double scale = lhs.norm() * th.norm() + rhs.norm();
        const double r = (lhs * th - rhs).norm();
        return scale > 0.0 ? r / scale : r;
    };
    if (!(rel_residual(theta) <= 1e-9) || !theta.allFinite()) {
        theta = lhs.completeOrthogonalDecomposition().solve(rhs);
        if (!(rel_residual(theta) <= 1e-9) || !theta.allFinite()) {
            throw SolverError(
                "trend update system is numerically singular; a positive smoothing weight "
                "(lambda_smooth > 0) regularizes it");
        }
    }
    return theta;
}

struct ScoreStep {
    Eigen::VectorXd scores;
    double threshold = 0.0;   // applied to the raw gradient
    bool vanished = false;
};

ScoreStep solve_scores(const DataSummary& summary, const Eigen::VectorXd& trend,
                       const SparsityControl& sparsity) {
    ScoreStep step;
    const Eigen::VectorXd g = summary.value_sum * trend;
    switch (sparsity.kind) {
        case SparsityControl::Kind::none:
            step.threshold = 0.0;
            break;
        case SparsityControl::Kind::penalty:
            step.threshold = 0.5 * sparsity.value;
            break;
        case SparsityControl::Kind::scaled_penalty:
            step.threshold = sparsity.value * trend.norm();
            break;
        case SparsityControl::Kind::l1_bound: {
            L1BoundedResult bounded = l1_bounded_unit(g, sparsity.value);
            if (bounded.unit.size() == 0) {
                step.vanished = true;
                return step;
            }
            step.scores = std::move(bounded.unit);
            step.threshold = bounded.threshold;
            return step;
        }
    }
    Eigen::VectorXd shrunk = soft_threshold(g, step.threshold);
    const double norm = shrunk.norm();
    if (norm == 0.0) {
        step.vanished = true;
        return step;
    }
    step.scores = shrunk / norm;
    return step;
}

// (a, theta) and (-a, -theta) describe the same component; pin the sign so
// the largest-magnitude trend value is positive.
void canonicalize_sign(Eigen::VectorXd& scores, Eigen::VectorXd& coeffs,
                       const SplineSystem& system) {
    const Eigen::VectorXd trend = system.basis * coeffs;
    int arg = 0;
    double best = -1.0;
    for (int t = 0; t < trend.size(); ++t) {
        if (std::abs(trend(t)) > best) {
            best = std::abs(trend(t));
            arg = t;
        }
    }
    if (trend(arg) < 0.0) {
        scores = -scores;
        coeffs = -coeffs;
    }
}

Eigen::VectorXd svd_init_scores(const DataSummary& summary) {
    const Eigen::MatrixXd mean =
        (summary.obs_count.array() > 0.0)
            .select(summary.value_sum.array() / summary.obs_count.array().max(1.0), 0.0)
            .matrix();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mean, Eigen::ComputeThinU);
    Eigen::VectorXd a = svd.matrixU().col(0);
    int arg = 0;
    a.cwiseAbs().maxCoeff(&arg);
    if (a(arg) < 0.0) a = -a;
    return a;
}

// Coefficients whose curve tracks the given grid values, with a whisper of
// curvature penalty to pick one representative from the null directions.
Eigen::VectorXd ridge_project(const Eigen::VectorXd& grid_values, const SplineSystem& system) {
    const Eigen::MatrixXd& B = system.basis;
    const double scale = system.roughness.diagonal().maxCoeff();
    const double ridge = scale > 0.0 ? 1e-10 * (B.squaredNorm() / scale) : 1e-10;
    const Eigen::MatrixXd lhs = B.transpose() * B + ridge * system.roughness;
    return lhs.ldlt().solve(B.transpose() * grid_values);
}

Rank1Fit fit_rank1_from(const DataSummary& summary, Eigen::VectorXd scores,
                        const FitOptions& options, const SplineSystem& system) {
    const bool penalized_l1 = options.sparsity.kind == SparsityControl::Kind::penalty;
    Rank1Fit fit;
    FitDiagnostics& diag = fit.diagnostics;

    if (summary.value_sum.isZero(0.0)) {
        diag.vanished = true;
        return fit;
    }

    Eigen::VectorXd theta =
        ridge_project(summary.value_sum.transpose() * scores / summary.n_subjects, system);
    auto evaluate = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& th) {
        double value = summary.masked_sse_rank1(a, system.basis * th) +
                       options.lambda_smooth * roughness_quadform(th, system);
        if (penalized_l1) value += options.sparsity.value * a.lpNorm<1>();
        return value;
    };

    double current = evaluate(scores, theta);
    diag.objective_trace.push_back(current);

    double best_objective = current;
    Eigen::VectorXd best_scores = scores;
    Eigen::VectorXd best_theta = theta;

    for (int iter = 0; iter < options.max_iter; ++iter) {
        theta = solve_theta(summary, scores, options.lambda_smooth, system);
        const ScoreStep step = solve_scores(summary, system.basis * theta, options.sparsity);
        if (step.vanished) {
            diag.vanished = true;
            diag.iterations = iter + 1;
            return fit;
        }
        scores = step.scores;
        diag.lambda_sparse_effective = 2.0 * step.threshold;

        const double next = evaluate(scores, theta);
        diag.objective_trace.push_back(next);
        diag.iterations = iter + 1;
        if (next < best_objective) {
            best_objective = next;
            best_scores = scores;
            best_theta = theta;
        }
        if (std::abs(current - next) <= options.tol * std::max(std::abs(current), 1e-300)) {
            diag.converged = true;
            break;
        }
        current = next;
    }

    for (std::size_t i = 1; i < diag.objective_trace.size(); ++i) {
        if (diag.objective_trace[i] > diag.objective_trace[i - 1] + kDescentSlack) {
            diag.monotone = false;
            break;
        }
    }

    fit.scores = diag.converged ? std::move(scores) : std::move(best_scores);
    fit.coeffs = diag.converged ? std::move(theta) : std::move(best_theta);
    canonicalize_sign(fit.scores, fit.coeffs, system);
    return fit;
}

Rank1Fit fit_rank1_summary(const DataSummary& summary, const FitOptions& options,
                           const SplineSystem& system) {
    Rank1Fit best = fit_rank1_from(summary, svd_init_scores(summary), options, system);
    if (options.restarts <= 1) return best;

    const int P = static_cast<int>(summary.value_sum.rows());
    for (int r = 1; r < options.restarts; ++r) {
        Rng rng(split_seed(options.seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd start(P);
        for (int p = 0; p < P; ++p) start(p) = rng.gaussian();
        const double norm = start.norm();
        if (norm == 0.0) continue;
        Rank1Fit candidate = fit_rank1_from(summary, start / norm, options, system);
        const bool better =
            !candidate.diagnostics.vanished &&
            (best.diagnostics.vanished || candidate.diagnostics.objective_trace.back() <
                                              best.diagnostics.objective_trace.back());
        if (better) best = std::move(candidate);
    }
    return best;
}

void check_options(const FitOptions& options, const LongitudinalData& data) {
    if (options.lambda_smooth < 0.0) throw ValidationError("lambda_smooth must be nonnegative");
    if (options.max_iter < 1) throw ValidationError("max_iter must be positive");
    if (options.tol <= 0.0) throw ValidationError("tol must be positive");
    if (options.components < 1 ||
        options.components > std::min(data.n_features(), data.n_times())) {
        throw ValidationError("component count must lie in [1, min(P, T)]");
    }
    if (options.sparsity.kind == SparsityControl::Kind::l1_bound) {
        const double root_p = std::sqrt(static_cast<double>(data.n_features()));
        if (options.sparsity.value < 1.0 || options.sparsity.value > root_p) {
            throw ValidationError("L1 bound must lie in [1, sqrt(P)]");
        }
    } else if (options.sparsity.value < 0.0) {
        throw ValidationError("sparsity weight must be nonnegative");
    }
}

}  // namespace

SparsityControl SparsityControl::penalty(double lambda_sparse) {
    return {Kind::penalty, lambda_sparse};
}
SparsityControl SparsityControl::l1_bound(double bound) { return {Kind::l1_bound, bound}; }
SparsityControl SparsityControl::scaled_penalty(double threshold) {
    return {Kind::scaled_penalty, threshold};
}

double TrendModel::cumulative_explained_variance() const {
    double total = 0.0;
    for (double ev : explained_variance) total += ev;
    return total;
}

double objective(const LongitudinalData& data, const Eigen::VectorXd& scores,
                 const Eigen::VectorXd& coeffs, double lambda_smooth, double lambda_sparse,
                 const SplineSystem& system) {
    if (scores.size() != data.n_features() || coeffs.size() != system.n_coeffs()) {
        throw ValidationError("objective: score or coefficient length mismatch");
    }
    const Eigen::MatrixXd rec = scores * (system.basis * coeffs).transpose();
    return masked_sse(data, rec) + lambda_smooth * roughness_quadform(coeffs, system) +
           lambda_sparse * scores.lpNorm<1>();
}

Eigen::VectorXd update_theta(const LongitudinalData& data, const Eigen::VectorXd& scores,
                             double lambda_smooth, const SplineSystem& system) {
    if (scores.size() != data.n_features()) throw ValidationError("score length mismatch");
    if (lambda_smooth < 0.0) throw ValidationError("lambda_smooth must be nonnegative");
    return solve_theta(DataSummary::from(data), scores, lambda_smooth, system);
}

std::optional<Eigen::VectorXd> update_scores(const LongitudinalData& data,
                                             const Eigen::VectorXd& coeffs, double lambda_sparse,
                                             const SplineSystem& system) {
    if (coeffs.size() != system.n_coeffs()) throw ValidationError("coefficient length mismatch");
    if (lambda_sparse < 0.0) throw ValidationError("lambda_sparse must be nonnegative");
    const ScoreStep step = solve_scores(DataSummary::from(data), system.basis * coeffs,
                                        SparsityControl::penalty(lambda_sparse));
    if (step.vanished) return std::nullopt;
    return step.scores;
}

Rank1Fit fit_rank1(const LongitudinalData& data, const FitOptions& options,
                   const SplineSystem& system) {
    check_options(options, data);
    return fit_rank1_summary(DataSummary::from(data), options, system);
}

TrendModel fit(const LongitudinalData& data, const FitOptions& options,
               const SplineSystem& system) {
    check_options(options, data);
    const int P = data.n_features();
    const int T = data.n_times();

    DataSummary summary = DataSummary::from(data);
    const double total_sq = summary.total_sq;

    TrendModel model;
    model.grid = data.grid;
    model.scores.resize(P, 0);
    model.coeffs.resize(0, system.n_coeffs());
    model.trends.resize(0, T);

    FitOptions component_options = options;
    double sse_prev = total_sq;
    for (int k = 0; k < options.components; ++k) {
        const Rank1Fit part = fit_rank1_summary(summary, component_options, system);
        if (part.diagnostics.vanished) {
            model.diagnostics.push_back(part.diagnostics);
            break;  // deeper components would see the same residual
        }

        const Eigen::VectorXd trend = system.basis * part.coeffs;
        summary.deflate(part.scores * trend.transpose());

        const double sse_k = summary.total_sq;
        double ev = total_sq > 0.0 ? (sse_prev - sse_k) / total_sq : 0.0;
        if (ev < 0.0) {
            if (ev < -1e-9) {
                throw SolverError("component increased the residual sum of squares");
            }
            ev = 0.0;
        }
        sse_prev = sse_k;

        model.scores.conservativeResize(P, model.scores.cols() + 1);
        model.scores.col(model.scores.cols() - 1) = part.scores;
        model.coeffs.conservativeResize(model.coeffs.rows() + 1, Eigen::NoChange);
        model.coeffs.row(model.coeffs.rows() - 1) = part.coeffs.transpose();
        model.trends.conservativeResize(model.trends.rows() + 1, Eigen::NoChange);
        model.trends.row(model.trends.rows() - 1) = trend.transpose();
        model.explained_variance.push_back(ev);
        model.diagnostics.push_back(part.diagnostics);

        ComponentTuning tuning;
        tuning.lambda_smooth = component_options.lambda_smooth;
        if (component_options.sparsity.kind == SparsityControl::Kind::l1_bound) {
            tuning.l1_bound = component_options.sparsity.value;
        }
        tuning.lambda_sparse = part.diagnostics.lambda_sparse_effective;
        model.tuning.push_back(tuning);

        // Carry the first component's sparsity level to the deflated
        // residuals on a scale-free footing: the gradient magnitude is
        // proportional to the trend norm, so the threshold follows it.
        if (k == 0 && !options.rebisect_per_component &&
            options.sparsity.kind != SparsityControl::Kind::none &&
            options.sparsity.kind != SparsityControl::Kind::scaled_penalty) {
            const double trend_norm = trend.norm();
            const double threshold = part.diagnostics.lambda_sparse_effective / 2.0;
            component_options.sparsity =
                SparsityControl::scaled_penalty(trend_norm > 0.0 ? threshold / trend_norm : 0.0);
        }
    }
    return model;
}

Eigen::MatrixXd predict(const TrendModel& model, const SplineSystem& system) {
    if (model.n_components() == 0) {
        return Eigen::MatrixXd::Zero(model.scores.rows(), system.n_times());
    }
    return model.scores * model.coeffs * system.basis.transpose();
}

Eigen::MatrixXd predict(const TrendModel& model, const SplineSystem& system,
                        const CenteringRecord& centering) {
    Eigen::MatrixXd rec = predict(model, system);
    rec.colwise() += centering.feature_means;
    return rec;
}

}  // namespace pta
