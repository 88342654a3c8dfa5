#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pta/baseline.hpp"
#include "pta/errors.hpp"
#include "pta/rng.hpp"
#include "pta/shrinkage.hpp"
#include "pta/simulate.hpp"
#include "pta/solver.hpp"
#include "pta/spline.hpp"

using pta::FitOptions;
using pta::LongitudinalData;
using pta::SparsityControl;
using pta::SplineSystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

LongitudinalData make_data(int n, int p, int t, std::uint64_t seed, double missing_rate = 0.0,
                           double scale = 1.0) {
    pta::Rng rng(seed);
    LongitudinalData data;
    Eigen::VectorXd grid(t);
    for (int i = 0; i < t; ++i) grid(i) = i;
    data.grid = pta::make_time_grid(grid);
    for (int i = 1; i <= p; ++i) data.feature_ids.push_back("g" + std::to_string(i));
    for (int i = 1; i <= n; ++i) data.subject_ids.push_back("s" + std::to_string(i));
    data.values.assign(n, Eigen::MatrixXd::Zero(p, t));
    data.observed.assign(n, pta::BoolArray::Constant(p, t, true));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
            for (int k = 0; k < t; ++k) {
                data.values[i](j, k) = scale * rng.gaussian();
                if (rng.uniform() < missing_rate) data.observed[i](j, k) = false;
            }
        }
    }
    // keep every feature observed somewhere
    for (int j = 0; j < p; ++j) data.observed[0](j, 0) = true;
    return data;
}

LongitudinalData rank1_data(const Eigen::VectorXd& scores, const Eigen::VectorXd& trend, int n) {
    LongitudinalData data;
    Eigen::VectorXd grid(trend.size());
    for (int i = 0; i < trend.size(); ++i) grid(i) = i;
    data.grid = pta::make_time_grid(grid);
    for (int i = 1; i <= scores.size(); ++i) data.feature_ids.push_back("g" + std::to_string(i));
    for (int i = 1; i <= n; ++i) data.subject_ids.push_back("s" + std::to_string(i));
    data.values.assign(n, scores * trend.transpose());
    data.observed.assign(n, pta::BoolArray::Constant(scores.size(), trend.size(), true));
    return data;
}

Eigen::VectorXd unit_gaussian(int size, std::uint64_t seed) {
    pta::Rng rng(seed);
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = rng.gaussian();
    return v / v.norm();
}

double masked_theta_objective(const LongitudinalData& data, const Eigen::VectorXd& scores,
                              const Eigen::VectorXd& theta, double lambda,
                              const SplineSystem& system) {
    return pta::objective(data, scores, theta, lambda, 0.0, system);
}

}  // namespace

TEST_CASE("soft threshold identity on randomized scalars") {
    pta::Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double x = 4.0 * rng.gaussian();
        const double c = std::abs(rng.gaussian());
        const double direct = x > 0 ? std::max(x - c, 0.0) : -std::max(-x - c, 0.0);
        CHECK(pta::soft_threshold(x, c) == direct);
    }
}

TEST_CASE("objective: zero data at a unit direction, and the penalty-free case") {
    const LongitudinalData zeros = rank1_data(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(6), 1);
    const SplineSystem system = pta::build_basis(zeros.grid);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
    e1(0) = 1.0;
    CHECK(pta::objective(zeros, e1, Eigen::VectorXd::Zero(8), 1.0, 1.0, system) ==
          doctest::Approx(1.0));  // only the L1 term survives
    CHECK(pta::objective(zeros, e1, Eigen::VectorXd::Zero(8), 1.0, 0.0, system) == 0.0);

    const LongitudinalData data = make_data(2, 5, 6, 3);
    const Eigen::VectorXd a = unit_gaussian(5, 17);
    const Eigen::VectorXd theta = unit_gaussian(8, 18);
    CHECK(pta::objective(data, a, theta, 0.0, 0.0, pta::build_basis(data.grid)) ==
          doctest::Approx(pta::masked_sse(
              data, a * (pta::build_basis(data.grid).basis * theta).transpose()))
              .epsilon(1e-12));
}

TEST_CASE("objective matches a direct-summation oracle") {
    const LongitudinalData data = make_data(2, 4, 5, 21, 0.2);
    const SplineSystem system = pta::build_basis(data.grid);
    const Eigen::VectorXd a = unit_gaussian(4, 31);
    const Eigen::VectorXd theta = unit_gaussian(7, 32);
    const double lambda_smooth = 0.7, lambda_sparse = 0.3;

    const Eigen::MatrixXd rec = a * (system.basis * theta).transpose();
    const double direct = oracle::triple_loop_sse(data, rec) +
                          lambda_smooth * theta.dot(system.roughness * theta) +
                          lambda_sparse * a.lpNorm<1>();
    CHECK(pta::objective(data, a, theta, lambda_smooth, lambda_sparse, system) ==
          doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("theta update recovers noiseless coefficients with no smoothing") {
    const int T = 10, P = 5, N = 3;
    const SplineSystem system = pta::build_basis(pta::make_time_grid([] {
        std::vector<double> t;
        for (int i = 0; i < 10; ++i) t.push_back(i);
        return t;
    }()));
    // target coefficients in the row space of the basis, so the minimum-norm
    // solution is the generator itself
    const Eigen::VectorXd raw = unit_gaussian(T, 5);
    const Eigen::VectorXd theta_star =
        system.basis.completeOrthogonalDecomposition().solve(raw);
    const Eigen::VectorXd trend = system.basis * theta_star;
    const Eigen::VectorXd a = unit_gaussian(P, 6);
    const LongitudinalData data = rank1_data(a, trend, N);

    const Eigen::VectorXd theta = pta::update_theta(data, a, 0.0, system);
    CHECK((theta - theta_star).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("huge smoothing flattens the trend to a line") {
    const int T = 24;
    std::vector<double> times;
    for (int i = 0; i < T; ++i) times.push_back(i * 0.25);
    const SplineSystem system = pta::build_basis(pta::make_time_grid(times));
    Eigen::VectorXd trend(T);
    for (int i = 0; i < T; ++i) trend(i) = std::sin(2.0 * kPi * times[i]);
    const Eigen::VectorXd a = unit_gaussian(6, 8);
    const LongitudinalData data = rank1_data(a, trend, 2);

    const Eigen::VectorXd theta = pta::update_theta(data, a, 1e9, system);
    const Eigen::VectorXd curve = system.basis * theta;
    Eigen::MatrixXd design(T, 2);
    design.col(0).setOnes();
    design.col(1) = system.grid.points;
    const Eigen::VectorXd line = design * design.colPivHouseholderQr().solve(curve);
    CHECK((curve - line).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("theta update matches a finite-difference gradient-descent oracle") {
    const LongitudinalData data = make_data(2, 6, 8, 44);
    const SplineSystem system = pta::build_basis(data.grid);
    const Eigen::VectorXd a = unit_gaussian(6, 45);
    const double lambda = 0.5;

    const Eigen::VectorXd theta = pta::update_theta(data, a, lambda, system);
    auto f = [&](const Eigen::VectorXd& th) {
        return masked_theta_objective(data, a, th, lambda, system);
    };
    const Eigen::VectorXd by_descent = oracle::fd_gradient_descent(f, Eigen::VectorXd::Zero(10));
    CHECK((theta - by_descent).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("theta update is stationary for the masked objective") {
    const LongitudinalData data = make_data(3, 5, 7, 50, 0.25);
    const SplineSystem system = pta::build_basis(data.grid);
    const Eigen::VectorXd a = unit_gaussian(5, 51);
    const double lambda = 0.2;

    const Eigen::VectorXd theta = pta::update_theta(data, a, lambda, system);
    auto f = [&](const Eigen::VectorXd& th) {
        return masked_theta_objective(data, a, th, lambda, system);
    };
    const double step = 1e-6 * std::max(1.0, theta.norm());
    const double grad_norm = oracle::fd_gradient(f, theta, step).norm();
    const double grad0_norm = oracle::fd_gradient(f, Eigen::VectorXd::Zero(9), step).norm();
    CHECK(grad_norm <= 1e-5 * (1.0 + grad0_norm));
}

TEST_CASE("score update: worked example, no-penalty case, and vanish signal") {
    // data engineered so the score gradient is exactly (3, -1, 0.2):
    // a single time column cannot be, so use a trend with unit basis column.
    const int T = 5;
    LongitudinalData data;
    std::vector<double> times;
    for (int i = 0; i < T; ++i) times.push_back(i);
    data.grid = pta::make_time_grid(times);
    data.feature_ids = {"g1", "g2", "g3"};
    data.subject_ids = {"s1"};
    const SplineSystem system = pta::build_basis(data.grid);

    // pick theta, then set each feature row to c_p * trend / |trend|^2 so the
    // gradient y_p . trend equals c_p
    const Eigen::VectorXd theta = unit_gaussian(T + 2, 9);
    const Eigen::VectorXd trend = system.basis * theta;
    Eigen::VectorXd g(3);
    g << 3.0, -1.0, 0.2;
    data.values.assign(1, g * trend.transpose() / trend.squaredNorm());
    data.observed.assign(1, pta::BoolArray::Constant(3, T, true));

    const auto scores = pta::update_scores(data, theta, 1.0, system);
    REQUIRE(scores.has_value());
    CHECK((*scores)(0) == doctest::Approx(0.9806).epsilon(1e-4));
    CHECK((*scores)(1) == doctest::Approx(-0.1961).epsilon(1e-4));
    CHECK((*scores)(2) == 0.0);

    Eigen::VectorXd g2(3);
    g2 << 0.0, 5.0, 0.0;
    data.values[0] = g2 * trend.transpose() / trend.squaredNorm();
    const auto plain = pta::update_scores(data, theta, 0.0, system);
    REQUIRE(plain.has_value());
    CHECK((*plain)(1) == doctest::Approx(1.0));

    CHECK_FALSE(pta::update_scores(data, theta, 1e9, system).has_value());
}

TEST_CASE("score update maximizes the penalized correlation over the unit ball") {
    pta::Rng rng(77);
    const LongitudinalData data = make_data(2, 8, 6, 78);
    const SplineSystem system = pta::build_basis(data.grid);
    const Eigen::VectorXd theta = unit_gaussian(8, 79);
    const Eigen::VectorXd trend = system.basis * theta;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(8);
    for (int n = 0; n < data.n_subjects(); ++n) g += data.values[n] * trend;

    const double lambda_sparse = 0.8;
    const auto scores = pta::update_scores(data, theta, lambda_sparse, system);
    REQUIRE(scores.has_value());
    const double achieved = g.dot(*scores) - 0.5 * lambda_sparse * scores->lpNorm<1>();
    const double reference = oracle::subgradient_score_objective(g, 0.5 * lambda_sparse);
    CHECK(achieved >= reference - 1e-5 * (1.0 + std::abs(reference)));
}

TEST_CASE("nonzero count is nonincreasing in the sparsity weight") {
    const LongitudinalData data = make_data(1, 12, 7, 90);
    const SplineSystem system = pta::build_basis(data.grid);
    const Eigen::VectorXd theta = unit_gaussian(9, 91);
    long long previous = 1 << 20;
    for (double lambda : {0.0, 0.05, 0.1, 0.3, 0.6, 1.2, 2.5, 5.0}) {
        const auto scores = pta::update_scores(data, theta, lambda, system);
        const long long count =
            scores ? (scores->array() != 0.0).count() : 0;
        CHECK(count <= previous);
        previous = count;
    }
}

TEST_CASE("L1-bounded score update meets the bound, with equality when binding") {
    pta::Rng rng(13);
    Eigen::VectorXd g(40);
    for (int i = 0; i < 40; ++i) g(i) = rng.gaussian();

    const double loose = std::sqrt(40.0) - 1e-6;
    const pta::L1BoundedResult inactive = pta::l1_bounded_unit(g, loose);
    CHECK(inactive.threshold == 0.0);
    CHECK(inactive.unit.lpNorm<1>() <= loose + 1e-8);

    const double tight = 0.4 * g.lpNorm<1>() / g.norm();
    const pta::L1BoundedResult active = pta::l1_bounded_unit(g, tight);
    CHECK(active.unit.lpNorm<1>() == doctest::Approx(tight).epsilon(1e-5));
    CHECK(active.unit.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rank-1 fit recovers a noiseless sinusoid component") {
    pta::SimDesign design = pta::SimDesign::sinusoid(30, 10, 1, 50);
    design.groups = {{1, 20}};
    design.noise.sigma = 0.0;
    design.seed = 3;
    const LongitudinalData data = pta::generate(design);
    const SplineSystem system = pta::build_basis(data.grid);

    FitOptions options;
    options.lambda_smooth = 1e-4;
    const pta::Rank1Fit fit = pta::fit_rank1(data, options, system);
    REQUIRE_FALSE(fit.diagnostics.vanished);

    const Eigen::VectorXd truth = pta::truth_patterns(design).row(0);
    const Eigen::VectorXd got = system.basis * fit.coeffs;
    CHECK(std::abs(oracle::pearson(got, truth)) >= 0.999);
    CHECK(fit.scores.norm() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("all-zero data vanishes with a flag") {
    const LongitudinalData zeros = rank1_data(Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(8), 2);
    const SplineSystem system = pta::build_basis(zeros.grid);
    const pta::Rank1Fit fit = pta::fit_rank1(zeros, FitOptions{}, system);
    CHECK(fit.diagnostics.vanished);

    const pta::TrendModel model = pta::fit(zeros, FitOptions{.components = 3}, system);
    CHECK(model.n_components() == 0);
    REQUIRE(model.diagnostics.size() == 1);
    CHECK(model.diagnostics[0].vanished);
}

TEST_CASE("objective descends through alternating sweeps") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const LongitudinalData data = make_data(2, 7, 9, 100 + seed);
        const SplineSystem system = pta::build_basis(data.grid);
        FitOptions options;
        options.lambda_smooth = 0.1;
        options.sparsity = SparsityControl::penalty(0.2);
        const pta::Rank1Fit fit = pta::fit_rank1(data, options, system);
        CHECK(fit.diagnostics.monotone);
        for (std::size_t i = 1; i < fit.diagnostics.objective_trace.size(); ++i) {
            CHECK(fit.diagnostics.objective_trace[i] <=
                  fit.diagnostics.objective_trace[i - 1] + 1e-10);
        }
    }
}

TEST_CASE("non-convergence at max_iter is flagged, best iterate returned") {
    const LongitudinalData data = make_data(1, 10, 8, 333);
    const SplineSystem system = pta::build_basis(data.grid);
    FitOptions options;
    options.lambda_smooth = 0.01;
    options.max_iter = 1;
    options.tol = 1e-16;
    const pta::Rank1Fit fit = pta::fit_rank1(data, options, system);
    CHECK_FALSE(fit.diagnostics.converged);
    CHECK(fit.scores.size() == 10);
}

TEST_CASE("deterministic: identical fits from identical options") {
    const LongitudinalData data = make_data(2, 9, 7, 555, 0.1);
    const SplineSystem system = pta::build_basis(data.grid);
    FitOptions options;
    options.lambda_smooth = 0.05;
    options.sparsity = SparsityControl::l1_bound(2.0);
    options.seed = 9;
    options.restarts = 3;
    const pta::Rank1Fit a = pta::fit_rank1(data, options, system);
    const pta::Rank1Fit b = pta::fit_rank1(data, options, system);
    CHECK(a.scores == b.scores);
    CHECK(a.coeffs == b.coeffs);
}

TEST_CASE("K = 1 fit equals the rank-1 fit") {
    const LongitudinalData data = make_data(2, 6, 8, 700);
    const SplineSystem system = pta::build_basis(data.grid);
    FitOptions options;
    options.lambda_smooth = 0.2;
    options.sparsity = SparsityControl::penalty(0.1);
    const pta::Rank1Fit single = pta::fit_rank1(data, options, system);
    const pta::TrendModel model = pta::fit(data, options, system);
    REQUIRE(model.n_components() == 1);
    CHECK((model.scores.col(0) - single.scores).norm() == 0.0);
    CHECK((model.coeffs.row(0).transpose() - single.coeffs).norm() == 0.0);
}

TEST_CASE("noiseless three-group mixture explains everything with three components") {
    pta::SimDesign design = pta::SimDesign::sinusoid(40, 10, 2, 50);
    design.groups = {{1, 15}, {16, 25}, {26, 30}};
    design.noise.sigma = 0.0;
    design.seed = 12;
    const LongitudinalData raw = pta::generate(design);
    const auto [data, centering] = pta::center_features(raw);
    const SplineSystem system = pta::build_basis(data.grid);

    FitOptions options;
    options.lambda_smooth = 1e-6;
    options.components = 3;
    const pta::TrendModel model = pta::fit(data, options, system);
    REQUIRE(model.n_components() == 3);
    CHECK(model.cumulative_explained_variance() >= 0.999);
    for (double ev : model.explained_variance) {
        CHECK(ev >= 0.0);
        CHECK(ev <= 1.0);
    }
    for (int k = 0; k < 3; ++k) {
        CHECK(model.scores.col(k).norm() == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("unpenalized rank-1 scores match the leading singular vector") {
    const LongitudinalData data = make_data(1, 30, 12, 808);
    const SplineSystem system = pta::build_basis(data.grid);
    FitOptions options;
    options.lambda_smooth = 0.0;
    options.tol = 1e-12;
    const pta::Rank1Fit fit = pta::fit_rank1(data, options, system);
    const pta::Rank1Svd svd = pta::svd_rank1(data.values[0]);
    const double corr = std::abs(fit.scores.dot(svd.u));
    CHECK(corr >= 1.0 - 1e-6);
}

TEST_CASE("scale equivariance: scores invariant, trend scales with the data") {
    const LongitudinalData data = make_data(2, 6, 9, 901);
    const SplineSystem system = pta::build_basis(data.grid);
    const double c = 3.5;

    LongitudinalData scaled = data;
    for (auto& y : scaled.values) y *= c;

    FitOptions options;
    options.lambda_smooth = 0.3;  // unchanged: the trend system scales with the data
    options.sparsity = SparsityControl::penalty(0.4);
    FitOptions options_scaled = options;
    options_scaled.sparsity = SparsityControl::penalty(0.4 * c * c);  // gradient scales with c^2

    const pta::Rank1Fit base = pta::fit_rank1(data, options, system);
    const pta::Rank1Fit big = pta::fit_rank1(scaled, options_scaled, system);
    CHECK((base.scores - big.scores).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::VectorXd trend_base = system.basis * base.coeffs;
    const Eigen::VectorXd trend_big = system.basis * big.coeffs;
    CHECK((trend_big - c * trend_base).cwiseAbs().maxCoeff() <
          1e-8 * trend_big.cwiseAbs().maxCoeff());
}

TEST_CASE("predict returns the shared reconstruction and restores centering") {
    const LongitudinalData raw = make_data(2, 5, 8, 321);
    const auto [data, centering] = pta::center_features(raw);
    const SplineSystem system = pta::build_basis(data.grid);

    pta::TrendModel empty;
    empty.grid = data.grid;
    empty.scores.resize(5, 0);
    empty.coeffs.resize(0, system.n_coeffs());
    CHECK(pta::predict(empty, system).isZero(0.0));

    // exact noiseless rank-1 input reconstructs to numerical zero residual
    const Eigen::VectorXd a = unit_gaussian(5, 12);
    const Eigen::VectorXd raw_trend = unit_gaussian(8, 13);
    const LongitudinalData exact = rank1_data(a, raw_trend, 2);
    FitOptions options;
    options.lambda_smooth = 0.0;
    options.tol = 1e-14;
    const pta::TrendModel model = pta::fit(exact, options, pta::build_basis(exact.grid));
    const double sse = pta::masked_sse(exact, pta::predict(model, pta::build_basis(exact.grid)));
    double total = 0.0;
    for (const auto& y : exact.values) total += y.squaredNorm();
    CHECK(sse <= 1e-10 * total);

    // de-centering adds the means back
    FitOptions small;
    small.lambda_smooth = 0.1;
    const pta::TrendModel centered_model = pta::fit(data, small, system);
    const Eigen::MatrixXd rec = pta::predict(centered_model, system);
    const Eigen::MatrixXd rec_raw = pta::predict(centered_model, system, centering);
    CHECK((rec_raw - rec - centering.feature_means.replicate(1, 8)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("fit options are validated") {
    const LongitudinalData data = make_data(1, 4, 6, 2);
    const SplineSystem system = pta::build_basis(data.grid);
    FitOptions bad;
    bad.lambda_smooth = -1.0;
    CHECK_THROWS_AS(pta::fit_rank1(data, bad, system), pta::ValidationError);

    FitOptions bound;
    bound.sparsity = SparsityControl::l1_bound(0.5);  // below 1
    CHECK_THROWS_AS(pta::fit_rank1(data, bound, system), pta::ValidationError);
    bound.sparsity = SparsityControl::l1_bound(3.0);  // above sqrt(4)
    CHECK_THROWS_AS(pta::fit_rank1(data, bound, system), pta::ValidationError);

    FitOptions k_bad;
    k_bad.components = 5;  // min(P, T) = 4
    CHECK_THROWS_AS(pta::fit(data, k_bad, system), pta::ValidationError);
}
