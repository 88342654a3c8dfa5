#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pta/data.hpp"
#include "pta/solver.hpp"

namespace pta {

// Three generator families:
//   sinusoid_mixture    three sine groups at frequencies 1, 0.5, 0.25
//   damped_exponential  sin(0.5 pi t) times group-specific exponential decays
//   cosine_block        cos(0.6 t) on the first group, integer times 1..T
// Time grids: sinusoid and damped designs sample T equispaced points on
// [0, T/10] (constant sampling density, five full dominant cycles at T = 50);
// cosine_block uses integers 1..T.
enum class SignalFamily { sinusoid_mixture, damped_exponential, cosine_block };

struct NoiseSpec {
    enum class Kind { gaussian, ar1 };
    Kind kind = Kind::gaussian;
    double sigma = 0.1;  // marginal standard deviation
    double rho = 0.0;    // lag-1 correlation, ar1 only
};

struct GroupRange {
    int first = 0;  // 1-based, inclusive
    int last = -1;

    int size() const { return last - first + 1; }
    bool contains(int p) const { return p >= first && p <= last; }  // p 1-based
};

struct SimDesign {
    SignalFamily family = SignalFamily::sinusoid_mixture;
    int n_features = 400;
    int n_subjects = 1;
    int n_times = 50;
    int noisy_features = 100;  // trailing features carrying no signal
    int noisy_subjects = 0;    // trailing subjects carrying no signal
    NoiseSpec noise;
    std::vector<GroupRange> groups = {{1, 150}, {151, 250}, {251, 300}};
    std::array<double, 3> decay_rates = {-1.0, -2.0, -3.0};
    std::uint64_t seed = 0;

    static SimDesign sinusoid(int features, int noisy, int subjects, int times);
    static SimDesign damped(int features, int noisy, int subjects, int times);
    static SimDesign cosine_block();
};

void validate(const SimDesign& design);

TimeGrid design_time_grid(const SimDesign& design);

// Noise-free P x T signal matrix (identical for every signal subject).
Eigen::MatrixXd signal_matrix(const SimDesign& design);

// Deterministic given the seed: one noise stream, consumed subject-major,
// then feature, then time.
LongitudinalData generate(const SimDesign& design);

// Stationary AR(1): marginal variance sigma^2, lag-1 correlation rho, first
// value drawn from the stationary law.
Eigen::VectorXd ar1_noise(double rho, double sigma, int length, std::uint64_t seed);

// 1 / (sqrt(2) sigma); the amplitude-to-noise summary used for the sinusoid
// designs.
double snr(const SimDesign& design);

struct SimSummary {
    std::vector<double> nonzero_mean;     // per component
    std::vector<double> nonzero_sd;
    double ev_mean = 0.0;                 // cumulative over components
    double ev_sd = 0.0;
    double snr = 0.0;
    std::vector<double> trend_correlation; // |corr| vs generator patterns, mean over replicates
    int replicates = 0;
};

SimSummary summarize(const std::vector<TrendModel>& models, const SimDesign& design,
                     const std::optional<Eigen::MatrixXd>& truth_patterns);

// key = value design files; '#' starts a comment. Keys: family, features,
// subjects, times, noisy_features, noisy_subjects, noise, sigma, rho, groups,
// decay, seed.
SimDesign parse_design(std::istream& in, const std::string& origin);
SimDesign load_design(const std::string& path);
void write_design(const SimDesign& design, const std::string& path);

// Per-group generator patterns evaluated on the design grid (rows = groups).
Eigen::MatrixXd truth_patterns(const SimDesign& design);

}  // namespace pta
