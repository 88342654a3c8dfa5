#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pta/data.hpp"
#include "pta/solver.hpp"
#include "pta/spline.hpp"

namespace pta {

// One observed cell, addressed as (subject, feature, time) indices.
struct CellRef {
    int subject = 0;
    int feature = 0;
    int time = 0;
};

// Candidate grid for cross-validation. The smoothness axis is always
// lambda_smooth. The sparsity axis is one of:
//   l1_bound_values    L1 bounds on the unit-norm scores, strictly inside
//                      (1, sqrt(P))
//   threshold_values   scale-free soft thresholds (relative to the trend
//                      norm); the default, because a threshold grid can sit
//                      inside the gap between noise-level and signal-level
//                      score gradients, which an L1-bound bisection cannot
//                      reach when the bound maps onto a flat region of the
//                      L1 profile
struct TuningGrid {
    std::vector<double> lambda_smooth_values;
    std::vector<double> l1_bound_values;
    std::vector<double> threshold_values;
    int folds = 10;
    std::uint64_t seed = 0;

    bool uses_l1_bound() const { return !l1_bound_values.empty(); }
};

// Paper-regime defaults: lambda_smooth log-spaced 1e-4..1e2 (7 points);
// sparsity thresholds geometric over (0.005, 0.95) times the largest initial
// score gradient (12 points, computed from the data at cross_validate time).
TuningGrid default_grid(std::uint64_t seed = 0);

// 8 L1 bounds linearly spaced strictly inside (1, sqrt(P)).
std::vector<double> default_l1_bounds(int n_features);

struct CvEntry {
    double lambda_smooth = 0.0;
    double sparsity = 0.0;              // bound or threshold, per grid kind
    std::vector<double> fold_mse;
    double mean_mse = 0.0;
    double se_mse = 0.0;
    bool valid = true;                  // false when any fold fit failed
};

struct CvReport {
    std::vector<CvEntry> entries;       // grid order: lambda outer, sparsity inner
    int selected = -1;                  // index into entries
    std::string sparsity_kind;          // "l1_bound" or "threshold"
    std::string rule = "one-standard-error";
    int folds = 0;
    std::uint64_t seed = 0;

    const CvEntry& selected_entry() const { return entries.at(selected); }
};

// Partition of the observed cells into m near-equal folds (sizes differ by at
// most one), resampled up to 100 times until every feature keeps at least one
// observed cell in every training set.
std::vector<std::vector<CellRef>> make_folds(const LongitudinalData& data, int folds,
                                             std::uint64_t seed);

// Element-wise cross-validation of the rank-1 fit: for every grid pair and
// fold, fit with the fold's cells hidden and score the mean squared error on
// them. Selection: among pairs whose mean MSE is within one standard error of
// the minimizing pair's mean, prefer the most regularized (largest
// lambda_smooth, then strongest sparsity).
CvReport cross_validate(const LongitudinalData& data, const TuningGrid& grid,
                        const FitOptions& base_options, const SplineSystem& system, int jobs = 1);

// Fit options carrying a report's selected pair.
FitOptions options_from(const CvReport& report, const FitOptions& base_options);

// Index of the valid entry with the smallest mean MSE.
int min_mse_index(const CvReport& report);

}  // namespace pta
