#include "pta/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "pta/baseline.hpp"
#include "pta/errors.hpp"
#include "pta/parallel.hpp"
#include "pta/rng.hpp"

namespace pta {

TuningGrid default_grid(std::uint64_t seed) {
    TuningGrid grid;
    for (int e = -4; e <= 2; ++e) grid.lambda_smooth_values.push_back(std::pow(10.0, e));
    grid.seed = seed;
    return grid;
}

std::vector<double> default_l1_bounds(int n_features) {
    const double hi = std::sqrt(static_cast<double>(n_features));
    std::vector<double> bounds;
    for (int j = 1; j <= 8; ++j) bounds.push_back(1.0 + j * (hi - 1.0) / 9.0);
    return bounds;
}

namespace {

// Thresholds spanning everything-kept to almost-everything-dropped, scaled by
// the largest score gradient along the initial trend direction.
std::vector<double> data_scaled_thresholds(const LongitudinalData& data) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(data.n_features(), data.n_times());
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(data.n_features(), data.n_times());
    for (int n = 0; n < data.n_subjects(); ++n) {
        sum += data.observed[n].select(data.values[n], 0.0);
        count += data.observed[n].cast<double>().matrix();
    }
    const Eigen::MatrixXd mean =
        (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0);
    const Rank1Svd leading = svd_rank1(mean);
    const double scale = (sum * leading.v).cwiseAbs().maxCoeff();

    std::vector<double> thresholds;
    const int n = 12;
    const double lo = 0.005, hi = 0.95;
    const double ratio = std::pow(hi / lo, 1.0 / (n - 1));
    double f = lo;
    for (int i = 0; i < n; ++i, f *= ratio) thresholds.push_back(f * scale);
    return thresholds;
}

std::vector<CellRef> observed_cells(const LongitudinalData& data) {
    std::vector<CellRef> cells;
    cells.reserve(static_cast<std::size_t>(data.n_observed()));
    for (int n = 0; n < data.n_subjects(); ++n) {
        for (int p = 0; p < data.n_features(); ++p) {
            for (int t = 0; t < data.n_times(); ++t) {
                if (data.observed[n](p, t)) cells.push_back(CellRef{n, p, t});
            }
        }
    }
    return cells;
}

}  // namespace

std::vector<std::vector<CellRef>> make_folds(const LongitudinalData& data, int folds,
                                             std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    std::vector<CellRef> cells = observed_cells(data);
    const long long total = static_cast<long long>(cells.size());
    if (folds > total) {
        throw ValidationError("fold count " + std::to_string(folds) +
                              " exceeds the number of observed cells " + std::to_string(total));
    }

    // A feature observed once cannot stay in every training set.
    {
        std::vector<int> per_feature(data.n_features(), 0);
        for (const CellRef& c : cells) ++per_feature[c.feature];
        for (int p = 0; p < data.n_features(); ++p) {
            if (per_feature[p] < 2) {
                throw ValidationError("feature '" + data.feature_ids[p] +
                                      "' has fewer than 2 observed cells; every training set "
                                      "would starve it");
            }
        }
    }

    Rng rng(seed);
    const int base = static_cast<int>(total / folds);
    const int extra = static_cast<int>(total % folds);
    for (int attempt = 0; attempt < 100; ++attempt) {
        rng.shuffle(cells);
        std::vector<std::vector<CellRef>> parts(folds);
        std::size_t offset = 0;
        for (int f = 0; f < folds; ++f) {
            const int size = base + (f < extra ? 1 : 0);
            parts[f].assign(cells.begin() + offset, cells.begin() + offset + size);
            offset += size;
        }
        // Reject any fold that swallowed every observed cell of some feature.
        bool ok = true;
        std::vector<int> per_feature(data.n_features(), 0);
        for (const CellRef& c : cells) ++per_feature[c.feature];
        for (int f = 0; f < folds && ok; ++f) {
            std::vector<int> in_fold(data.n_features(), 0);
            for (const CellRef& c : parts[f]) ++in_fold[c.feature];
            for (int p = 0; p < data.n_features(); ++p) {
                if (in_fold[p] == per_feature[p]) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok) return parts;
    }
    throw ValidationError(
        "could not partition cells into folds keeping every feature in every training set "
        "(100 attempts); fewer folds may help");
}

CvReport cross_validate(const LongitudinalData& data, const TuningGrid& grid,
                        const FitOptions& base_options, const SplineSystem& system, int jobs) {
    if (grid.lambda_smooth_values.empty()) {
        throw ValidationError("tuning grid has no smoothness values");
    }
    const bool bound_mode = grid.uses_l1_bound();
    std::vector<double> sparsity_values =
        bound_mode ? grid.l1_bound_values : grid.threshold_values;
    if (!bound_mode && sparsity_values.empty()) {
        sparsity_values = data_scaled_thresholds(data);
    }
    if (bound_mode) {
        const double root_p = std::sqrt(static_cast<double>(data.n_features()));
        for (double c : sparsity_values) {
            if (!(c > 1.0 && c < root_p)) {
                throw ValidationError("L1 bounds must lie strictly inside (1, sqrt(P))");
            }
        }
    }

    const auto folds = make_folds(data, grid.folds, grid.seed);
    const int m = static_cast<int>(folds.size());

    // Per-fold training copies: values are shared content-wise, only the mask
    // loses the held-out cells.
    std::vector<LongitudinalData> training(m, data);
    for (int f = 0; f < m; ++f) {
        for (const CellRef& c : folds[f]) training[f].observed[c.subject](c.feature, c.time) = false;
    }

    CvReport report;
    report.sparsity_kind = bound_mode ? "l1_bound" : "threshold";
    report.folds = m;
    report.seed = grid.seed;
    for (double lambda : grid.lambda_smooth_values) {
        for (double s : sparsity_values) {
            CvEntry entry;
            entry.lambda_smooth = lambda;
            entry.sparsity = s;
            entry.fold_mse.assign(m, 0.0);
            report.entries.push_back(std::move(entry));
        }
    }

    const int n_pairs = static_cast<int>(report.entries.size());
    parallel_for(n_pairs * m, jobs, [&](int task) {
        const int pair = task / m;
        const int fold = task % m;
        CvEntry& entry = report.entries[pair];
        FitOptions options = base_options;
        options.components = 1;
        options.lambda_smooth = entry.lambda_smooth;
        options.sparsity = bound_mode ? SparsityControl::l1_bound(entry.sparsity)
                                      : SparsityControl::scaled_penalty(entry.sparsity);
        double mse;
        try {
            const Rank1Fit fit = fit_rank1(training[fold], options, system);
            Eigen::MatrixXd rec;
            if (fit.diagnostics.vanished) {
                rec = Eigen::MatrixXd::Zero(data.n_features(), data.n_times());
            } else {
                rec = fit.scores * (system.basis * fit.coeffs).transpose();
            }
            double sse = 0.0;
            for (const CellRef& c : folds[fold]) {
                const double r = data.values[c.subject](c.feature, c.time) - rec(c.feature, c.time);
                sse += r * r;
            }
            mse = sse / static_cast<double>(folds[fold].size());
        } catch (const std::exception&) {
            mse = std::numeric_limits<double>::quiet_NaN();
        }
        entry.fold_mse[fold] = mse;
    });

    for (CvEntry& entry : report.entries) {
        double mean = 0.0;
        for (double v : entry.fold_mse) {
            if (std::isnan(v)) entry.valid = false;
            mean += v;
        }
        if (!entry.valid) continue;
        mean /= m;
        double var = 0.0;
        for (double v : entry.fold_mse) var += (v - mean) * (v - mean);
        entry.mean_mse = mean;
        entry.se_mse = m > 1 ? std::sqrt(var / (m - 1)) / std::sqrt(static_cast<double>(m)) : 0.0;
    }

    int arg_min = -1;
    for (int i = 0; i < n_pairs; ++i) {
        if (!report.entries[i].valid) continue;
        if (arg_min < 0 || report.entries[i].mean_mse < report.entries[arg_min].mean_mse) {
            arg_min = i;
        }
    }
    if (arg_min < 0) throw SolverError("every tuning pair failed cross-validation");

    // One-standard-error rule: most regularized pair whose mean is within one
    // SE of the minimum. Stronger sparsity means a smaller bound in bound
    // mode and a larger threshold otherwise.
    const double cutoff = report.entries[arg_min].mean_mse + report.entries[arg_min].se_mse;
    int best = -1;
    for (int i = 0; i < n_pairs; ++i) {
        const CvEntry& e = report.entries[i];
        if (!e.valid || e.mean_mse > cutoff) continue;
        if (best < 0) {
            best = i;
            continue;
        }
        const CvEntry& b = report.entries[best];
        const bool stronger_sparsity = bound_mode ? e.sparsity < b.sparsity
                                                  : e.sparsity > b.sparsity;
        if (e.lambda_smooth > b.lambda_smooth ||
            (e.lambda_smooth == b.lambda_smooth && stronger_sparsity)) {
            best = i;
        }
    }
    report.selected = best;
    return report;
}

int min_mse_index(const CvReport& report) {
    int best = -1;
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        if (!report.entries[i].valid) continue;
        if (best < 0 || report.entries[i].mean_mse < report.entries[best].mean_mse) {
            best = static_cast<int>(i);
        }
    }
    if (best < 0) throw SolverError("every tuning pair failed cross-validation");
    return best;
}

FitOptions options_from(const CvReport& report, const FitOptions& base_options) {
    FitOptions options = base_options;
    const CvEntry& entry = report.selected_entry();
    options.lambda_smooth = entry.lambda_smooth;
    options.sparsity = report.sparsity_kind == "l1_bound"
                           ? SparsityControl::l1_bound(entry.sparsity)
                           : SparsityControl::scaled_penalty(entry.sparsity);
    return options;
}

}  // namespace pta
