// Command-line front end: fit | cv | simulate | compare.
//
// Every command is a pure function of its inputs and the seed; rerunning with
// the same arguments produces byte-identical artifacts. stdout carries a
// short human summary, machine-readable results go to files, diagnostics to
// stderr. Exit codes: 0 success, 2 input or validation error, 3 numerical
// failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pta/baseline.hpp"
#include "pta/data.hpp"
#include "pta/errors.hpp"
#include "pta/io.hpp"
#include "pta/parallel.hpp"
#include "pta/rng.hpp"
#include "pta/simulate.hpp"
#include "pta/solver.hpp"
#include "pta/spline.hpp"
#include "pta/tuning.hpp"

namespace fs = std::filesystem;
using pta::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct CommonConfig {
    std::string out_dir = ".";
    int jobs = 0;  // 0 = hardware default
    std::uint64_t seed = 0;
};

// Precedence: flags > environment > config file > defaults. Values read here
// become the flag defaults, so CLI11 only overrides what was given.
void apply_env(CommonConfig& common) {
    if (const char* dir = std::getenv("PTA_OUT_DIR")) common.out_dir = dir;
    if (const char* jobs = std::getenv("PTA_JOBS")) common.jobs = std::atoi(jobs);
}

int effective_jobs(const CommonConfig& common) {
    return common.jobs > 0 ? common.jobs : pta::default_jobs();
}

fs::path out_path(const CommonConfig& common, const std::string& name) {
    fs::create_directories(common.out_dir);
    return fs::path(common.out_dir) / name;
}

std::vector<double> parse_grid_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    return values;
}

struct FitArgs {
    std::string input;
    int components = 1;
    double lambda1 = 1e-4;
    std::optional<double> c2;
    std::optional<double> lambda2;
    std::optional<double> threshold;
    int max_iter = 500;
    double tol = 1e-7;
    int restarts = 1;
};

pta::FitOptions to_options(const FitArgs& args, std::uint64_t seed) {
    pta::FitOptions options;
    options.lambda_smooth = args.lambda1;
    options.components = args.components;
    options.max_iter = args.max_iter;
    options.tol = args.tol;
    options.restarts = args.restarts;
    options.seed = seed;
    const int given = int(bool(args.c2)) + int(bool(args.lambda2)) + int(bool(args.threshold));
    if (given > 1) {
        throw pta::ValidationError("give at most one of --c2, --lambda2, --threshold");
    }
    if (args.c2) options.sparsity = pta::SparsityControl::l1_bound(*args.c2);
    if (args.lambda2) options.sparsity = pta::SparsityControl::penalty(*args.lambda2);
    if (args.threshold) options.sparsity = pta::SparsityControl::scaled_penalty(*args.threshold);
    return options;
}

void write_model_artifacts(const CommonConfig& common, const pta::TrendModel& model,
                           const pta::CenteringRecord& centering,
                           const std::vector<std::string>& feature_ids,
                           const pta::SplineSystem& system) {
    pta::write_json(pta::model_to_json(model, centering, feature_ids),
                    out_path(common, "model.json").string());

    std::vector<std::string> time_names;
    for (int t = 0; t < system.n_times(); ++t) {
        time_names.push_back(pta::format_double(system.grid.points(t)));
    }
    std::vector<std::string> component_names;
    for (int k = 0; k < model.n_components(); ++k) {
        component_names.push_back("PT" + std::to_string(k + 1));
    }
    pta::write_tsv(model.trends, out_path(common, "trends.tsv").string(), time_names,
                   component_names, "component");
    pta::write_tsv(model.scores, out_path(common, "scores.tsv").string(), component_names,
                   feature_ids, "feature");

    Eigen::MatrixXd ev(model.n_components(), 2);
    double cumulative = 0.0;
    for (int k = 0; k < model.n_components(); ++k) {
        cumulative += model.explained_variance[k];
        ev(k, 0) = model.explained_variance[k];
        ev(k, 1) = cumulative;
    }
    pta::write_tsv(ev, out_path(common, "ev.tsv").string(), {"explained", "cumulative"},
                   component_names, "component");
}

int cmd_fit(const CommonConfig& common, const FitArgs& args) {
    const pta::LongitudinalData raw = pta::load_long_csv(args.input);
    const auto [data, centering] = pta::center_features(raw);
    const pta::SplineSystem system = pta::build_basis(data.grid);
    const pta::FitOptions options = to_options(args, common.seed);
    const pta::TrendModel model = pta::fit(data, options, system);
    write_model_artifacts(common, model, centering, data.feature_ids, system);

    bool warned = false;
    for (const pta::FitDiagnostics& d : model.diagnostics) {
        if (!d.converged && !d.vanished) {
            std::cerr << "warning: a component stopped at max_iter without converging\n";
            warned = true;
        }
        if (d.vanished) {
            std::cerr << "warning: a component vanished; model truncated to "
                      << model.n_components() << " component(s)\n";
            warned = true;
        }
    }
    (void)warned;
    std::cout << "fit: " << model.n_components() << " component(s), cumulative EV "
              << pta::format_double(model.cumulative_explained_variance()) << "\n";
    return kExitOk;
}

struct CvArgs {
    std::string input;
    std::string lambda1_grid;
    std::string c2_grid;
    std::string threshold_grid;
    int folds = 10;
};

int cmd_cv(const CommonConfig& common, const CvArgs& args) {
    const pta::LongitudinalData raw = pta::load_long_csv(args.input);
    const auto [data, centering] = pta::center_features(raw);
    const pta::SplineSystem system = pta::build_basis(data.grid);

    pta::TuningGrid grid = pta::default_grid(common.seed);
    grid.folds = args.folds;
    if (!args.lambda1_grid.empty()) grid.lambda_smooth_values = parse_grid_list(args.lambda1_grid);
    if (!args.c2_grid.empty() && !args.threshold_grid.empty()) {
        throw pta::ValidationError("give either --c2-grid or --threshold-grid, not both");
    }
    if (!args.c2_grid.empty()) grid.l1_bound_values = parse_grid_list(args.c2_grid);
    if (!args.threshold_grid.empty()) grid.threshold_values = parse_grid_list(args.threshold_grid);

    pta::FitOptions base;
    base.seed = common.seed;
    const pta::CvReport report =
        pta::cross_validate(data, grid, base, system, effective_jobs(common));

    pta::write_json(pta::cv_report_to_json(report), out_path(common, "cv_report.json").string());
    pta::write_cv_tsv(report, out_path(common, "cv_report.tsv").string());

    const pta::CvEntry& sel = report.selected_entry();
    std::cout << "selected: lambda1=" << pta::format_double(sel.lambda_smooth) << " "
              << (report.sparsity_kind == "l1_bound" ? "c2=" : "threshold=")
              << pta::format_double(sel.sparsity) << " (mean mse "
              << pta::format_double(sel.mean_mse) << ")\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string design_path;
    int replicates = 1;
    bool run_fit = false;
    int components = 3;
    int folds = 10;
};

int cmd_simulate(const CommonConfig& common, const SimulateArgs& args) {
    pta::SimDesign design = pta::load_design(args.design_path);
    if (common.seed != 0) design.seed = common.seed;

    std::vector<pta::TrendModel> models(args.replicates);
    std::vector<std::string> csv_names(args.replicates);
    std::vector<int> status(args.replicates, 0);

    pta::parallel_for(args.replicates, args.run_fit ? effective_jobs(common) : 1, [&](int rep) {
        pta::SimDesign rep_design = design;
        rep_design.seed = pta::split_seed(design.seed, static_cast<std::uint64_t>(rep));
        const pta::LongitudinalData raw = pta::generate(rep_design);
        csv_names[rep] =
            args.replicates == 1 ? "data.csv" : "data_rep" + std::to_string(rep + 1) + ".csv";
        pta::write_long_csv(raw, out_path(common, csv_names[rep]).string());
        if (!args.run_fit) return;

        const auto [data, centering] = pta::center_features(raw);
        const pta::SplineSystem system = pta::build_basis(data.grid);
        pta::TuningGrid grid = pta::default_grid(rep_design.seed);
        grid.folds = args.folds;
        pta::FitOptions base;
        base.seed = rep_design.seed;
        const pta::CvReport report = pta::cross_validate(data, grid, base, system, 1);
        pta::FitOptions options = pta::options_from(report, base);
        options.components = args.components;
        models[rep] = pta::fit(data, options, system);
        status[rep] = 1;
    });

    json j;
    j["design"] = args.design_path;
    j["replicates"] = args.replicates;
    j["seed"] = design.seed;
    j["snr"] = pta::snr(design);
    if (args.run_fit) {
        const pta::SimSummary summary =
            pta::summarize(models, design, pta::truth_patterns(design));
        j["summary"] = pta::summary_to_json(summary);
        std::cout << "simulate: " << args.replicates << " replicate(s); EV "
                  << pta::format_double(summary.ev_mean) << " +- "
                  << pta::format_double(summary.ev_sd) << "; nonzero means";
        for (double c : summary.nonzero_mean) std::cout << " " << pta::format_double(c);
        std::cout << "\n";
    } else {
        std::cout << "simulate: wrote " << args.replicates << " replicate(s)\n";
    }
    pta::write_json(j, out_path(common, "summary.json").string());
    return kExitOk;
}

struct CompareArgs {
    std::string design_path;
    std::string input;
    int folds = 10;
};

int cmd_compare(const CommonConfig& common, const CompareArgs& args) {
    pta::LongitudinalData raw;
    Eigen::MatrixXd truth;
    if (!args.input.empty()) {
        raw = pta::load_long_csv(args.input);
        if (raw.n_subjects() != 1) {
            throw pta::ValidationError("compare expects single-subject (matrix) input");
        }
        truth = raw.values[0];  // no generator available: compare against the data itself
    } else {
        pta::SimDesign design =
            args.design_path.empty() ? pta::SimDesign::cosine_block() : pta::load_design(args.design_path);
        if (common.seed != 0) design.seed = common.seed;
        raw = pta::generate(design);
        truth = pta::signal_matrix(design);
    }

    const auto [data, centering] = pta::center_features(raw);
    const pta::SplineSystem system = pta::build_basis(data.grid);

    // Head-to-head reconstruction: take each side's best-predicting tuning
    // (plain minimum CV error, no parsimony preference).
    pta::TuningGrid grid;
    for (int e = -8; e <= 2; ++e) grid.lambda_smooth_values.push_back(std::pow(10.0, e));
    grid.folds = args.folds;
    grid.seed = common.seed;
    pta::FitOptions base;
    base.seed = common.seed;
    pta::CvReport report =
        pta::cross_validate(data, grid, base, system, effective_jobs(common));
    report.selected = pta::min_mse_index(report);
    report.rule = "min-mse";
    pta::FitOptions options = pta::options_from(report, base);
    options.components = 1;
    const pta::TrendModel model = pta::fit(data, options, system);
    const Eigen::MatrixXd rec_trend = pta::predict(model, system, centering);

    // The baseline gets the same feature-sparsity budget (the L1 norm of the
    // fitted scores) and a dense time profile.
    const int P = data.n_features();
    const int T = data.n_times();
    double budget = std::sqrt(static_cast<double>(P));
    if (model.n_components() > 0) {
        budget = std::clamp(model.scores.col(0).lpNorm<1>(), 1.0,
                            std::sqrt(static_cast<double>(P)));
    }
    Eigen::MatrixXd centered = data.values[0];
    for (int p = 0; p < P; ++p) {
        for (int t = 0; t < T; ++t) {
            if (!data.observed[0](p, t)) centered(p, t) = 0.0;
        }
    }
    const pta::PmaModel pma =
        pta::fit_pma_rank1(centered, budget, std::sqrt(static_cast<double>(T)));
    Eigen::MatrixXd rec_pma = pma.reconstruction();
    rec_pma.colwise() += centering.feature_means;

    const double mse_trend = (rec_trend - truth).squaredNorm() / truth.size();
    const double mse_pma = (rec_pma - truth).squaredNorm() / truth.size();

    json j;
    j["format"] = "pta-compare/1";
    j["pta_mse"] = mse_trend;
    j["pma_mse"] = mse_pma;
    j["winner"] = mse_trend <= mse_pma ? "pta" : "pma";
    j["seed"] = common.seed;
    pta::write_json(j, out_path(common, "compare.json").string());

    std::vector<std::string> time_names;
    for (int t = 0; t < T; ++t) time_names.push_back(pta::format_double(data.grid.points(t)));
    Eigen::MatrixXd profiles = Eigen::MatrixXd::Zero(2, T);
    if (model.n_components() > 0) profiles.row(0) = model.trends.row(0);
    profiles.row(1) = (pma.d * pma.v).transpose();
    pta::write_tsv(profiles, out_path(common, "profiles.tsv").string(), time_names,
                   {"pta", "pma"}, "method");

    std::cout << "compare: pta_mse=" << pta::format_double(mse_trend)
              << " pma_mse=" << pta::format_double(mse_pma)
              << " winner=" << j["winner"].get<std::string>() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smooth sparse trend extraction for longitudinal panels"};
    app.require_subcommand(1);

    CommonConfig common;
    apply_env(common);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags win over its values)")
        ->check(CLI::ExistingFile);

    // Scan for --config first so its values become defaults below.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    }

    FitArgs fit_args;
    CvArgs cv_args;
    SimulateArgs sim_args;
    CompareArgs cmp_args;

    try {
        if (!config_path.empty()) {
            const json cfg = pta::read_json(config_path);
            if (cfg.contains("out_dir")) common.out_dir = cfg["out_dir"].get<std::string>();
            if (cfg.contains("jobs")) common.jobs = cfg["jobs"].get<int>();
            if (cfg.contains("seed")) common.seed = cfg["seed"].get<std::uint64_t>();
            if (cfg.contains("input")) fit_args.input = cfg["input"].get<std::string>();
            if (cfg.contains("design")) sim_args.design_path = cfg["design"].get<std::string>();
            cv_args.input = fit_args.input;
            cmp_args.design_path = sim_args.design_path;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    auto add_common = [&](CLI::App* sub) {
        sub->fallthrough();
        sub->add_option("--out-dir", common.out_dir, "Directory for artifacts");
        sub->add_option("--jobs", common.jobs, "Worker thread cap (0 = hardware)");
        sub->add_option("--seed", common.seed, "Top-level seed");
    };

    CLI::App* fit = app.add_subcommand("fit", "Fit a trend model to a long CSV");
    fit->add_option("--input", fit_args.input, "Long CSV (subject,feature,time,value)");
    fit->add_option("--k", fit_args.components, "Component count");
    fit->add_option("--lambda1", fit_args.lambda1, "Smoothness weight");
    fit->add_option("--c2", fit_args.c2, "L1 bound on unit-norm scores, in [1, sqrt(P)]");
    fit->add_option("--lambda2", fit_args.lambda2, "Soft-threshold weight on score gradients");
    fit->add_option("--threshold", fit_args.threshold, "Scale-free sparsity threshold");
    fit->add_option("--max-iter", fit_args.max_iter, "Iteration cap per component");
    fit->add_option("--tol", fit_args.tol, "Relative objective-change tolerance");
    fit->add_option("--restarts", fit_args.restarts, "Random restarts (1 = SVD start only)");
    add_common(fit);

    CLI::App* cv = app.add_subcommand("cv", "Cross-validate tuning parameters");
    cv->add_option("--input", cv_args.input, "Long CSV (subject,feature,time,value)");
    cv->add_option("--lambda1-grid", cv_args.lambda1_grid, "Comma-separated smoothness values");
    cv->add_option("--c2-grid", cv_args.c2_grid, "Comma-separated L1 bounds in (1, sqrt(P))");
    cv->add_option("--threshold-grid", cv_args.threshold_grid,
                   "Comma-separated scale-free thresholds");
    cv->add_option("--folds", cv_args.folds, "Fold count (>= 2)");
    add_common(cv);

    CLI::App* sim = app.add_subcommand("simulate", "Generate data from a design file");
    sim->add_option("--design", sim_args.design_path, "key = value design file");
    sim->add_option("--replicates", sim_args.replicates, "Replicate count");
    sim->add_flag("--fit", sim_args.run_fit, "Cross-validate and fit every replicate");
    sim->add_option("--k", sim_args.components, "Components per replicate fit");
    sim->add_option("--folds", sim_args.folds, "CV folds when fitting");
    add_common(sim);

    CLI::App* cmp = app.add_subcommand("compare", "Trend model vs penalized rank-1 baseline");
    cmp->add_option("--design", cmp_args.design_path, "Design file (default: cosine block)");
    cmp->add_option("--input", cmp_args.input, "Long CSV instead of a design");
    cmp->add_option("--folds", cmp_args.folds, "CV folds");
    add_common(cmp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (fit->parsed() || cv->parsed()) {
            const std::string& input = fit->parsed() ? fit_args.input : cv_args.input;
            if (input.empty()) throw pta::ValidationError("no --input (or config 'input') given");
        }
        if (sim->parsed() && sim_args.design_path.empty()) {
            throw pta::ValidationError("no --design (or config 'design') given");
        }
        if (fit->parsed()) return cmd_fit(common, fit_args);
        if (cv->parsed()) return cmd_cv(common, cv_args);
        if (sim->parsed()) return cmd_simulate(common, sim_args);
        if (cmp->parsed()) return cmd_compare(common, cmp_args);
    } catch (const pta::SolverError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
