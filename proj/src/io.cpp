#include "pta/io.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "pta/errors.hpp"

namespace pta {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_tsv(const Eigen::MatrixXd& matrix, const std::string& path,
               const std::vector<std::string>& column_names,
               const std::vector<std::string>& row_names, const std::string& corner) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file '" + path + "'");
    if (!column_names.empty()) {
        if (!row_names.empty()) out << corner << '\t';
        for (std::size_t j = 0; j < column_names.size(); ++j) {
            out << column_names[j] << (j + 1 < column_names.size() ? '\t' : '\n');
        }
    }
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        if (!row_names.empty()) out << row_names[static_cast<std::size_t>(i)] << '\t';
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            out << format_double(matrix(i, j)) << (j + 1 < matrix.cols() ? '\t' : '\n');
        }
    }
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

}  // namespace

json model_to_json(const TrendModel& model, const CenteringRecord& centering,
                   const std::vector<std::string>& feature_ids) {
    json j;
    j["format"] = "pta-model/1";
    j["components"] = model.n_components();
    j["grid"] = vector_to_json(model.grid.points);
    j["scores"] = matrix_to_json(model.scores);
    j["coefficients"] = matrix_to_json(model.coeffs);
    j["trends"] = matrix_to_json(model.trends);
    j["explained_variance"] = model.explained_variance;
    j["feature_ids"] = feature_ids;
    j["centering"] = vector_to_json(centering.feature_means);

    json tuning = json::array();
    for (const ComponentTuning& t : model.tuning) {
        json entry;
        entry["lambda1"] = t.lambda_smooth;
        if (t.l1_bound) entry["c2"] = *t.l1_bound;
        entry["lambda2"] = t.lambda_sparse;
        tuning.push_back(std::move(entry));
    }
    j["tuning"] = std::move(tuning);

    json diagnostics = json::array();
    bool any_warning = false;
    for (const FitDiagnostics& d : model.diagnostics) {
        json entry;
        entry["iterations"] = d.iterations;
        entry["converged"] = d.converged;
        entry["monotone"] = d.monotone;
        entry["vanished"] = d.vanished;
        entry["objective_initial"] = d.objective_trace.empty() ? 0.0 : d.objective_trace.front();
        entry["objective_final"] = d.objective_trace.empty() ? 0.0 : d.objective_trace.back();
        diagnostics.push_back(std::move(entry));
        if (!d.converged || d.vanished) any_warning = true;
    }
    j["diagnostics"] = std::move(diagnostics);
    j["warning"] = any_warning;
    return j;
}

TrendModel model_from_json(const json& j) {
    TrendModel model;
    model.grid = make_time_grid(j.at("grid").get<std::vector<double>>());
    model.scores = matrix_from_json(j.at("scores"));
    model.coeffs = matrix_from_json(j.at("coefficients"));
    model.trends = matrix_from_json(j.at("trends"));
    model.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    for (const json& t : j.at("tuning")) {
        ComponentTuning tuning;
        tuning.lambda_smooth = t.at("lambda1").get<double>();
        if (t.contains("c2")) tuning.l1_bound = t.at("c2").get<double>();
        tuning.lambda_sparse = t.at("lambda2").get<double>();
        model.tuning.push_back(tuning);
    }
    return model;
}

json cv_report_to_json(const CvReport& report) {
    json j;
    j["format"] = "pta-cv/1";
    j["folds"] = report.folds;
    j["seed"] = report.seed;
    j["rule"] = report.rule;
    j["sparsity_kind"] = report.sparsity_kind;
    j["selected"] = report.selected;
    json entries = json::array();
    for (const CvEntry& e : report.entries) {
        json entry;
        entry["lambda1"] = e.lambda_smooth;
        entry[report.sparsity_kind == "l1_bound" ? "c2" : "threshold"] = e.sparsity;
        entry["fold_mse"] = e.fold_mse;
        entry["mean_mse"] = e.mean_mse;
        entry["se_mse"] = e.se_mse;
        entry["valid"] = e.valid;
        entries.push_back(std::move(entry));
    }
    j["entries"] = std::move(entries);
    return j;
}

void write_cv_tsv(const CvReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file '" + path + "'");
    const char* sparsity_col = report.sparsity_kind == "l1_bound" ? "c2" : "threshold";
    out << "lambda1\t" << sparsity_col << "\tfold\tmse\n";
    for (const CvEntry& e : report.entries) {
        for (std::size_t f = 0; f < e.fold_mse.size(); ++f) {
            out << format_double(e.lambda_smooth) << '\t' << format_double(e.sparsity) << '\t' << f
                << '\t' << format_double(e.fold_mse[f]) << '\n';
        }
    }
}

json summary_to_json(const SimSummary& summary) {
    json j;
    j["format"] = "pta-sim-summary/1";
    j["replicates"] = summary.replicates;
    j["nonzero_mean"] = summary.nonzero_mean;
    j["nonzero_sd"] = summary.nonzero_sd;
    j["explained_variance_mean"] = summary.ev_mean;
    j["explained_variance_sd"] = summary.ev_sd;
    j["snr"] = summary.snr;
    if (!summary.trend_correlation.empty()) j["trend_correlation"] = summary.trend_correlation;
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file '" + path + "'");
    out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file '" + path + "'");
    json j;
    in >> j;
    return j;
}

}  // namespace pta
