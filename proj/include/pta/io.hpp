#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "pta/data.hpp"
#include "pta/simulate.hpp"
#include "pta/solver.hpp"
#include "pta/tuning.hpp"

namespace pta {

using nlohmann::json;

// TSV with 17 significant digits, enough to round-trip doubles exactly.
void write_tsv(const Eigen::MatrixXd& matrix, const std::string& path,
               const std::vector<std::string>& column_names = {},
               const std::vector<std::string>& row_names = {},
               const std::string& corner = "");

std::string format_double(double value);

json model_to_json(const TrendModel& model, const CenteringRecord& centering,
                   const std::vector<std::string>& feature_ids);
TrendModel model_from_json(const json& j);

json cv_report_to_json(const CvReport& report);
void write_cv_tsv(const CvReport& report, const std::string& path);

json summary_to_json(const SimSummary& summary);

void write_json(const json& j, const std::string& path);
json read_json(const std::string& path);

}  // namespace pta
