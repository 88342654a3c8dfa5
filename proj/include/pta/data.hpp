#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pta/time_grid.hpp"

namespace pta {

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Longitudinal observations: one features-by-times matrix per subject plus an
// observed-cell mask of the same shape. All subjects share one time grid;
// cells for times a subject was not measured are simply unobserved.
struct LongitudinalData {
    std::vector<Eigen::MatrixXd> values;   // per subject, P x T
    std::vector<BoolArray> observed;       // per subject, P x T
    TimeGrid grid;
    std::vector<std::string> feature_ids;  // length P
    std::vector<std::string> subject_ids;  // length N

    int n_subjects() const { return static_cast<int>(values.size()); }
    int n_features() const { return values.empty() ? 0 : static_cast<int>(values[0].rows()); }
    int n_times() const { return grid.size(); }
    long long n_observed() const;
};

// Per-feature means removed at centering time; adding them back restores the
// raw scale of predictions.
struct CenteringRecord {
    Eigen::VectorXd feature_means;
};

// Long-format CSV with header subject,feature,time,value. An empty, NA, or
// NaN value field marks an explicitly missing cell. Duplicate
// (subject,feature,time) rows and features with zero observed cells are
// rejected. The time grid is the sorted set of distinct times; subject and
// feature order follows first appearance.
LongitudinalData load_long_csv(const std::string& path);
LongitudinalData load_long_csv(std::istream& in, const std::string& origin);

void write_long_csv(const LongitudinalData& data, const std::string& path);

// Subtracts the observed-cell mean of every feature.
std::pair<LongitudinalData, CenteringRecord> center_features(const LongitudinalData& data);

// Sum of squared residuals over observed cells against a shared P x T
// reconstruction. Accumulation order is fixed (subject, then feature, then
// time) so repeated runs agree bit for bit.
double masked_sse(const LongitudinalData& data, const Eigen::MatrixXd& reconstruction);

}  // namespace pta
