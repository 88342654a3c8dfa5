#include "pta/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "pta/errors.hpp"

namespace pta {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool is_missing_token(const std::string& s) {
    if (s.empty()) return true;
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "na" || lower == "nan";
}

double parse_number(const std::string& s, const char* what, long row) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw FormatError(std::string("row ") + std::to_string(row) + ": cannot parse " + what +
                          " '" + s + "'");
    }
    return v;
}

}  // namespace

long long LongitudinalData::n_observed() const {
    long long total = 0;
    for (const auto& mask : observed) total += mask.count();
    return total;
}

LongitudinalData load_long_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError(origin + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        const auto header = split_csv_line(line);
        const std::vector<std::string> expected = {"subject", "feature", "time", "value"};
        if (header.size() != 4 || !std::equal(header.begin(), header.end(), expected.begin())) {
            throw FormatError(origin + ": header must be 'subject,feature,time,value'");
        }
    }

    struct Cell {
        int subject, feature, time_rank;
        double value;
        bool missing;
    };
    std::vector<Cell> cells;
    std::vector<std::string> subject_ids, feature_ids;
    std::unordered_map<std::string, int> subject_index, feature_index;
    std::map<double, int> time_rank;  // keyed on the parsed value; ranks assigned after the scan
    std::vector<std::tuple<int, int, double, std::string>> raw;  // (subject, feature, time, token)

    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw FormatError(origin + ": row " + std::to_string(row) + ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        }
        auto intern = [](std::unordered_map<std::string, int>& index, std::vector<std::string>& ids,
                         const std::string& id) {
            auto it = index.find(id);
            if (it != index.end()) return it->second;
            const int next = static_cast<int>(ids.size());
            index.emplace(id, next);
            ids.push_back(id);
            return next;
        };
        const int si = intern(subject_index, subject_ids, fields[0]);
        const int fi = intern(feature_index, feature_ids, fields[1]);
        const double t = parse_number(fields[2], "time", row);
        time_rank.emplace(t, 0);
        raw.emplace_back(si, fi, t, fields[3]);
    }
    if (raw.empty()) throw FormatError(origin + ": no data rows");

    int rank = 0;
    for (auto& [t, r] : time_rank) r = rank++;
    const int N = static_cast<int>(subject_ids.size());
    const int P = static_cast<int>(feature_ids.size());
    const int T = rank;

    std::vector<double> times;
    times.reserve(T);
    for (const auto& [t, r] : time_rank) times.push_back(t);

    LongitudinalData data;
    data.grid = make_time_grid(times);
    data.subject_ids = std::move(subject_ids);
    data.feature_ids = std::move(feature_ids);
    data.values.assign(N, Eigen::MatrixXd::Zero(P, T));
    data.observed.assign(N, BoolArray::Constant(P, T, false));

    std::set<std::tuple<int, int, int>> seen;
    long data_row = 1;
    for (const auto& [si, fi, t, token] : raw) {
        ++data_row;
        const int ti = time_rank.at(t);
        if (!seen.emplace(si, fi, ti).second) {
            std::ostringstream msg;
            msg << origin << ": duplicate cell (" << data.subject_ids[si] << ", "
                << data.feature_ids[fi] << ", t=" << t << ")";
            throw FormatError(msg.str());
        }
        if (is_missing_token(token)) continue;
        data.values[si](fi, ti) = parse_number(token, "value", data_row);
        data.observed[si](fi, ti) = true;
    }

    for (int p = 0; p < P; ++p) {
        bool any = false;
        for (int n = 0; n < N && !any; ++n) any = data.observed[n].row(p).any();
        if (!any) {
            throw ValidationError(origin + ": feature '" + data.feature_ids[p] +
                                  "' has no observed cells");
        }
    }
    return data;
}

LongitudinalData load_long_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file '" + path + "'");
    return load_long_csv(in, path);
}

void write_long_csv(const LongitudinalData& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file '" + path + "'");
    out << "subject,feature,time,value\n";
    char buf[64];
    for (int n = 0; n < data.n_subjects(); ++n) {
        for (int p = 0; p < data.n_features(); ++p) {
            for (int t = 0; t < data.n_times(); ++t) {
                if (!data.observed[n](p, t)) continue;
                out << data.subject_ids[n] << ',' << data.feature_ids[p] << ',';
                std::snprintf(buf, sizeof buf, "%.17g", data.grid.points(t));
                out << buf << ',';
                std::snprintf(buf, sizeof buf, "%.17g", data.values[n](p, t));
                out << buf << '\n';
            }
        }
    }
}

std::pair<LongitudinalData, CenteringRecord> center_features(const LongitudinalData& data) {
    const int P = data.n_features();
    Eigen::VectorXd means = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(P);
    for (int n = 0; n < data.n_subjects(); ++n) {
        for (int p = 0; p < P; ++p) {
            for (int t = 0; t < data.n_times(); ++t) {
                if (!data.observed[n](p, t)) continue;
                means(p) += data.values[n](p, t);
                counts(p) += 1.0;
            }
        }
    }
    for (int p = 0; p < P; ++p) means(p) /= counts(p);  // load guarantees counts > 0

    LongitudinalData centered = data;
    for (int n = 0; n < data.n_subjects(); ++n) {
        for (int p = 0; p < P; ++p) {
            for (int t = 0; t < data.n_times(); ++t) {
                if (centered.observed[n](p, t)) centered.values[n](p, t) -= means(p);
            }
        }
    }
    return {std::move(centered), CenteringRecord{std::move(means)}};
}

double masked_sse(const LongitudinalData& data, const Eigen::MatrixXd& reconstruction) {
    if (reconstruction.rows() != data.n_features() || reconstruction.cols() != data.n_times()) {
        throw ValidationError("reconstruction shape does not match data");
    }
    double total = 0.0;
    for (int n = 0; n < data.n_subjects(); ++n) {
        for (int p = 0; p < data.n_features(); ++p) {
            for (int t = 0; t < data.n_times(); ++t) {
                if (!data.observed[n](p, t)) continue;
                const double r = data.values[n](p, t) - reconstruction(p, t);
                total += r * r;
            }
        }
    }
    return total;
}

}  // namespace pta
