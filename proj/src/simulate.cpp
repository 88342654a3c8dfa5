#include "pta/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pta/errors.hpp"
#include "pta/rng.hpp"

namespace pta {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string family_name(SignalFamily family) {
    switch (family) {
        case SignalFamily::sinusoid_mixture: return "sinusoid_mixture";
        case SignalFamily::damped_exponential: return "damped_exponential";
        case SignalFamily::cosine_block: return "cosine_block";
    }
    return "?";
}

SignalFamily family_from_name(const std::string& name, const std::string& origin) {
    if (name == "sinusoid_mixture") return SignalFamily::sinusoid_mixture;
    if (name == "damped_exponential") return SignalFamily::damped_exponential;
    if (name == "cosine_block") return SignalFamily::cosine_block;
    throw ValidationError(origin + ": unknown family '" + name + "'");
}

// Group pattern value at time t (patterns indexed 0..2; cosine_block uses
// only pattern 0).
double pattern_value(const SimDesign& design, int pattern, double t) {
    switch (design.family) {
        case SignalFamily::sinusoid_mixture: {
            const double freq[3] = {2.0, 1.0, 0.5};
            return std::sin(freq[pattern] * kPi * t);
        }
        case SignalFamily::damped_exponential:
            return std::sin(0.5 * kPi * t) * std::exp(design.decay_rates[pattern] * t);
        case SignalFamily::cosine_block:
            return std::cos(0.6 * t);
    }
    return 0.0;
}

}  // namespace

SimDesign SimDesign::sinusoid(int features, int noisy, int subjects, int times) {
    SimDesign d;
    d.n_features = features;
    d.noisy_features = noisy;
    d.n_subjects = subjects;
    d.n_times = times;
    return d;
}

SimDesign SimDesign::damped(int features, int noisy, int subjects, int times) {
    SimDesign d = sinusoid(features, noisy, subjects, times);
    d.family = SignalFamily::damped_exponential;
    return d;
}

SimDesign SimDesign::cosine_block() {
    SimDesign d;
    d.family = SignalFamily::cosine_block;
    d.n_features = 100;
    d.noisy_features = 30;
    d.n_subjects = 1;
    d.n_times = 30;
    d.groups = {{1, 70}};
    d.noise = NoiseSpec{NoiseSpec::Kind::gaussian, 1.0, 0.0};
    return d;
}

void validate(const SimDesign& design) {
    if (design.n_features < 1 || design.n_subjects < 1 || design.n_times < 4) {
        throw ValidationError("design needs P >= 1, N >= 1, T >= 4");
    }
    if (design.noisy_features < 0 || design.noisy_features > design.n_features) {
        throw ValidationError("noisy feature count must lie in [0, P]");
    }
    if (design.noisy_subjects < 0 || design.noisy_subjects > design.n_subjects) {
        throw ValidationError("noisy subject count must lie in [0, N]");
    }
    if (design.noise.sigma < 0.0) throw ValidationError("noise sigma must be nonnegative");
    if (design.noise.kind == NoiseSpec::Kind::ar1 && !(std::abs(design.noise.rho) < 1.0)) {
        throw ValidationError("AR(1) correlation must satisfy |rho| < 1");
    }
    const int signal_span = design.n_features - design.noisy_features;
    int prev_last = 0;
    if (design.groups.empty()) throw ValidationError("design needs at least one feature group");
    for (const GroupRange& g : design.groups) {
        if (g.first < 1 || g.last < g.first || g.last > signal_span) {
            std::ostringstream msg;
            msg << "group range " << g.first << "-" << g.last
                << " must be increasing and lie within 1.." << signal_span;
            throw ValidationError(msg.str());
        }
        if (g.first <= prev_last) throw ValidationError("group ranges must be disjoint");
        prev_last = g.last;
    }
}

TimeGrid design_time_grid(const SimDesign& design) {
    Eigen::VectorXd t(design.n_times);
    if (design.family == SignalFamily::cosine_block) {
        for (int i = 0; i < design.n_times; ++i) t(i) = i + 1.0;
    } else {
        const double span = design.n_times / 10.0;
        for (int i = 0; i < design.n_times; ++i) {
            t(i) = span * static_cast<double>(i) / (design.n_times - 1);
        }
    }
    return make_time_grid(t);
}

Eigen::MatrixXd truth_patterns(const SimDesign& design) {
    const TimeGrid grid = design_time_grid(design);
    Eigen::MatrixXd patterns(static_cast<int>(design.groups.size()), design.n_times);
    for (int g = 0; g < patterns.rows(); ++g) {
        for (int t = 0; t < design.n_times; ++t) {
            patterns(g, t) = pattern_value(design, g, grid.points(t));
        }
    }
    return patterns;
}

Eigen::MatrixXd signal_matrix(const SimDesign& design) {
    validate(design);
    const Eigen::MatrixXd patterns = truth_patterns(design);
    Eigen::MatrixXd signal = Eigen::MatrixXd::Zero(design.n_features, design.n_times);
    for (int p = 1; p <= design.n_features; ++p) {
        for (std::size_t g = 0; g < design.groups.size(); ++g) {
            if (design.groups[g].contains(p)) {
                signal.row(p - 1) = patterns.row(static_cast<int>(g));
                break;
            }
        }
    }
    return signal;
}

Eigen::VectorXd ar1_noise(double rho, double sigma, int length, std::uint64_t seed) {
    if (!(std::abs(rho) < 1.0)) throw ValidationError("AR(1) correlation must satisfy |rho| < 1");
    if (sigma < 0.0) throw ValidationError("sigma must be nonnegative");
    if (length < 0) throw ValidationError("length must be nonnegative");
    Rng rng(seed);
    Eigen::VectorXd e(length);
    const double innovation = sigma * std::sqrt(1.0 - rho * rho);
    for (int i = 0; i < length; ++i) {
        e(i) = i == 0 ? rng.gaussian(sigma) : rho * e(i - 1) + rng.gaussian(innovation);
    }
    return e;
}

LongitudinalData generate(const SimDesign& design) {
    validate(design);
    const int P = design.n_features;
    const int N = design.n_subjects;
    const int T = design.n_times;
    const Eigen::MatrixXd signal = signal_matrix(design);

    LongitudinalData data;
    data.grid = design_time_grid(design);
    data.values.assign(N, Eigen::MatrixXd::Zero(P, T));
    data.observed.assign(N, BoolArray::Constant(P, T, true));
    data.subject_ids.reserve(N);
    data.feature_ids.reserve(P);
    for (int n = 1; n <= N; ++n) data.subject_ids.push_back("s" + std::to_string(n));
    for (int p = 1; p <= P; ++p) data.feature_ids.push_back("g" + std::to_string(p));

    Rng rng(design.seed);
    const double rho = design.noise.kind == NoiseSpec::Kind::ar1 ? design.noise.rho : 0.0;
    const double sigma = design.noise.sigma;
    const double innovation = sigma * std::sqrt(1.0 - rho * rho);
    const int signal_subjects = N - design.noisy_subjects;
    for (int n = 0; n < N; ++n) {
        for (int p = 0; p < P; ++p) {
            double prev = 0.0;
            for (int t = 0; t < T; ++t) {
                prev = t == 0 ? rng.gaussian(sigma) : rho * prev + rng.gaussian(innovation);
                double value = prev;
                if (n < signal_subjects) value += signal(p, t);
                data.values[n](p, t) = value;
            }
        }
    }
    return data;
}

double snr(const SimDesign& design) {
    return 1.0 / (std::sqrt(2.0) * design.noise.sigma);
}

SimSummary summarize(const std::vector<TrendModel>& models, const SimDesign& design,
                     const std::optional<Eigen::MatrixXd>& truth) {
    if (models.size() < 1) throw ValidationError("summary needs at least one replicate");
    SimSummary summary;
    summary.replicates = static_cast<int>(models.size());
    summary.snr = snr(design);

    int k_max = 0;
    for (const TrendModel& m : models) k_max = std::max(k_max, m.n_components());

    summary.nonzero_mean.assign(k_max, 0.0);
    summary.nonzero_sd.assign(k_max, 0.0);
    std::vector<std::vector<double>> counts(k_max);
    std::vector<double> evs;
    for (const TrendModel& m : models) {
        evs.push_back(m.cumulative_explained_variance());
        for (int k = 0; k < k_max; ++k) {
            const double c =
                k < m.n_components() ? (m.scores.col(k).array() != 0.0).count() : 0.0;
            counts[k].push_back(c);
        }
    }
    auto mean_sd = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        const double sd = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
        return std::pair<double, double>{mean, sd};
    };
    for (int k = 0; k < k_max; ++k) {
        std::tie(summary.nonzero_mean[k], summary.nonzero_sd[k]) = mean_sd(counts[k]);
    }
    std::tie(summary.ev_mean, summary.ev_sd) = mean_sd(evs);

    if (truth) {
        const Eigen::MatrixXd& patterns = *truth;
        summary.trend_correlation.assign(static_cast<std::size_t>(
            std::min<int>(k_max, static_cast<int>(patterns.rows()))), 0.0);
        for (const TrendModel& m : models) {
            for (std::size_t k = 0; k < summary.trend_correlation.size(); ++k) {
                if (static_cast<int>(k) >= m.n_components()) continue;
                const Eigen::VectorXd a = m.trends.row(static_cast<int>(k));
                const Eigen::VectorXd b = patterns.row(static_cast<int>(k));
                const Eigen::VectorXd ac = a.array() - a.mean();
                const Eigen::VectorXd bc = b.array() - b.mean();
                const double denom = ac.norm() * bc.norm();
                if (denom > 0.0) {
                    summary.trend_correlation[k] += std::abs(ac.dot(bc)) / denom;
                }
            }
        }
        for (double& c : summary.trend_correlation) c /= summary.replicates;
    }
    return summary;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t a = item.find_first_not_of(" \t");
        std::size_t b = item.find_last_not_of(" \t");
        out.push_back(a == std::string::npos ? "" : item.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace

SimDesign parse_design(std::istream& in, const std::string& origin) {
    SimDesign design;
    bool family_set = false;
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                throw FormatError(origin + ": line " + std::to_string(row) +
                                  " is not 'key = value'");
            }
            continue;
        }
        auto strip = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t\r");
            const std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        entries.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }

    // family first, so it can install its defaults before overrides apply
    for (const auto& [key, value] : entries) {
        if (key == "family") {
            const SignalFamily fam = family_from_name(value, origin);
            if (fam == SignalFamily::cosine_block) {
                design = SimDesign::cosine_block();
            } else {
                design.family = fam;
            }
            family_set = true;
        }
    }
    (void)family_set;

    auto to_int = [&origin](const std::string& key, const std::string& value) {
        try {
            return std::stoi(value);
        } catch (...) {
            throw FormatError(origin + ": key '" + key + "' needs an integer, got '" + value + "'");
        }
    };
    auto to_double = [&origin](const std::string& key, const std::string& value) {
        try {
            return std::stod(value);
        } catch (...) {
            throw FormatError(origin + ": key '" + key + "' needs a number, got '" + value + "'");
        }
    };

    for (const auto& [key, value] : entries) {
        if (key == "family") continue;
        if (key == "features") design.n_features = to_int(key, value);
        else if (key == "subjects") design.n_subjects = to_int(key, value);
        else if (key == "times") design.n_times = to_int(key, value);
        else if (key == "noisy_features") design.noisy_features = to_int(key, value);
        else if (key == "noisy_subjects") design.noisy_subjects = to_int(key, value);
        else if (key == "sigma") design.noise.sigma = to_double(key, value);
        else if (key == "rho") design.noise.rho = to_double(key, value);
        else if (key == "seed") design.seed = static_cast<std::uint64_t>(std::stoull(value));
        else if (key == "noise") {
            if (value == "gaussian") design.noise.kind = NoiseSpec::Kind::gaussian;
            else if (value == "ar1") design.noise.kind = NoiseSpec::Kind::ar1;
            else throw ValidationError(origin + ": unknown noise kind '" + value + "'");
        } else if (key == "groups") {
            design.groups.clear();
            for (const std::string& range : split_list(value)) {
                const std::size_t dash = range.find('-');
                if (dash == std::string::npos) {
                    throw FormatError(origin + ": group range '" + range + "' needs 'first-last'");
                }
                design.groups.push_back(GroupRange{to_int(key, range.substr(0, dash)),
                                                   to_int(key, range.substr(dash + 1))});
            }
        } else if (key == "decay") {
            const auto items = split_list(value);
            if (items.size() != 3) {
                throw FormatError(origin + ": key 'decay' needs three comma-separated values");
            }
            for (int i = 0; i < 3; ++i) design.decay_rates[i] = to_double(key, items[i]);
        } else {
            throw FormatError(origin + ": unknown key '" + key + "'");
        }
    }
    validate(design);
    return design;
}

SimDesign load_design(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open design file '" + path + "'");
    return parse_design(in, path);
}

void write_design(const SimDesign& design, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file '" + path + "'");
    out << "family = " << family_name(design.family) << "\n";
    out << "features = " << design.n_features << "\n";
    out << "subjects = " << design.n_subjects << "\n";
    out << "times = " << design.n_times << "\n";
    out << "noisy_features = " << design.noisy_features << "\n";
    out << "noisy_subjects = " << design.noisy_subjects << "\n";
    out << "noise = " << (design.noise.kind == NoiseSpec::Kind::ar1 ? "ar1" : "gaussian") << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", design.noise.sigma);
    out << "sigma = " << buf << "\n";
    if (design.noise.kind == NoiseSpec::Kind::ar1) {
        std::snprintf(buf, sizeof buf, "%.17g", design.noise.rho);
        out << "rho = " << buf << "\n";
    }
    out << "groups = ";
    for (std::size_t g = 0; g < design.groups.size(); ++g) {
        if (g) out << ",";
        out << design.groups[g].first << "-" << design.groups[g].last;
    }
    out << "\n";
    if (design.family == SignalFamily::damped_exponential) {
        out << "decay = ";
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", design.decay_rates[i]);
            out << (i ? "," : "") << buf;
        }
        out << "\n";
    }
    out << "seed = " << design.seed << "\n";
}

}  // namespace pta
