#pragma once

// Post-processing of the feature matrix: extreme-value skew detection, log
// rescaling, a PCA variance audit and correlation-based feature selection.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gwprof/error.hpp"
#include "gwprof/features.hpp"
#include "gwprof/matrix.hpp"

namespace gwprof {

inline constexpr double kDefaultEvf = 6.0;
inline constexpr double kSkewFraction = 0.01;

/// Named columns of per-device features.
struct FeatureTable {
    std::vector<std::string> names;
    Matrix values;

    int index_of(std::string_view name) const noexcept {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

enum class SkewSide { None, Left, Right, Both };

constexpr std::string_view to_string(SkewSide s) noexcept {
    switch (s) {
        case SkewSide::None: return "None";
        case SkewSide::Left: return "Left";
        case SkewSide::Right: return "Right";
        case SkewSide::Both: return "Both";
    }
    return "?";
}

struct SkewEntry {
    std::string feature;
    double q1 = 0, q3 = 0, iqr = 0, evf = kDefaultEvf;
    double extreme_fraction = 0;
    bool skewed = false;
    SkewSide side = SkewSide::None;
};

/// Fraction of values strictly outside [Q1 - evf*IQR, Q3 + evf*IQR]; skewed
/// when that fraction reaches 1%.
inline SkewEntry detect_skew(std::span<const double> column, double evf = kDefaultEvf) {
    if (column.empty()) throw EmptySeries("detect_skew of an empty column");
    std::vector<double> s(column.begin(), column.end());
    std::sort(s.begin(), s.end());
    SkewEntry e;
    e.evf = evf;
    e.q1 = percentile_sorted(s, 0.25);
    e.q3 = percentile_sorted(s, 0.75);
    e.iqr = e.q3 - e.q1;
    const double lo = e.q1 - evf * e.iqr;
    const double hi = e.q3 + evf * e.iqr;
    std::size_t below = 0, above = 0;
    for (double x : s) {
        if (x < lo) ++below;
        if (x > hi) ++above;
    }
    e.extreme_fraction = static_cast<double>(below + above) / static_cast<double>(s.size());
    e.skewed = e.extreme_fraction >= kSkewFraction;
    e.side = below && above ? SkewSide::Both : below ? SkewSide::Left : above ? SkewSide::Right : SkewSide::None;
    return e;
}

/// x -> ln(1 + x). Traffic features are non-negative; a negative value means an
/// RSSI column was routed here by mistake.
inline std::vector<double> log_rescale(std::span<const double> column) {
    std::vector<double> out;
    out.reserve(column.size());
    for (double x : column) {
        if (x < 0) throw NegativeInput("log_rescale received " + std::to_string(x));
        out.push_back(std::log1p(x));
    }
    return out;
}

inline std::string rescaled_name(std::string_view name) { return std::string(name) + "_ln"; }

struct RescaleResult {
    std::vector<SkewEntry> report;        // one entry per column, pre-transform
    std::vector<std::string> rescaled;    // original names of transformed columns
};

/// Detects skew on every column and log-rescales the skewed traffic columns in
/// place (renaming them with the `_ln` suffix). RSSI columns are audited only.
inline RescaleResult rescale_skewed(FeatureTable& table, double evf = kDefaultEvf) {
    RescaleResult r;
    for (std::size_t c = 0; c < table.names.size(); ++c) {
        const auto col = table.values.column(c);
        auto e = detect_skew(col, evf);
        e.feature = table.names[c];
        if (e.skewed && !is_rssi_feature(table.names[c])) {
            table.values.set_column(c, log_rescale(col));
            r.rescaled.push_back(table.names[c]);
            table.names[c] = rescaled_name(table.names[c]);
        }
        r.report.push_back(std::move(e));
    }
    return r;
}

/// Applies a previously decided rescaling (by original column name).
inline void apply_rescaling(FeatureTable& table, std::span<const std::string> rescaled) {
    for (const auto& name : rescaled) {
        const int c = table.index_of(name);
        if (c < 0) continue;
        table.values.set_column(static_cast<std::size_t>(c), log_rescale(table.values.column(static_cast<std::size_t>(c))));
        table.names[static_cast<std::size_t>(c)] = rescaled_name(name);
    }
}

struct PcaResult {
    std::vector<std::size_t> used_columns;     // input columns kept
    std::vector<std::size_t> dropped_columns;  // constant under standardisation
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;                     // ones when not standardising
    Eigen::MatrixXd components;                // columns = orthonormal axes, by variance
    std::vector<double> explained_variance_ratio;
    std::vector<double> cumulative;

    /// Smallest number of components whose cumulative ratio reaches `level`.
    std::size_t components_for(double level) const {
        for (std::size_t i = 0; i < cumulative.size(); ++i) {
            if (cumulative[i] >= level - 1e-12) return i + 1;
        }
        return cumulative.size();
    }

    Eigen::MatrixXd centered(const Matrix& m) const {
        Eigen::MatrixXd z(m.rows(), used_columns.size());
        for (std::size_t r = 0; r < m.rows(); ++r) {
            for (std::size_t j = 0; j < used_columns.size(); ++j) {
                z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                    (m(r, used_columns[j]) - mean(static_cast<Eigen::Index>(j))) / scale(static_cast<Eigen::Index>(j));
            }
        }
        return z;
    }

    Eigen::MatrixXd project(const Matrix& m) const { return centered(m) * components; }
};

/// Eigen-decomposition of the correlation (standardize) or covariance matrix.
inline PcaResult pca(const Matrix& m, bool standardize = true) {
    if (m.rows() < 2) throw DegenerateMatrix("pca needs at least 2 rows");
    for (double v : m.data()) {
        if (!std::isfinite(v)) throw DegenerateMatrix("pca input contains a non-finite value");
    }
    const auto n = static_cast<double>(m.rows());
    PcaResult r;
    std::vector<double> means, scales;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double mu = 0;
        for (std::size_t i = 0; i < m.rows(); ++i) mu += m(i, c);
        mu /= n;
        double var = 0;
        for (std::size_t i = 0; i < m.rows(); ++i) var += (m(i, c) - mu) * (m(i, c) - mu);
        const double sd = std::sqrt(var / (n - 1));
        if (standardize && !(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
            r.dropped_columns.push_back(c);
            continue;
        }
        r.used_columns.push_back(c);
        means.push_back(mu);
        scales.push_back(standardize ? sd : 1.0);
    }
    if (r.used_columns.empty()) throw DegenerateMatrix("every column is constant");
    r.mean = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    r.scale = Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));

    const Eigen::MatrixXd z = r.centered(m);
    const Eigen::MatrixXd cov = (z.transpose() * z) / (n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DegenerateMatrix("eigendecomposition failed");

    const auto d = cov.rows();
    r.components.resize(d, d);
    std::vector<double> eig(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        // Eigen sorts ascending; flip to descending.
        const Eigen::Index src = d - 1 - k;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        r.components.col(k) = v;
        eig[static_cast<std::size_t>(k)] = std::max(0.0, solver.eigenvalues()(src));
    }
    const double total = std::accumulate(eig.begin(), eig.end(), 0.0);
    double run = 0;
    for (double e : eig) {
        const double ratio = total > 0 ? e / total : 0.0;
        r.explained_variance_ratio.push_back(ratio);
        run += ratio;
        r.cumulative.push_back(run);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Correlation-based feature selection

/// Equal-frequency bin index per value (at most `bins` bins; tied values share a bin).
inline std::vector<int> discretize_equal_frequency(std::span<const double> column, int bins = 10) {
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (int b = 1; b < bins; ++b) {
        const auto pos = sorted.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
        if (pos == 0 || pos >= sorted.size()) continue;
        const double cut = sorted[pos];
        if (cut > sorted.front() && (cuts.empty() || cut > cuts.back())) cuts.push_back(cut);
    }
    std::vector<int> out;
    out.reserve(column.size());
    for (double x : column) {
        out.push_back(static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin()));
    }
    return out;
}

namespace detail {

inline double entropy_of_counts(const std::map<long long, std::size_t>& counts, double n) {
    double h = 0;
    for (const auto& [k, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace detail

/// 2 * I(a;b) / (H(a) + H(b)); zero when both variables are constant.
inline double symmetric_uncertainty(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw LengthMismatch("symmetric_uncertainty of unequal lengths");
    if (a.empty()) return 0.0;
    std::map<long long, std::size_t> ca, cb, cab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++cab[(static_cast<long long>(a[i]) << 32) ^ static_cast<long long>(static_cast<unsigned>(b[i]))];
    }
    const auto n = static_cast<double>(a.size());
    const double ha = detail::entropy_of_counts(ca, n);
    const double hb = detail::entropy_of_counts(cb, n);
    const double hab = detail::entropy_of_counts(cab, n);
    if (ha + hb <= 0) return 0.0;
    return std::clamp(2.0 * (ha + hb - hab) / (ha + hb), 0.0, 1.0);
}

/// Merit of a subset from its summed feature-class and pairwise feature-feature
/// correlations: k * mean_cf / sqrt(k + k(k-1) * mean_ff).
inline double cfs_merit(std::size_t k, double sum_cf, double sum_ff_pairs) {
    if (k == 0) return 0.0;
    const double kk = static_cast<double>(k);
    return sum_cf / std::sqrt(kk + 2.0 * sum_ff_pairs);
}

struct CfsRanking {
    std::vector<std::size_t> indices;
    std::vector<std::string> selected;
    std::vector<double> merit;  // merit of each selection prefix
};

/// Greedy forward selection: repeatedly add the feature that maximises subset
/// merit (ties to the lower column index) until `k` features are chosen.
inline CfsRanking cfs_select(const Matrix& x, std::span<const int> labels, std::size_t k,
                             std::span<const std::string> names = {}, int bins = 10) {
    if (labels.size() != x.rows()) throw LabelMismatch("labels do not align with matrix rows");
    if (k < 1) throw ConfigError("cfs k must be >= 1");
    const std::size_t d = x.cols();
    k = std::min(k, d);

    std::vector<std::vector<int>> disc(d);
    std::vector<double> r_cf(d);
    for (std::size_t c = 0; c < d; ++c) {
        disc[c] = discretize_equal_frequency(x.column(c), bins);
        r_cf[c] = symmetric_uncertainty(disc[c], labels);
    }

    CfsRanking out;
    std::vector<bool> chosen(d, false);
    std::vector<double> ff_with_selected(d, 0.0);  // sum of SU(c, s) over selected s
    double sum_cf = 0, sum_ff = 0;
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = d;
        double best_merit = -1;
        for (std::size_t c = 0; c < d; ++c) {
            if (chosen[c]) continue;
            const double m = cfs_merit(step + 1, sum_cf + r_cf[c], sum_ff + ff_with_selected[c]);
            if (m > best_merit + 1e-15) {
                best_merit = m;
                best = c;
            }
        }
        chosen[best] = true;
        sum_cf += r_cf[best];
        sum_ff += ff_with_selected[best];
        for (std::size_t c = 0; c < d; ++c) {
            if (!chosen[c]) ff_with_selected[c] += symmetric_uncertainty(disc[c], disc[best]);
        }
        out.indices.push_back(best);
        out.selected.push_back(best < names.size() ? names[best] : std::to_string(best));
        out.merit.push_back(best_merit);
    }
    return out;
}

inline nlohmann::json to_json(const SkewEntry& e) {
    return {{"feature", e.feature},         {"q1", e.q1},
            {"q3", e.q3},                   {"iqr", e.iqr},
            {"evf", e.evf},                 {"extreme_fraction", e.extreme_fraction},
            {"skewed", e.skewed},           {"side", std::string(to_string(e.side))}};
}

}  // namespace gwprof
