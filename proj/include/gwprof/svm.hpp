#pragma once

// Linear SVM trained by SMO on the dual, with one-vs-one multiclass voting.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gwprof/dataset.hpp"
#include "gwprof/error.hpp"
#include "gwprof/matrix.hpp"

namespace gwprof {

struct SvmBinaryModel {
    std::vector<double> weights;
    double bias = 0;
    double c = 1;
    std::vector<double> alphas;  // one per training row
    std::size_t iterations = 0;
    bool converged = false;

    double decision(std::span<const double> x) const {
        double s = bias;
        for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
        return s;
    }
};

struct SmoOptions {
    double tol = 1e-3;
    std::size_t max_iter = 0;  // 0: max(100000, 200 n)
};

namespace detail {

inline Eigen::MatrixXd gram(const Matrix& x) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> m(x.data().data(), static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
    Eigen::MatrixXd k(m.rows(), m.rows());
    k.triangularView<Eigen::Lower>() = m * m.transpose();
    k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
    return k;
}

}  // namespace detail

/// Dual objective sum(alpha) - 1/2 ||w||^2 for labels in {-1, +1}.
inline double svm_dual_objective(const Matrix& x, std::span<const int> y, std::span<const double> alpha) {
    std::vector<double> w(x.cols(), 0.0);
    double sum = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        sum += alpha[i];
        for (std::size_t f = 0; f < x.cols(); ++f) w[f] += alpha[i] * y[i] * x(i, f);
    }
    double norm = 0;
    for (double v : w) norm += v * v;
    return sum - 0.5 * norm;
}

/// Solves the soft-margin linear SVM dual with second-order working set
/// selection. Labels must be -1 or +1. No shrinking; the gradient is refreshed
/// from scratch before accepting convergence.
inline SvmBinaryModel smo_train(const Matrix& x, std::span<const int> y, double c, const SmoOptions& opt = {}) {
    const std::size_t n = x.rows();
    if (y.size() != n) throw LengthMismatch("smo_train: labels and rows differ");
    if (!(c > 0)) throw ConfigError("smo_train: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw LabelMismatch("smo_train: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw SingleClass("smo_train needs both classes");

    constexpr double kTau = 1e-12;
    const double eps = opt.tol * 0.5;
    const std::size_t max_iter = opt.max_iter ? opt.max_iter : std::max<std::size_t>(100000, 200 * n);
    const Eigen::MatrixXd k = detail::gram(x);
    std::vector<double> alpha(n, 0.0), g(n, -1.0);
    auto yd = [&](std::size_t i) { return static_cast<double>(y[i]); };
    auto upper = [&](std::size_t i) { return alpha[i] >= c; };
    auto lower = [&](std::size_t i) { return alpha[i] <= 0; };

    auto refresh_gradient = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            double s = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (alpha[j] != 0) s += yd(i) * yd(j) * k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * alpha[j];
            }
            g[i] = s;
        }
    };

    SvmBinaryModel model;
    model.c = c;
    std::size_t iter = 0;
    bool refreshed = false;
    while (iter < max_iter) {
        // Pick i maximising -y G over the "up" set.
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == 1) {
                if (!upper(t) && -g[t] >= gmax) { gmax = -g[t]; i = t; }
            } else {
                if (!lower(t) && g[t] >= gmax) { gmax = g[t]; i = t; }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        if (i < n) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t t = 0; t < n; ++t) {
                const auto tt = static_cast<Eigen::Index>(t);
                double grad_diff;
                if (y[t] == 1) {
                    if (lower(t)) continue;
                    gmax2 = std::max(gmax2, g[t]);
                    grad_diff = gmax + g[t];
                } else {
                    if (upper(t)) continue;
                    gmax2 = std::max(gmax2, -g[t]);
                    grad_diff = gmax - g[t];
                }
                if (grad_diff > 0) {
                    double quad = k(ii, ii) + k(tt, tt) - 2.0 * k(ii, tt);
                    if (quad <= 0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best_obj) { best_obj = obj; j = t; }
                }
            }
        }
        if (i == n || j == n || gmax + gmax2 < eps) {
            if (refreshed) {
                model.converged = true;
                break;
            }
            refresh_gradient();
            refreshed = true;
            continue;
        }
        refreshed = false;
        ++iter;

        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const double old_i = alpha[i], old_j = alpha[j];
        double quad = k(ii, ii) + k(jj, jj) - 2.0 * k(ii, jj);
        if (quad <= 0) quad = kTau;
        if (y[i] != y[j]) {
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
            }
            if (diff > 0) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
            } else {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
            }
        } else {
            const double delta = (g[i] - g[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
            } else {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
            }
            if (sum > c) {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
            }
        }
        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) {
            const auto tt = static_cast<Eigen::Index>(t);
            g[t] += yd(t) * (yd(i) * k(tt, ii) * di + yd(j) * k(tt, jj) * dj);
        }
    }
    if (!model.converged) refresh_gradient();
    model.iterations = iter;

    // Bias from free vectors, else the midpoint of the feasible interval.
    double free_sum = 0;
    std::size_t free_count = 0;
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = -yd(t) * g[t];
        if (!lower(t) && !upper(t)) {
            free_sum += yg;
            ++free_count;
        } else if ((y[t] == 1 && upper(t)) || (y[t] == -1 && lower(t))) {
            lb = std::max(lb, yg);
        } else {
            ub = std::min(ub, yg);
        }
    }
    if (free_count > 0) {
        model.bias = free_sum / static_cast<double>(free_count);
    } else if (std::isfinite(ub) && std::isfinite(lb)) {
        model.bias = (ub + lb) / 2;
    } else {
        model.bias = std::isfinite(ub) ? ub : lb;
    }

    model.weights.assign(x.cols(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] == 0) continue;
        for (std::size_t f = 0; f < x.cols(); ++f) model.weights[f] += alpha[t] * yd(t) * x(t, f);
    }
    model.alphas = std::move(alpha);
    return model;
}

struct SvmPair {
    int positive = 0;  // decision > 0 votes for this class
    int negative = 0;
    SvmBinaryModel model;
};

/// One-vs-one ensemble over z-scored features.
struct SvmMulticlass {
    Standardizer scaler;
    std::vector<SvmPair> pairs;
    std::size_t n_classes = 0;
    int fallback = 0;  // used when training saw a single class

    int predict(std::span<const double> raw) const {
        if (pairs.empty()) return fallback;
        std::vector<double> z(raw.size());
        scaler.apply(raw, z);
        std::vector<int> votes(n_classes, 0);
        std::vector<double> margin(n_classes, 0.0);
        for (const auto& p : pairs) {
            const double d = p.model.decision(z);
            ++votes[static_cast<std::size_t>(d > 0 ? p.positive : p.negative)];
            margin[static_cast<std::size_t>(p.positive)] += d;
            margin[static_cast<std::size_t>(p.negative)] -= d;
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_classes; ++c) {
            if (votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best])) best = c;
        }
        return static_cast<int>(best);
    }
};

inline SvmMulticlass svm_multiclass(const Dataset& ds, double c, const SmoOptions& opt = {}) {
    ds.validate();
    if (ds.size() == 0) throw EmptyDataset("svm_multiclass on an empty dataset");
    SvmMulticlass out;
    out.n_classes = ds.n_classes();
    out.scaler = Standardizer::fit(ds.x);
    const Matrix z = out.scaler.transform(ds.x);
    const auto counts = ds.class_counts();
    std::vector<int> present;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > 0) present.push_back(static_cast<int>(k));
    }
    out.fallback = present.front();
    for (std::size_t a = 0; a < present.size(); ++a) {
        for (std::size_t b = a + 1; b < present.size(); ++b) {
            std::vector<std::size_t> rows;
            std::vector<int> labels;
            for (std::size_t r = 0; r < ds.size(); ++r) {
                if (ds.y[r] == present[a] || ds.y[r] == present[b]) {
                    rows.push_back(r);
                    labels.push_back(ds.y[r] == present[a] ? 1 : -1);
                }
            }
            out.pairs.push_back({present[a], present[b], smo_train(z.select_rows(rows), labels, c, opt)});
        }
    }
    return out;
}

inline nlohmann::json to_json(const SvmMulticlass& m) {
    auto pairs = nlohmann::json::array();
    for (const auto& p : m.pairs) {
        pairs.push_back({{"positive", p.positive},
                         {"negative", p.negative},
                         {"weights", p.model.weights},
                         {"bias", p.model.bias},
                         {"c", p.model.c},
                         {"iterations", p.model.iterations},
                         {"converged", p.model.converged}});
    }
    return {{"mean", m.scaler.mean}, {"scale", m.scaler.scale}, {"n_classes", m.n_classes},
            {"fallback", m.fallback}, {"pairs", pairs}};
}

inline SvmMulticlass svm_from_json(const nlohmann::json& j) {
    SvmMulticlass m;
    m.scaler.mean = j.at("mean").get<std::vector<double>>();
    m.scaler.scale = j.at("scale").get<std::vector<double>>();
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.fallback = j.at("fallback").get<int>();
    for (const auto& p : j.at("pairs")) {
        SvmPair pair;
        pair.positive = p.at("positive").get<int>();
        pair.negative = p.at("negative").get<int>();
        pair.model.weights = p.at("weights").get<std::vector<double>>();
        pair.model.bias = p.at("bias").get<double>();
        pair.model.c = p.at("c").get<double>();
        pair.model.iterations = p.value("iterations", std::size_t{0});
        pair.model.converged = p.value("converged", true);
        m.pairs.push_back(std::move(pair));
    }
    return m;
}

}  // namespace gwprof
