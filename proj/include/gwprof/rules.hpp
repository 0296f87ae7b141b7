#pragma once

// SMOTE oversampling and one-vs-rest single conjunctive rules.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/dataset.hpp"
#include "gwprof/error.hpp"
#include "gwprof/matrix.hpp"
#include "gwprof/rng.hpp"

namespace gwprof {

/// Synthetic minority rows: amount_pct/100 per input row, each on the segment
/// from the row to one of its k nearest minority neighbours. Neighbours are
/// found in z-space using `scale` (fitted on the minority rows if omitted).
inline Matrix smote(const Matrix& minority, int k, int amount_pct, std::uint64_t seed,
                    const Standardizer* scale = nullptr) {
    const std::size_t n = minority.rows();
    if (n < 2) throw TooFewMinority("SMOTE needs at least 2 minority rows, got " + std::to_string(n));
    if (amount_pct < 0 || amount_pct % 100 != 0) throw ConfigError("SMOTE amount must be a non-negative multiple of 100");
    if (k < 1) throw ConfigError("SMOTE k must be >= 1");
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n - 1);
    const std::size_t reps = static_cast<std::size_t>(amount_pct / 100);
    Matrix out(0, minority.cols());
    if (reps == 0) return out;

    const Standardizer fitted = scale ? *scale : Standardizer::fit(minority);
    const Matrix z = fitted.transform(minority);
    Rng rng(seed);
    std::vector<std::pair<double, std::size_t>> dist(n);
    std::vector<double> synth(minority.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d = 0;
            for (std::size_t f = 0; f < z.cols(); ++f) d += (z(i, f) - z(j, f)) * (z(i, f) - z(j, f));
            dist[j] = {j == i ? std::numeric_limits<double>::infinity() : d, j};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        for (std::size_t r = 0; r < reps; ++r) {
            const auto nn = dist[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(kk) - 1))].second;
            const double u = uniform01(rng);
            for (std::size_t f = 0; f < minority.cols(); ++f) {
                const double a = minority(i, f), b = minority(nn, f);
                synth[f] = std::clamp(a + u * (b - a), std::min(a, b), std::max(a, b));
            }
            out.append_row(synth);
        }
    }
    return out;
}

enum class CompareOp { LT, GT };

struct Antecedent {
    std::string feature;
    std::size_t index = 0;
    CompareOp op = CompareOp::GT;
    double threshold = 0;

    bool holds(std::span<const double> row) const {
        const double v = row[index];
        return op == CompareOp::LT ? v < threshold : v > threshold;
    }
};

struct ConjunctiveRule {
    std::string target_class;
    std::vector<Antecedent> antecedents;
    double accuracy_on_eval = 0;   // holdout accuracy of the pruned rule
    double baseline_on_eval = 0;   // majority-class accuracy on the same holdout
    double grown_accuracy = 0;     // holdout accuracy before pruning
    std::size_t positives = 0;     // target rows after oversampling
    std::size_t negatives = 0;

    bool covers(std::span<const double> row) const {
        return std::all_of(antecedents.begin(), antecedents.end(), [&](const Antecedent& a) { return a.holds(row); });
    }
};

inline std::string format_threshold(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

inline std::string to_string(const Antecedent& a) {
    return a.feature + (a.op == CompareOp::LT ? " < " : " > ") + format_threshold(a.threshold);
}

inline std::string to_string(const ConjunctiveRule& r) {
    std::string s;
    for (const auto& a : r.antecedents) {
        if (!s.empty()) s += " AND ";
        s += to_string(a);
    }
    return s.empty() ? "(always)" : s;
}

namespace detail {

inline double rule_accuracy(const ConjunctiveRule& r, std::size_t len, const Matrix& x, std::span<const int> pos,
                            std::span<const std::size_t> rows) {
    std::size_t ok = 0;
    for (auto i : rows) {
        bool covered = true;
        for (std::size_t a = 0; a < len && covered; ++a) covered = r.antecedents[a].holds(x.row(i));
        ok += covered == (pos[i] == 1);
    }
    return rows.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(rows.size());
}

inline double foil_gain(double p0, double n0, double p1, double n1) {
    if (p1 <= 0) return -1;
    return p1 * (std::log2(p1 / (p1 + n1)) - std::log2(p0 / (p0 + n0)));
}

}  // namespace detail

/// Grows one conjunction for rows with pos[i] == 1 on a stratified 2/3 split,
/// then keeps the prefix with the best accuracy on the remaining third.
inline ConjunctiveRule learn_conjunctive_rule(const Matrix& x, std::span<const int> pos,
                                              const std::vector<std::string>& names, int max_antecedents = 3,
                                              std::uint64_t seed = 1) {
    if (pos.size() != x.rows()) throw LengthMismatch("rule learner: labels and rows differ");
    if (names.size() != x.cols()) throw LengthMismatch("rule learner: names and columns differ");
    std::size_t n_pos = 0;
    for (int v : pos) n_pos += v == 1;
    if (n_pos == 0 || n_pos == pos.size()) throw SingleClass("rule learner needs both target and rest rows");

    // Stratified split: every third row of each shuffled class goes to the holdout.
    Rng rng(seed);
    std::vector<std::size_t> grow, holdout;
    for (int cls : {1, 0}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            if ((pos[i] == 1) == (cls == 1)) members.push_back(i);
        }
        shuffle_in_place(members, rng);
        for (std::size_t m = 0; m < members.size(); ++m) (m % 3 == 2 ? holdout : grow).push_back(members[m]);
    }
    std::sort(grow.begin(), grow.end());
    std::sort(holdout.begin(), holdout.end());

    ConjunctiveRule rule;
    std::vector<std::size_t> covered = grow;
    std::vector<std::pair<double, std::size_t>> vals;
    while (static_cast<int>(rule.antecedents.size()) < max_antecedents) {
        double p0 = 0, n0 = 0;
        for (auto i : covered) (pos[i] == 1 ? p0 : n0) += 1;
        if (n0 == 0 || p0 == 0) break;

        double best_gain = 1e-9;
        Antecedent best;
        bool found = false;
        for (std::size_t f = 0; f < x.cols(); ++f) {
            vals.clear();
            for (auto i : covered) vals.push_back({x(i, f), i});
            std::sort(vals.begin(), vals.end());
            for (CompareOp op : {CompareOp::GT, CompareOp::LT}) {
                const bool used = std::any_of(rule.antecedents.begin(), rule.antecedents.end(),
                                              [&](const Antecedent& a) { return a.index == f && a.op == op; });
                if (used) continue;
                // below = rows strictly before the cut in sorted order
                double p_below = 0, n_below = 0;
                for (std::size_t c = 0; c + 1 < vals.size(); ++c) {
                    (pos[vals[c].second] == 1 ? p_below : n_below) += 1;
                    const double lo = vals[c].first, hi = vals[c + 1].first;
                    if (lo == hi) continue;
                    const double t = lo + (hi - lo) / 2;
                    const double p1 = op == CompareOp::LT ? p_below : p0 - p_below;
                    const double n1 = op == CompareOp::LT ? n_below : n0 - n_below;
                    const double gain = detail::foil_gain(p0, n0, p1, n1);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best = Antecedent{names[f], f, op, t};
                        found = true;
                    }
                }
            }
        }
        if (!found) break;
        rule.antecedents.push_back(best);
        std::vector<std::size_t> next;
        for (auto i : covered) {
            if (best.holds(x.row(i))) next.push_back(i);
        }
        covered = std::move(next);
    }

    rule.grown_accuracy = detail::rule_accuracy(rule, rule.antecedents.size(), x, pos, holdout);
    std::size_t best_len = rule.antecedents.size();
    double best_acc = rule.grown_accuracy;
    for (std::size_t len = rule.antecedents.size(); len-- > 1;) {
        const double acc = detail::rule_accuracy(rule, len, x, pos, holdout);
        if (acc >= best_acc) {
            best_acc = acc;
            best_len = len;
        }
    }
    rule.antecedents.resize(best_len);
    rule.accuracy_on_eval = best_acc;
    std::size_t hp = 0;
    for (auto i : holdout) hp += pos[i] == 1;
    rule.baseline_on_eval = holdout.empty() ? 0.0
                                            : static_cast<double>(std::max(hp, holdout.size() - hp)) /
                                                  static_cast<double>(holdout.size());
    return rule;
}

/// Balances target vs rest by SMOTE (when asked) and learns one rule per class.
/// Output is sorted by holdout accuracy, highest first.
inline std::vector<ConjunctiveRule> rules_for_all_classes(const Dataset& ds, bool smote_to_balance = true,
                                                          std::uint64_t seed = 1, int max_antecedents = 3,
                                                          unsigned threads = 0) {
    ds.validate();
    const auto counts = ds.class_counts();
    std::vector<std::size_t> classes;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) classes.push_back(c);
    }
    if (classes.size() < 2) throw SingleClass("rules need at least two classes");
    const Standardizer scale = Standardizer::fit(ds.x);

    std::vector<ConjunctiveRule> rules(classes.size());
    parallel_for(
        classes.size(),
        [&](std::size_t idx) {
            const auto c = classes[idx];
            const auto class_seed = derive_seed(seed, c);
            std::vector<std::size_t> pos_rows;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (static_cast<std::size_t>(ds.y[i]) == c) pos_rows.push_back(i);
            }
            const std::size_t n_pos = pos_rows.size(), n_neg = ds.size() - n_pos;
            Matrix x = ds.x;
            std::vector<int> pos(ds.size());
            for (std::size_t i = 0; i < ds.size(); ++i) pos[i] = static_cast<std::size_t>(ds.y[i]) == c;
            if (smote_to_balance && n_neg > n_pos && n_pos >= 2) {
                const double ratio = static_cast<double>(n_neg - n_pos) / static_cast<double>(n_pos);
                const int amount = static_cast<int>(std::lround(ratio)) * 100;
                const Matrix synth = smote(ds.x.select_rows(pos_rows), 5, amount, derive_seed(class_seed, 1), &scale);
                for (std::size_t r = 0; r < synth.rows(); ++r) {
                    x.append_row(synth.row(r));
                    pos.push_back(1);
                }
            }
            ConjunctiveRule rule = learn_conjunctive_rule(x, pos, ds.feature_names, max_antecedents, derive_seed(class_seed, 2));
            rule.target_class = ds.class_names[c];
            rule.positives = 0;
            for (int v : pos) rule.positives += static_cast<std::size_t>(v);
            rule.negatives = pos.size() - rule.positives;
            rules[idx] = std::move(rule);
        },
        threads);
    std::stable_sort(rules.begin(), rules.end(), [](const ConjunctiveRule& a, const ConjunctiveRule& b) {
        return a.accuracy_on_eval > b.accuracy_on_eval;
    });
    return rules;
}

inline nlohmann::json to_json(const ConjunctiveRule& r) {
    auto ants = nlohmann::json::array();
    for (const auto& a : r.antecedents) {
        ants.push_back({{"feature", a.feature}, {"op", a.op == CompareOp::LT ? "LT" : "GT"}, {"threshold", a.threshold}});
    }
    return {{"class", r.target_class},
            {"rule", to_string(r)},
            {"antecedents", ants},
            {"accuracy", r.accuracy_on_eval},
            {"baseline", r.baseline_on_eval},
            {"unpruned_accuracy", r.grown_accuracy},
            {"positives", r.positives},
            {"negatives", r.negatives}};
}

inline std::string rules_markdown(const std::vector<ConjunctiveRule>& rules) {
    std::ostringstream os;
    os << "| Class | Rule | Accuracy (%) |\n|---|---|---|\n";
    for (const auto& r : rules) {
        os << "| " << r.target_class << " | " << to_string(r) << " | ";
        os.setf(std::ios::fixed);
        os.precision(1);
        os << r.accuracy_on_eval * 100 << " |\n";
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

}  // namespace gwprof
