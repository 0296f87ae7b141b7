#pragma once

// Model specs, k-fold evaluation, nested grid search, OUI one-hot encoding and
// the data-sufficiency sweep.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/cart.hpp"
#include "gwprof/dataset.hpp"
#include "gwprof/error.hpp"
#include "gwprof/rng.hpp"
#include "gwprof/svm.hpp"
#include "gwprof/telemetry.hpp"

namespace gwprof {

enum class ModelKind { ZeroR, Cart, Svm };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::ZeroR: return "zeror";
        case ModelKind::Cart: return "cart";
        case ModelKind::Svm: return "svm";
    }
    return "?";
}

inline ModelKind model_kind_from_string(std::string_view s) {
    if (s == "zeror") return ModelKind::ZeroR;
    if (s == "cart") return ModelKind::Cart;
    if (s == "svm") return ModelKind::Svm;
    throw ConfigError("unknown model '" + std::string(s) + "' (expected zeror, cart or svm)");
}

struct ModelSpec {
    ModelKind kind = ModelKind::ZeroR;
    double c = 1.0;
    int min_leaf = 2;
    bool prune = true;
    std::uint64_t seed = 1;

    bool operator==(const ModelSpec&) const = default;
};

inline nlohmann::json to_json(const ModelSpec& s) {
    nlohmann::json j{{"model", to_string(s.kind)}};
    if (s.kind == ModelKind::Svm) j["c"] = s.c;
    if (s.kind == ModelKind::Cart) {
        j["min_leaf"] = s.min_leaf;
        j["prune"] = s.prune;
    }
    return j;
}

struct ZeroRModel {
    int cls = 0;
};

inline ZeroRModel zero_r(const Dataset& ds) {
    if (ds.size() == 0) throw EmptyDataset("zero_r on an empty dataset");
    const auto counts = ds.class_counts();
    return {static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin())};
}

using Model = std::variant<ZeroRModel, DecisionTree, SvmMulticlass>;

inline Model train_model(const Dataset& ds, const ModelSpec& spec) {
    switch (spec.kind) {
        case ModelKind::ZeroR: return zero_r(ds);
        case ModelKind::Cart: return cart_train(ds, CartParams{spec.min_leaf, spec.prune, 5, spec.seed});
        case ModelKind::Svm: return svm_multiclass(ds, spec.c);
    }
    throw ConfigError("unknown model kind");
}

inline int predict(const Model& m, std::span<const double> row) {
    return std::visit(
        [&](const auto& model) -> int {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, ZeroRModel>) {
                return model.cls;
            } else {
                return model.predict(row);
            }
        },
        m);
}

inline nlohmann::json model_to_json(const Model& m, const ModelSpec& spec, const Dataset& ds) {
    nlohmann::json j{{"schema_version", 1},
                     {"spec", to_json(spec)},
                     {"class_names", ds.class_names},
                     {"feature_names", ds.feature_names}};
    if (const auto* z = std::get_if<ZeroRModel>(&m)) j["modal_class"] = z->cls;
    if (const auto* t = std::get_if<DecisionTree>(&m)) j["tree"] = to_json(*t);
    if (const auto* s = std::get_if<SvmMulticlass>(&m)) j["svm"] = to_json(*s);
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    if (j.contains("modal_class")) return ZeroRModel{j["modal_class"].get<int>()};
    if (j.contains("tree")) return tree_from_json(j["tree"]);
    if (j.contains("svm")) return svm_from_json(j["svm"]);
    throw ConfigError("model file has no model body");
}

struct EvalReport {
    std::vector<std::string> class_names;
    double accuracy = 0;
    double f_measure = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted], summed over folds
    double baseline_accuracy = 0;
    double improvement = 0;
    std::vector<double> fold_accuracy;

    std::size_t total() const {
        std::size_t s = 0;
        for (const auto& row : confusion)
            for (auto v : row) s += v;
        return s;
    }

    std::size_t correct() const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < confusion.size(); ++i) s += confusion[i][i];
        return s;
    }
};

inline nlohmann::json to_json(const EvalReport& r) {
    auto per_class = nlohmann::json::array();
    for (std::size_t c = 0; c < r.confusion.size(); ++c) {
        std::size_t support = 0, predicted = 0;
        for (std::size_t p = 0; p < r.confusion.size(); ++p) {
            support += r.confusion[c][p];
            predicted += r.confusion[p][c];
        }
        const double tp = static_cast<double>(r.confusion[c][c]);
        per_class.push_back({{"class", r.class_names[c]},
                             {"support", support},
                             {"precision", predicted ? tp / static_cast<double>(predicted) : 0.0},
                             {"recall", support ? tp / static_cast<double>(support) : 0.0}});
    }
    return {{"accuracy", r.accuracy},
            {"f_measure", r.f_measure},
            {"baseline_accuracy", r.baseline_accuracy},
            {"improvement", r.improvement},
            {"fold_accuracy", r.fold_accuracy},
            {"class_names", r.class_names},
            {"confusion", r.confusion},
            {"per_class", per_class}};
}

namespace detail {

/// Support-weighted mean of per-class F1 over the classes present in `actual`.
inline double weighted_f1(std::span<const int> actual, std::span<const int> predicted, std::size_t n_classes) {
    std::vector<double> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0), support(n_classes, 0);
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const auto a = static_cast<std::size_t>(actual[i]), p = static_cast<std::size_t>(predicted[i]);
        support[a] += 1;
        if (a == p) {
            tp[a] += 1;
        } else {
            fn[a] += 1;
            fp[p] += 1;
        }
    }
    double total = 0, sum = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (support[c] == 0) continue;
        const double denom = 2 * tp[c] + fp[c] + fn[c];
        sum += support[c] * (denom > 0 ? 2 * tp[c] / denom : 0.0);
        total += support[c];
    }
    return total > 0 ? sum / total : 0.0;
}

struct FoldOutcome {
    std::vector<std::size_t> test;
    std::vector<int> predicted;
    std::vector<int> baseline;
};

/// Plain k-fold run without the per-class size check; used for inner loops.
inline std::vector<FoldOutcome> run_folds(const Dataset& ds, const ModelSpec& spec, int k, std::uint64_t seed,
                                          unsigned threads) {
    const auto fold = stratified_folds(ds.y, k, seed);
    std::vector<FoldOutcome> out(static_cast<std::size_t>(k));
    parallel_for(
        static_cast<std::size_t>(k),
        [&](std::size_t f) {
            std::vector<std::size_t> train;
            auto& o = out[f];
            for (std::size_t i = 0; i < ds.size(); ++i) {
                (fold[i] == static_cast<int>(f) ? o.test : train).push_back(i);
            }
            if (o.test.empty()) return;
            const Dataset tr = ds.subset(train);
            ModelSpec s = spec;
            s.seed = derive_seed(seed, f);
            const Model m = train_model(tr, s);
            const int modal = zero_r(tr).cls;
            for (auto i : o.test) {
                o.predicted.push_back(predict(m, ds.x.row(i)));
                o.baseline.push_back(modal);
            }
        },
        threads);
    return out;
}

inline double mean_accuracy(const Dataset& ds, const std::vector<FoldOutcome>& folds) {
    double sum = 0;
    int used = 0;
    for (const auto& o : folds) {
        if (o.test.empty()) continue;
        std::size_t ok = 0;
        for (std::size_t t = 0; t < o.test.size(); ++t) ok += o.predicted[t] == ds.y[o.test[t]];
        sum += static_cast<double>(ok) / static_cast<double>(o.test.size());
        ++used;
    }
    return used ? sum / used : 0.0;
}

inline EvalReport summarize(const Dataset& ds, const std::vector<FoldOutcome>& folds) {
    EvalReport r;
    r.class_names = ds.class_names;
    const auto k = ds.n_classes();
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    double acc = 0, base = 0, f1 = 0;
    int used = 0;
    for (const auto& o : folds) {
        if (o.test.empty()) continue;
        std::vector<int> actual;
        std::size_t ok = 0, base_ok = 0;
        for (std::size_t t = 0; t < o.test.size(); ++t) {
            const int a = ds.y[o.test[t]];
            actual.push_back(a);
            ++r.confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(o.predicted[t])];
            ok += o.predicted[t] == a;
            base_ok += o.baseline[t] == a;
        }
        const double n = static_cast<double>(o.test.size());
        r.fold_accuracy.push_back(static_cast<double>(ok) / n);
        acc += static_cast<double>(ok) / n;
        base += static_cast<double>(base_ok) / n;
        f1 += weighted_f1(actual, o.predicted, k);
        ++used;
    }
    if (used) {
        r.accuracy = acc / used;
        r.baseline_accuracy = base / used;
        r.f_measure = f1 / used;
    }
    r.improvement = r.accuracy - r.baseline_accuracy;
    return r;
}

}  // namespace detail

/// Stratified k-fold evaluation. Accuracy and F-measure are fold averages; the
/// ZeroR baseline uses the same folds.
inline EvalReport cross_validate(const Dataset& ds, const ModelSpec& spec, int k = 10, std::uint64_t seed = 1,
                                 unsigned threads = 0) {
    ds.validate();
    if (ds.size() == 0) throw EmptyDataset("cross_validate on an empty dataset");
    require_per_class(ds, k);
    return detail::summarize(ds, detail::run_folds(ds, spec, k, seed, threads));
}

/// Default grids, ordered from least to most complex so ties keep the earlier point.
inline std::vector<ModelSpec> default_grid(ModelKind kind) {
    std::vector<ModelSpec> grid;
    if (kind == ModelKind::Svm) {
        for (double c : {0.01, 0.1, 1.0, 10.0, 100.0}) grid.push_back({ModelKind::Svm, c, 2, true, 1});
    } else if (kind == ModelKind::Cart) {
        for (int leaf : {10, 5, 2, 1}) {
            for (bool prune : {true, false}) grid.push_back({ModelKind::Cart, 1.0, leaf, prune, 1});
        }
    } else {
        grid.push_back({ModelKind::ZeroR});
    }
    return grid;
}

inline ModelSpec default_spec(ModelKind kind) {
    if (kind == ModelKind::Svm) return {ModelKind::Svm, 1.0, 2, true, 1};
    if (kind == ModelKind::Cart) return {ModelKind::Cart, 1.0, 2, true, 1};
    return {ModelKind::ZeroR};
}

struct GridResult {
    ModelSpec best;
    EvalReport report;                  // outer-loop estimate
    std::vector<std::size_t> chosen;    // grid index picked per outer fold
    std::vector<std::vector<double>> inner_accuracy;  // [outer fold][grid point]
};

/// Nested cross-validation: each outer training split picks its grid point by
/// inner k-fold accuracy, and the outer test split scores that choice. `best`
/// is the point picked most often.
inline GridResult grid_search(const Dataset& ds, const std::vector<ModelSpec>& grid, int k = 10, int inner_k = 5,
                              std::uint64_t seed = 1, unsigned threads = 0) {
    if (grid.empty()) throw ConfigError("grid_search needs a non-empty grid");
    ds.validate();
    if (ds.size() == 0) throw EmptyDataset("grid_search on an empty dataset");
    require_per_class(ds, k);

    const auto fold = stratified_folds(ds.y, k, seed);
    std::vector<detail::FoldOutcome> outer(static_cast<std::size_t>(k));
    GridResult result;
    result.chosen.assign(static_cast<std::size_t>(k), 0);
    result.inner_accuracy.assign(static_cast<std::size_t>(k), std::vector<double>(grid.size(), 0.0));
    parallel_for(
        static_cast<std::size_t>(k),
        [&](std::size_t f) {
            std::vector<std::size_t> train;
            auto& o = outer[f];
            for (std::size_t i = 0; i < ds.size(); ++i) (fold[i] == static_cast<int>(f) ? o.test : train).push_back(i);
            if (o.test.empty()) return;
            const Dataset tr = ds.subset(train);
            std::size_t best = 0;
            if (grid.size() > 1) {
                auto& acc = result.inner_accuracy[f];
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    acc[g] = detail::mean_accuracy(tr, detail::run_folds(tr, grid[g], inner_k, derive_seed(seed, 1000 + f), 1));
                    if (acc[g] > acc[best]) best = g;
                }
            }
            result.chosen[f] = best;
            ModelSpec s = grid[best];
            s.seed = derive_seed(seed, f);
            const Model m = train_model(tr, s);
            const int modal = zero_r(tr).cls;
            for (auto i : o.test) {
                o.predicted.push_back(predict(m, ds.x.row(i)));
                o.baseline.push_back(modal);
            }
        },
        threads);
    result.report = detail::summarize(ds, outer);
    std::vector<std::size_t> votes(grid.size(), 0);
    for (auto g : result.chosen) ++votes[g];
    result.best = grid[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
    return result;
}

inline nlohmann::json to_json(const GridResult& g, const std::vector<ModelSpec>& grid) {
    auto chosen = nlohmann::json::array();
    for (auto i : g.chosen) chosen.push_back(to_json(grid[i]));
    return {{"best", to_json(g.best)}, {"report", to_json(g.report)}, {"chosen_per_fold", chosen},
            {"inner_accuracy", g.inner_accuracy}};
}

/// Appends one-hot columns for the `top_n` most frequent OUIs plus an "other" column.
/// Frequency ties go to the lexicographically smaller OUI.
inline Dataset encode_oui(const Dataset& ds, std::span<const Oui> ouis, std::size_t top_n) {
    if (ouis.size() != ds.size()) throw LengthMismatch("encode_oui: one OUI per row required");
    std::map<std::string, std::size_t> freq;
    for (const auto& o : ouis) ++freq[o.to_string()];
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > top_n) ranked.resize(top_n);

    Dataset out;
    out.y = ds.y;
    out.class_names = ds.class_names;
    out.feature_names = ds.feature_names;
    for (const auto& [name, count] : ranked) out.feature_names.push_back("oui_" + name);
    out.feature_names.push_back("oui_other");
    const std::size_t extra = ranked.size() + 1;
    out.x = Matrix(ds.size(), ds.x.cols() + extra);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        auto src = ds.x.row(r);
        std::copy(src.begin(), src.end(), out.x.row(r).begin());
        const auto name = ouis[r].to_string();
        std::size_t slot = ranked.size();
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            if (ranked[i].first == name) slot = i;
        }
        out.x(r, ds.x.cols() + slot) = 1.0;
    }
    return out;
}

/// Rows whose class has at least `min_size` members; names of dropped classes.
inline std::pair<Dataset, std::vector<std::string>> drop_small_classes(const Dataset& ds, std::size_t min_size) {
    const auto counts = ds.class_counts();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (counts[static_cast<std::size_t>(ds.y[i])] >= min_size) keep.push_back(i);
    }
    std::vector<std::string> dropped;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0 && counts[c] < min_size) dropped.push_back(ds.class_names[c]);
    }
    return {ds.subset(keep), dropped};
}

struct SweepPoint {
    int threshold = 0;
    std::size_t kept = 0;       // devices meeting the threshold
    std::size_t evaluated = 0;  // after dropping classes smaller than the fold count
    std::vector<std::string> dropped_classes;
    std::optional<EvalReport> report;
    std::string error;
};

inline nlohmann::json to_json(const SweepPoint& p) {
    nlohmann::json j{{"threshold", p.threshold}, {"kept", p.kept}, {"evaluated", p.evaluated},
                     {"dropped_classes", p.dropped_classes}};
    if (p.report) {
        j["accuracy"] = p.report->accuracy;
        j["baseline_accuracy"] = p.report->baseline_accuracy;
        j["improvement"] = p.report->improvement;
    } else {
        j["error"] = p.error;
    }
    return j;
}

/// Re-filters an already extracted dataset by per-row active days and
/// re-evaluates `spec` at each threshold. Failures are recorded per threshold.
inline std::vector<SweepPoint> data_sufficiency_sweep(const Dataset& ds, std::span<const int> days,
                                                      std::span<const int> thresholds, const ModelSpec& spec,
                                                      int k = 10, std::uint64_t seed = 1, unsigned threads = 0) {
    if (days.size() != ds.size()) throw LengthMismatch("sweep: one active-day count per row required");
    std::vector<SweepPoint> out;
    for (int d : thresholds) {
        if (d < 1) throw ConfigError("sweep thresholds must be >= 1");
        SweepPoint p;
        p.threshold = d;
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (days[i] >= d) rows.push_back(i);
        }
        p.kept = rows.size();
        try {
            auto [sub, dropped] = drop_small_classes(ds.subset(rows), static_cast<std::size_t>(k));
            p.dropped_classes = std::move(dropped);
            p.evaluated = sub.size();
            if (sub.size() == 0) throw EmptyDataset("no devices with at least " + std::to_string(d) + " active days");
            p.report = cross_validate(sub, spec, k, seed, threads);
        } catch (const Error& e) {
            p.error = e.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace gwprof
