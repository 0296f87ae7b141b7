#pragma once

// CART classification tree: Gini splits on midpoint thresholds, grown until
// pure or too small, optionally pruned by minimal cost-complexity with the
// complexity parameter chosen by internal cross-validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/dataset.hpp"
#include "gwprof/error.hpp"

namespace gwprof {

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0;
    int left = -1;     // rows with x[feature] < threshold
    int right = -1;
    int cls = 0;
    std::vector<double> counts;  // training class distribution at this node

    bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
public:
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    int predict(std::span<const double> x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].cls;
    }

    std::size_t size() const noexcept { return nodes.size(); }

    std::size_t leaves() const noexcept {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
    }

    int depth() const { return nodes.empty() ? 0 : depth_from(0); }

private:
    int depth_from(int i) const {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth_from(n.left), depth_from(n.right));
    }
};

struct CartParams {
    int min_leaf = 2;
    bool prune = true;
    int prune_folds = 5;
    std::uint64_t seed = 1;
};

namespace detail {

inline int majority(std::span<const double> counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Grows on per-node, per-feature sorted row lists so each level costs O(n d).
class TreeGrower {
public:
    TreeGrower(const Dataset& ds, int min_leaf) : ds_(ds), min_leaf_(static_cast<std::size_t>(std::max(1, min_leaf))) {}

    DecisionTree grow(const std::vector<std::size_t>& rows) {
        Sorted sorted(ds_.x.cols(), std::vector<std::uint32_t>(rows.begin(), rows.end()));
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            std::sort(sorted[f].begin(), sorted[f].end(), [&](std::uint32_t a, std::uint32_t b) {
                const double xa = ds_.x(a, f), xb = ds_.x(b, f);
                return xa < xb || (xa == xb && a < b);
            });
        }
        side_.assign(ds_.size(), 0);
        DecisionTree t;
        build(t, std::move(sorted), rows.size());
        return t;
    }

private:
    using Sorted = std::vector<std::vector<std::uint32_t>>;

    int build(DecisionTree& t, Sorted sorted, std::size_t n) {
        const auto k = ds_.n_classes();
        TreeNode node;
        node.counts.assign(k, 0.0);
        const auto& any = sorted.front();
        for (auto r : any) node.counts[static_cast<std::size_t>(ds_.y[r])] += 1.0;
        node.cls = majority(node.counts);
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.push_back(node);

        const bool pure = node.counts[static_cast<std::size_t>(node.cls)] == static_cast<double>(n);
        if (pure || n < 2 * min_leaf_) return id;

        // Maximise sum over sides of sum_c n_c^2 / n_side, i.e. minimise weighted Gini.
        // Zero-gain splits are accepted so impure nodes keep growing (XOR layouts).
        double parent_sq = 0;
        for (double c : node.counts) parent_sq += c * c;

        int best_feature = -1;
        double best_threshold = 0, best_score = -std::numeric_limits<double>::infinity();
        std::vector<double> left(k), right(k);
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            const auto& order = sorted[f];
            std::fill(left.begin(), left.end(), 0.0);
            right = node.counts;
            double left_sq = 0, right_sq = parent_sq;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto c = static_cast<std::size_t>(ds_.y[order[i]]);
                left_sq += 2 * left[c] + 1;
                left[c] += 1;
                right_sq -= 2 * right[c] - 1;
                right[c] -= 1;
                const double xv = ds_.x(order[i], f), xn = ds_.x(order[i + 1], f);
                if (xv == xn) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < min_leaf_ || nr < min_leaf_) continue;
                const double score = left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr);
                if (score > best_score) {
                    const double mid = xv + (xn - xv) / 2;
                    if (!(mid > xv && mid <= xn)) continue;
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) return id;

        const auto bf = static_cast<std::size_t>(best_feature);
        std::size_t nl = 0;
        for (auto r : sorted[bf]) {
            side_[r] = ds_.x(r, bf) < best_threshold ? 1 : 2;
            nl += side_[r] == 1;
        }
        Sorted lsorted(sorted.size()), rsorted(sorted.size());
        for (std::size_t f = 0; f < sorted.size(); ++f) {
            lsorted[f].reserve(nl);
            rsorted[f].reserve(n - nl);
            for (auto r : sorted[f]) (side_[r] == 1 ? lsorted[f] : rsorted[f]).push_back(r);
            std::vector<std::uint32_t>().swap(sorted[f]);
        }
        const int l = build(t, std::move(lsorted), nl);
        const int r = build(t, std::move(rsorted), n - nl);
        auto& me = t.nodes[static_cast<std::size_t>(id)];
        me.feature = best_feature;
        me.threshold = best_threshold;
        me.left = l;
        me.right = r;
        return id;
    }

    const Dataset& ds_;
    std::size_t min_leaf_;
    std::vector<std::uint8_t> side_;
};

// Copies the subtree reachable from the root, turning `collapsed` nodes into leaves.
inline DecisionTree compact(const DecisionTree& t, const std::vector<bool>& collapsed) {
    DecisionTree out;
    auto copy = [&](auto&& self, int i) -> int {
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back(t.nodes[static_cast<std::size_t>(i)]);
        if (collapsed[static_cast<std::size_t>(i)] || t.nodes[static_cast<std::size_t>(i)].is_leaf()) {
            auto& n = out.nodes[static_cast<std::size_t>(id)];
            n.feature = -1;
            n.left = n.right = -1;
            return id;
        }
        const int l = self(self, t.nodes[static_cast<std::size_t>(i)].left);
        const int r = self(self, t.nodes[static_cast<std::size_t>(i)].right);
        out.nodes[static_cast<std::size_t>(id)].left = l;
        out.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    };
    copy(copy, 0);
    return out;
}

}  // namespace detail

struct PruneStep {
    double alpha = 0;
    DecisionTree tree;
};

/// Weakest-link pruning sequence, from the tree with zero-cost branches removed
/// (alpha 0) down to the root alone. Costs are training misclassifications.
inline std::vector<PruneStep> cost_complexity_sequence(const DecisionTree& full) {
    std::vector<PruneStep> seq;
    DecisionTree cur = full;
    double alpha = 0;
    while (true) {
        const auto n = cur.nodes.size();
        double total = 0;
        for (double c : cur.nodes[0].counts) total += c;
        std::vector<double> node_cost(n), subtree_cost(n), leaves(n);
        for (std::size_t i = n; i-- > 0;) {
            // Children always follow their parent in `nodes`.
            const auto& nd = cur.nodes[i];
            double sum = 0;
            for (double c : nd.counts) sum += c;
            node_cost[i] = (sum - nd.counts[static_cast<std::size_t>(nd.cls)]) / total;
            if (nd.is_leaf()) {
                subtree_cost[i] = node_cost[i];
                leaves[i] = 1;
            } else {
                subtree_cost[i] = subtree_cost[static_cast<std::size_t>(nd.left)] + subtree_cost[static_cast<std::size_t>(nd.right)];
                leaves[i] = leaves[static_cast<std::size_t>(nd.left)] + leaves[static_cast<std::size_t>(nd.right)];
            }
        }
        double g_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (cur.nodes[i].is_leaf()) continue;
            g_min = std::min(g_min, (node_cost[i] - subtree_cost[i]) / (leaves[i] - 1));
        }
        if (seq.empty() && g_min > 1e-12) {
            seq.push_back({0.0, cur});
        }
        if (!std::isfinite(g_min)) {
            if (seq.empty() || seq.back().tree.size() != cur.size()) seq.push_back({alpha, cur});
            break;
        }
        alpha = std::max(alpha, g_min);
        std::vector<bool> collapsed(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (!cur.nodes[i].is_leaf() && (node_cost[i] - subtree_cost[i]) / (leaves[i] - 1) <= g_min + 1e-12) {
                collapsed[i] = true;
            }
        }
        cur = detail::compact(cur, collapsed);
        if (!seq.empty() && seq.back().alpha == alpha) {
            seq.back().tree = cur;
        } else {
            seq.push_back({alpha, cur});
        }
    }
    return seq;
}

/// Subtree of a pruning sequence for complexity `alpha` (largest step alpha <= alpha).
inline const DecisionTree& subtree_for_alpha(const std::vector<PruneStep>& seq, double alpha) {
    const DecisionTree* best = &seq.front().tree;
    for (const auto& s : seq) {
        if (s.alpha <= alpha + 1e-15) best = &s.tree;
    }
    return *best;
}

inline DecisionTree cart_train(const Dataset& ds, const CartParams& params = {}) {
    ds.validate();
    if (ds.size() == 0) throw EmptyDataset("cart_train on an empty dataset");
    if (params.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    DecisionTree full = detail::TreeGrower(ds, params.min_leaf).grow(all);
    if (!params.prune || full.size() == 1) return full;

    const auto seq = cost_complexity_sequence(full);
    if (seq.size() == 1) return seq.front().tree;

    // Geometric midpoints of consecutive alphas represent each step.
    std::vector<double> probe(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        probe[i] = i + 1 < seq.size() ? std::sqrt(seq[i].alpha * seq[i + 1].alpha)
                                      : std::numeric_limits<double>::infinity();
    }

    const int folds = std::max(2, params.prune_folds);
    const auto fold = stratified_folds(ds.y, folds, params.seed);
    std::vector<double> errors(seq.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < ds.size(); ++i) (fold[i] == f ? test : train).push_back(i);
        if (train.empty() || test.empty()) continue;
        const auto fold_seq = cost_complexity_sequence(detail::TreeGrower(ds, params.min_leaf).grow(train));
        for (std::size_t s = 0; s < seq.size(); ++s) {
            const auto& t = subtree_for_alpha(fold_seq, probe[s]);
            for (auto i : test) errors[s] += t.predict(ds.x.row(i)) != ds.y[i] ? 1.0 : 0.0;
        }
    }
    // Fewest errors; ties go to the larger alpha (smaller tree).
    std::size_t best = 0;
    for (std::size_t s = 1; s < seq.size(); ++s) {
        if (errors[s] <= errors[best]) best = s;
    }
    return seq[best].tree;
}

inline nlohmann::json to_json(const DecisionTree& t) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        nlohmann::json j{{"class", n.cls}, {"counts", n.counts}};
        if (!n.is_leaf()) {
            j["feature"] = n.feature;
            j["threshold"] = n.threshold;
            j["left"] = n.left;
            j["right"] = n.right;
        }
        nodes.push_back(std::move(j));
    }
    return nodes;
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& n : j) {
        TreeNode node;
        node.cls = n.at("class").get<int>();
        node.counts = n.at("counts").get<std::vector<double>>();
        if (n.contains("feature")) {
            node.feature = n["feature"].get<int>();
            node.threshold = n["threshold"].get<double>();
            node.left = n["left"].get<int>();
            node.right = n["right"].get<int>();
        }
        t.nodes.push_back(std::move(node));
    }
    return t;
}

}  // namespace gwprof
