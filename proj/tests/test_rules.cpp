#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "gwprof/rules.hpp"

using namespace gwprof;
using Catch::Matchers::WithinAbs;

namespace {

// Does p lie on the segment [a, b]? Solves for u on the widest coordinate.
bool on_segment(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
    std::size_t f = 0;
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (std::abs(b[i] - a[i]) > std::abs(b[f] - a[f])) f = i;
    }
    const double span = b[f] - a[f];
    const double u = span == 0 ? 0.0 : (p[f] - a[f]) / span;
    if (u < -1e-12 || u > 1 + 1e-12) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] + u * (b[i] - a[i]) - p[i]) > 1e-9 * std::max(1.0, std::abs(a[i]) + std::abs(b[i]))) return false;
    }
    return true;
}

Dataset three_class_data(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    Dataset ds;
    ds.class_names = {"big", "mid", "small"};
    ds.feature_names = {"u", "v"};
    ds.x = Matrix(0, 2);
    const int sizes[3] = {120, 40, 12};
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < sizes[c]; ++i) {
            ds.x.append_row(std::vector<double>{n(rng) + 5.0 * c, n(rng) - 3.0 * c});
            ds.y.push_back(c);
        }
    }
    return ds;
}

}  // namespace

TEST_CASE("smote between two points stays on their segment", "[rules][smote]") {
    Matrix m(0, 3);
    m.append_row(std::vector<double>{0, 10, -4});
    m.append_row(std::vector<double>{2, 30, 4});
    const auto s = smote(m, 5, 300, 1);
    REQUIRE(s.rows() == 6);
    for (std::size_t r = 0; r < s.rows(); ++r) CHECK(on_segment(s.row(r), m.row(0), m.row(1)));
}

TEST_CASE("smote synthetic rows lie on minority segments", "[rules][smote][oracle]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m(0, 4);
        const int rows = 3 + trial;
        for (int i = 0; i < rows; ++i) m.append_row(std::vector<double>{n(rng), n(rng) * 100, n(rng), 7});
        const int amount = 100 * (1 + trial % 4);
        const auto s = smote(m, 5, amount, 100 + trial);
        REQUIRE(s.rows() == static_cast<std::size_t>(rows * amount / 100));
        for (std::size_t r = 0; r < s.rows(); ++r) {
            bool found = false;
            for (std::size_t i = 0; i < m.rows() && !found; ++i) {
                for (std::size_t j = i + 1; j < m.rows() && !found; ++j) found = on_segment(s.row(r), m.row(i), m.row(j));
            }
            CHECK(found);
            CHECK(s(r, 3) == 7);
        }
        CHECK(smote(m, 5, amount, 100 + trial).data() == s.data());
    }
}

TEST_CASE("smote argument checks", "[rules][smote]") {
    Matrix one(0, 2);
    one.append_row(std::vector<double>{1, 2});
    CHECK_THROWS_AS(smote(one, 5, 100, 1), TooFewMinority);
    Matrix two(2, 2, 1.0);
    CHECK_THROWS_AS(smote(two, 5, 150, 1), ConfigError);
    CHECK_THROWS_AS(smote(two, 0, 100, 1), ConfigError);
    CHECK(smote(two, 5, 0, 1).rows() == 0);
}

TEST_CASE("a single threshold rule is recovered", "[rules]") {
    Matrix x(0, 2);
    std::vector<int> pos;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        x.append_row(std::vector<double>{double(i % 20), std::uniform_real_distribution<double>(0, 1)(rng)});
        pos.push_back(i % 20 > 5);
    }
    const auto r = learn_conjunctive_rule(x, pos, {"x", "noise"}, 3, 7);
    REQUIRE(r.antecedents.size() == 1);
    CHECK(r.antecedents[0].feature == "x");
    CHECK(r.antecedents[0].op == CompareOp::GT);
    CHECK(r.antecedents[0].threshold > 5);
    CHECK(r.antecedents[0].threshold < 6);
    CHECK(r.accuracy_on_eval == 1.0);
    CHECK(to_string(r) == "x > 5.5");
}

TEST_CASE("a two-antecedent conjunction is recovered exactly", "[rules][oracle]") {
    Matrix x(0, 3);
    std::vector<int> pos;
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            const double a = i * 0.25, b = j * 0.25, c = (i * 7 + j * 3) % 11;
            x.append_row(std::vector<double>{a, b, c});
            raw.push_back({a, b, c});
            pos.push_back(a > 1 && b < 2);
        }
    }
    const auto r = learn_conjunctive_rule(x, pos, {"a", "b", "c"}, 3, 3);
    CHECK(r.antecedents.size() == 2);
    // Exhaustive check: the rule labels every row exactly like the target.
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(r.covers(raw[i]) == (pos[i] == 1));
    CHECK(r.accuracy_on_eval == 1.0);
}

TEST_CASE("rule learner argument checks", "[rules]") {
    Matrix x(3, 1, 0.0);
    CHECK_THROWS_AS(learn_conjunctive_rule(x, std::vector<int>{1, 1, 1}, {"a"}), SingleClass);
    CHECK_THROWS_AS(learn_conjunctive_rule(x, std::vector<int>{1, 0}, {"a"}), LengthMismatch);
    CHECK_THROWS_AS(learn_conjunctive_rule(x, std::vector<int>{1, 0, 0}, {"a", "b"}), LengthMismatch);
}

TEST_CASE("rules_for_all_classes balances with SMOTE", "[rules]") {
    const auto ds = three_class_data(2);
    const auto rules = rules_for_all_classes(ds, true, 9, 3, 1);
    REQUIRE(rules.size() == 3);
    const auto counts = ds.class_counts();
    for (const auto& r : rules) {
        const auto c = static_cast<std::size_t>(std::find(ds.class_names.begin(), ds.class_names.end(), r.target_class) -
                                                ds.class_names.begin());
        REQUIRE(c < 3);
        CHECK(r.negatives == ds.size() - counts[c]);
        if (counts[c] < r.negatives) {
            // Rounded to a whole number of copies: within half a class of balance.
            CHECK(std::abs(double(r.positives) - double(r.negatives)) <= counts[c] / 2.0 + 1e-9);
        } else {
            CHECK(r.positives == counts[c]);
        }
        CHECK(r.accuracy_on_eval >= 0.9);
    }
    for (std::size_t i = 1; i < rules.size(); ++i) CHECK(rules[i].accuracy_on_eval <= rules[i - 1].accuracy_on_eval);

    const auto plain = rules_for_all_classes(ds, false, 9, 3, 1);
    for (const auto& r : plain) CHECK(r.positives + r.negatives == ds.size());

    const auto again = rules_for_all_classes(ds, true, 9, 3, 2);
    for (std::size_t i = 0; i < rules.size(); ++i) CHECK(to_json(again[i]) == to_json(rules[i]));
}

TEST_CASE("rules markdown table", "[rules]") {
    ConjunctiveRule r;
    r.target_class = "Smartphone";
    r.antecedents = {{"rssi_ad", 88, CompareOp::GT, 2.5}, {"tx_count", 10, CompareOp::LT, 40}};
    r.accuracy_on_eval = 0.9512;
    const auto md = rules_markdown({r});
    CHECK(md.find("| Smartphone | rssi_ad > 2.5 AND tx_count < 40 | 95.1 |") != std::string::npos);
    const auto j = to_json(r);
    CHECK(j["antecedents"][0]["op"] == "GT");
    CHECK(j["rule"] == "rssi_ad > 2.5 AND tx_count < 40");
}
