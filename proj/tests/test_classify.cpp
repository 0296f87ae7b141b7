#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "gwprof/evaluate.hpp"

using namespace gwprof;
using Catch::Matchers::WithinAbs;

namespace {

Dataset make(const std::vector<std::vector<double>>& rows, const std::vector<int>& y, std::size_t classes) {
    Dataset ds;
    ds.x = Matrix(0, rows.front().size());
    for (const auto& r : rows) ds.x.append_row(r);
    ds.y = y;
    for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
    for (std::size_t f = 0; f < rows.front().size(); ++f) ds.feature_names.push_back("f" + std::to_string(f));
    return ds;
}

// Gaussian blobs centred on the corners of a simplex, `spread` apart.
Dataset blobs(std::size_t per_class, std::size_t classes, double spread, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, sd);
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> r(classes);
            for (std::size_t f = 0; f < classes; ++f) r[f] = (f == c ? spread : 0.0) + n(rng);
            rows.push_back(r);
            y.push_back(static_cast<int>(c));
        }
    }
    return make(rows, y, classes);
}

double train_accuracy(const Model& m, const Dataset& ds) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) ok += predict(m, ds.x.row(i)) == ds.y[i];
    return static_cast<double>(ok) / static_cast<double>(ds.size());
}

double dual_oracle(const Matrix& x, const std::vector<int>& y, const std::vector<double>& a) {
    double lin = 0;
    std::vector<double> w(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        lin += a[i];
        for (std::size_t f = 0; f < x.cols(); ++f) w[f] += a[i] * y[i] * x(i, f);
    }
    double q = 0;
    for (double v : w) q += v * v;
    return lin - 0.5 * q;
}

}  // namespace

TEST_CASE("zero_r predicts the modal class", "[classify]") {
    const auto ds = make({{0}, {0}, {0}, {0}, {0}}, {2, 1, 2, 0, 2}, 3);
    CHECK(zero_r(ds).cls == 2);
    const auto tie = make({{0}, {0}}, {1, 0}, 2);
    CHECK(zero_r(tie).cls == 0);
    Dataset empty;
    CHECK_THROWS_AS(zero_r(empty), EmptyDataset);
}

TEST_CASE("stratified folds are balanced", "[classify]") {
    std::vector<int> y;
    for (int i = 0; i < 103; ++i) y.push_back(i % 7 == 0 ? 2 : i % 3 == 0 ? 1 : 0);
    const auto fold = stratified_folds(y, 10, 5);
    std::vector<int> size(10, 0);
    std::vector<std::vector<int>> per(3, std::vector<int>(10, 0));
    for (std::size_t i = 0; i < y.size(); ++i) {
        ++size[fold[i]];
        ++per[y[i]][fold[i]];
    }
    CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
    for (const auto& p : per) CHECK(*std::max_element(p.begin(), p.end()) - *std::min_element(p.begin(), p.end()) <= 1);
    CHECK(stratified_folds(y, 10, 5) == fold);
    CHECK_THROWS_AS(stratified_folds(y, 1, 5), ConfigError);
}

TEST_CASE("cart finds a single threshold", "[classify][cart]") {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 10; ++i) {
        rows.push_back({double(i), 7.0});
        y.push_back(i >= 5);
    }
    const auto t = cart_train(make(rows, y, 2), {1, false, 5, 1});
    REQUIRE(t.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold > 4);
    CHECK(t.nodes[0].threshold <= 5);
    CHECK(t.predict(std::vector<double>{4.2, 0}) == 0);
    CHECK(t.predict(std::vector<double>{5.0, 0}) == 1);
}

TEST_CASE("cart solves xor at depth two", "[classify][cart]") {
    const std::vector<std::vector<double>> rows{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto ds = make(rows, y, 2);

    // Brute force over every axis-aligned stump: none beats 50%.
    double best_stump = 0;
    for (std::size_t f = 0; f < 2; ++f) {
        for (double t : {-0.5, 0.5, 1.5}) {
            for (int left_cls : {0, 1}) {
                int ok = 0;
                for (std::size_t i = 0; i < rows.size(); ++i) ok += (rows[i][f] < t ? left_cls : 1 - left_cls) == y[i];
                best_stump = std::max(best_stump, ok / 4.0);
            }
        }
    }
    CHECK(best_stump == 0.5);

    const auto t = cart_train(ds, {1, false, 5, 1});
    CHECK(t.depth() == 2);
    CHECK(train_accuracy(t, ds) == 1.0);
}

TEST_CASE("cart fits clustered xor with unequal quadrants", "[classify][cart]") {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    const int counts[4] = {10, 12, 14, 16};
    for (int q = 0; q < 4; ++q) {
        for (int i = 0; i < counts[q]; ++i) {
            const double a = (q & 1) ? 1 + 0.01 * i : -1 - 0.01 * i;
            const double b = (q & 2) ? 1 + 0.02 * i : -1 - 0.02 * i;
            rows.push_back({a, b});
            y.push_back(((q & 1) != 0) != ((q & 2) != 0));
        }
    }
    const auto ds = make(rows, y, 2);
    CHECK(train_accuracy(cart_train(ds, {1, false, 5, 1}), ds) == 1.0);
}

TEST_CASE("unpruned cart memorises duplicate-free data", "[classify][cart][property]") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> rows;
        std::vector<int> y;
        const std::size_t d = 2 + rng() % 4;
        for (int i = 0; i < 150; ++i) {
            std::vector<double> r(d);
            for (auto& v : r) v = std::uniform_real_distribution<double>(-1, 1)(rng);
            rows.push_back(r);
            y.push_back(static_cast<int>(rng() % 3));
        }
        const auto ds = make(rows, y, 3);
        CHECK(train_accuracy(cart_train(ds, {1, false, 5, 1}), ds) == 1.0);
    }
}

TEST_CASE("cart stops on pure nodes", "[classify][cart]") {
    const auto pure = make({{1}, {2}, {3}}, {1, 1, 1}, 2);
    const auto t = cart_train(pure);
    CHECK(t.size() == 1);
    CHECK(t.predict(std::vector<double>{100}) == 1);
}

TEST_CASE("cart is exact on noiseless separable data", "[classify][cart]") {
    const auto ds = blobs(40, 4, 12.0, 3, 0.5);
    CHECK(train_accuracy(cart_train(ds), ds) == 1.0);
}

TEST_CASE("pruning never grows the tree", "[classify][cart]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ds = blobs(60, 3, 1.5, seed);
        const auto full = cart_train(ds, {1, false, 5, seed});
        const auto pruned = cart_train(ds, {1, true, 5, seed});
        CHECK(pruned.size() <= full.size());
        CHECK(pruned.leaves() <= full.leaves());
        const auto seq = cost_complexity_sequence(full);
        for (std::size_t i = 1; i < seq.size(); ++i) {
            CHECK(seq[i].alpha >= seq[i - 1].alpha);
            CHECK(seq[i].tree.size() < seq[i - 1].tree.size());
        }
        CHECK(seq.back().tree.size() == 1);
    }
}

TEST_CASE("cart JSON round trip keeps predictions", "[classify][cart]") {
    const auto ds = blobs(30, 3, 2.0, 9);
    const auto t = cart_train(ds);
    const auto back = tree_from_json(to_json(t));
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.predict(ds.x.row(i)) == t.predict(ds.x.row(i)));
}

TEST_CASE("smo on two points gives the textbook margin", "[classify][svm]") {
    Matrix x(0, 1);
    x.append_row(std::vector<double>{1});
    x.append_row(std::vector<double>{-1});
    const std::vector<int> y{1, -1};
    const auto m = smo_train(x, y, 100.0);
    CHECK(m.converged);
    CHECK_THAT(m.weights[0], WithinAbs(1.0, 1e-6));
    CHECK_THAT(m.bias, WithinAbs(0.0, 1e-6));
    CHECK_THAT(m.alphas[0], WithinAbs(0.5, 1e-6));
}

TEST_CASE("smo solution satisfies KKT and beats feasible points", "[classify][svm][oracle]") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n(0, 1);
    for (double c : {0.1, 1.0, 10.0}) {
        Matrix x(0, 3);
        std::vector<int> y;
        for (int i = 0; i < 80; ++i) {
            const int label = i % 2 ? 1 : -1;
            x.append_row(std::vector<double>{n(rng) + label * 1.2, n(rng), n(rng) - label * 0.4});
            y.push_back(label);
        }
        const auto m = smo_train(x, y, c);
        REQUIRE(m.converged);

        double eq = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(m.alphas[i] >= 0);
            CHECK(m.alphas[i] <= c + 1e-12);
            eq += m.alphas[i] * y[i];
        }
        CHECK_THAT(eq, WithinAbs(0.0, 1e-9));

        const double tol = 1e-3;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double margin = y[i] * m.decision(x.row(i));
            if (m.alphas[i] <= 1e-9) CHECK(margin >= 1 - tol);
            else if (m.alphas[i] >= c - 1e-9) CHECK(margin <= 1 + tol);
            else CHECK_THAT(margin, WithinAbs(1.0, tol));
        }

        const double best = dual_oracle(x, y, m.alphas);
        CHECK_THAT(svm_dual_objective(x, y, m.alphas), WithinAbs(best, 1e-9));
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> a(y.size());
            double sp = 0, sn = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                a[i] = std::uniform_real_distribution<double>(0, c)(rng);
                (y[i] > 0 ? sp : sn) += a[i];
            }
            // Scale the heavier side down so that sum a_i y_i = 0.
            const double fp = sp > sn ? sn / sp : 1.0, fn = sn > sp ? sp / sn : 1.0;
            for (std::size_t i = 0; i < y.size(); ++i) a[i] *= y[i] > 0 ? fp : fn;
            CHECK(dual_oracle(x, y, a) <= best + 1e-6 * std::max(1.0, std::abs(best)));
        }
    }
}

TEST_CASE("smo rejects bad input", "[classify][svm]") {
    Matrix x(2, 1, 1.0);
    CHECK_THROWS_AS(smo_train(x, std::vector<int>{1, 1}, 1.0), SingleClass);
    CHECK_THROWS_AS(smo_train(x, std::vector<int>{1}, 1.0), LengthMismatch);
    CHECK_THROWS_AS(smo_train(x, std::vector<int>{1, -1}, 0.0), ConfigError);
}

TEST_CASE("one-vs-one svm separates blobs", "[classify][svm]") {
    const auto ds = blobs(30, 4, 8.0, 4);
    const auto m = svm_multiclass(ds, 1.0);
    CHECK(m.pairs.size() == 6);
    CHECK(train_accuracy(m, ds) == 1.0);
    const auto back = svm_from_json(to_json(m));
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.predict(ds.x.row(i)) == m.predict(ds.x.row(i)));
}

TEST_CASE("one-vs-one vote ties go to the larger summed margin", "[classify][svm]") {
    SvmMulticlass m;
    m.n_classes = 3;
    m.scaler.mean = {0};
    m.scaler.scale = {1};
    auto pair = [](int p, int n, double bias) {
        SvmPair s;
        s.positive = p;
        s.negative = n;
        s.model.weights = {0};
        s.model.bias = bias;
        return s;
    };
    // Votes: 0, 2, 1 (one each). Margins: 0 -> -1.5, 1 -> 0.5, 2 -> 1.0.
    m.pairs = {pair(0, 1, 0.5), pair(0, 2, -2.0), pair(1, 2, 1.0)};
    CHECK(m.predict(std::vector<double>{0}) == 2);
    m.pairs = {pair(0, 1, 0.5), pair(0, 2, -0.2), pair(1, 2, 1.0)};
    // Margins: 0 -> 0.3, 1 -> 0.5, 2 -> -0.8.
    CHECK(m.predict(std::vector<double>{0}) == 1);
}

TEST_CASE("encode_oui one-hot columns", "[classify]") {
    const auto ds = make({{1}, {2}, {3}, {4}, {5}, {6}}, {0, 0, 0, 1, 1, 1}, 2);
    const std::vector<Oui> ouis{parse_oui("bb:00:00"), parse_oui("aa:00:00"), parse_oui("cc:00:00"),
                                parse_oui("bb:00:00"), parse_oui("aa:00:00"), parse_oui("dd:00:00")};
    const auto e = encode_oui(ds, ouis, 2);
    CHECK(e.feature_names == std::vector<std::string>{"f0", "oui_aa:00:00", "oui_bb:00:00", "oui_other"});
    for (std::size_t r = 0; r < e.size(); ++r) {
        CHECK(e.x(r, 0) == ds.x(r, 0));
        CHECK(e.x(r, 1) + e.x(r, 2) + e.x(r, 3) == 1.0);
    }
    CHECK(e.x(0, 2) == 1.0);
    CHECK(e.x(2, 3) == 1.0);
    CHECK(e.x(5, 3) == 1.0);
    CHECK_THROWS_AS(encode_oui(ds, std::span(ouis).first(3), 2), LengthMismatch);
}

TEST_CASE("cross_validate invariants", "[classify][eval]") {
    const auto ds = blobs(25, 3, 2.0, 6);
    for (auto kind : {ModelKind::ZeroR, ModelKind::Cart, ModelKind::Svm}) {
        const auto r = cross_validate(ds, default_spec(kind), 5, 11, 1);
        CHECK(r.total() == ds.size());
        CHECK(r.fold_accuracy.size() == 5);
        CHECK(r.accuracy >= 0);
        CHECK(r.accuracy <= 1);
        double mean = 0;
        for (double a : r.fold_accuracy) mean += a;
        CHECK_THAT(r.accuracy, WithinAbs(mean / 5, 1e-12));
        CHECK_THAT(r.improvement, WithinAbs(r.accuracy - r.baseline_accuracy, 1e-12));
        for (std::size_t c = 0; c < 3; ++c) {
            std::size_t row = 0;
            for (auto v : r.confusion[c]) row += v;
            CHECK(row == 25);
        }
        const auto again = cross_validate(ds, default_spec(kind), 5, 11, 2);
        CHECK(again.confusion == r.confusion);
        CHECK(again.accuracy == r.accuracy);
    }
    const auto zr = cross_validate(ds, default_spec(ModelKind::ZeroR), 5, 11, 1);
    CHECK(zr.accuracy == zr.baseline_accuracy);
    CHECK(cross_validate(ds, default_spec(ModelKind::Svm), 5, 11).accuracy > 0.8);
}

TEST_CASE("cross_validate refuses classes smaller than k", "[classify][eval]") {
    auto ds = blobs(12, 2, 3.0, 2);
    ds.y[0] = 1;
    ds.class_names.push_back("tiny");
    ds.y[1] = 2;
    CHECK_THROWS_AS(cross_validate(ds, default_spec(ModelKind::Cart), 10), TooFewPerClass);
}

TEST_CASE("grid search with one point equals plain cross validation", "[classify][eval]") {
    const auto ds = blobs(20, 3, 1.5, 8);
    for (auto kind : {ModelKind::Cart, ModelKind::Svm}) {
        const auto spec = default_spec(kind);
        const auto g = grid_search(ds, {spec}, 5, 3, 13, 1);
        const auto cv = cross_validate(ds, spec, 5, 13, 1);
        CHECK(g.best == spec);
        CHECK(g.report.confusion == cv.confusion);
        CHECK(g.report.accuracy == cv.accuracy);
    }
    CHECK_THROWS_AS(grid_search(ds, {}, 5), ConfigError);
}

TEST_CASE("grid search picks from the grid", "[classify][eval]") {
    const auto ds = blobs(20, 2, 2.0, 15);
    const auto grid = default_grid(ModelKind::Svm);
    const auto g = grid_search(ds, grid, 4, 3, 2, 1);
    CHECK(std::find(grid.begin(), grid.end(), g.best) != grid.end());
    CHECK(g.chosen.size() == 4);
    CHECK(g.inner_accuracy.size() == 4);
}

TEST_CASE("model JSON round trip", "[classify]") {
    const auto ds = blobs(20, 3, 3.0, 1);
    for (auto kind : {ModelKind::ZeroR, ModelKind::Cart, ModelKind::Svm}) {
        const auto spec = default_spec(kind);
        const auto m = train_model(ds, spec);
        const auto back = model_from_json(model_to_json(m, spec, ds));
        for (std::size_t i = 0; i < ds.size(); ++i) CHECK(predict(back, ds.x.row(i)) == predict(m, ds.x.row(i)));
    }
}

TEST_CASE("sufficiency sweep filters per threshold", "[classify][eval]") {
    const auto ds = blobs(30, 2, 3.0, 10);
    std::vector<int> days;
    for (std::size_t i = 0; i < ds.size(); ++i) days.push_back(1 + static_cast<int>(i % 10));
    const std::vector<int> thresholds{1, 5, 10, 11};
    const auto pts = data_sufficiency_sweep(ds, days, thresholds, default_spec(ModelKind::Cart), 3, 1, 1);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].kept == 60);
    CHECK(pts[1].kept == 36);
    CHECK(pts[2].kept == 6);
    CHECK(pts[3].kept == 0);
    for (int i = 0; i < 3; ++i) {
        REQUIRE(pts[i].report);
        CHECK(pts[i].report->total() == pts[i].evaluated);
    }
    CHECK_FALSE(pts[3].report);
    CHECK_FALSE(pts[3].error.empty());
    CHECK_THROWS_AS(data_sufficiency_sweep(ds, days, std::vector<int>{0}, default_spec(ModelKind::Cart), 3),
                    ConfigError);
}
