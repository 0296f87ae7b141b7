#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "gwprof/features.hpp"

using namespace gwprof;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Oracles written independently of the library code.

long double ad_oracle(const std::vector<double>& x) {
    // Mean of squared first differences over two, by Kahan summation in long double.
    long double sum = 0, comp = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const long double d = static_cast<long double>(x[i + 1]) - x[i];
        const long double y = d * d - comp;
        const long double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return std::sqrt(sum / (2.0L * static_cast<long double>(x.size() - 1)));
}

// Type-7 sample quantile computed from the order-statistic definition.
double quantile_oracle(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double pos = 1 + (static_cast<double>(x.size()) - 1) * p;  // 1-based
    const auto j = static_cast<std::size_t>(pos);
    const double g = pos - static_cast<double>(j);
    if (j >= x.size()) return x.back();
    return (1 - g) * x[j - 1] + g * x[j];
}

TrafficDelta active_at(Timestamp end_minute, std::uint64_t tx = 1, std::uint64_t rx = 0) {
    return TrafficDelta{end_minute * 60 - 60, end_minute * 60, tx, rx};
}

DeviceTimeline stationary_device(int days) {
    DeviceTimeline tl;
    tl.descriptor.mac = parse_mac("02:00:00:00:00:01");
    std::uint64_t c = 0;
    for (int d = 0; d < days; ++d) {
        for (int m = 0; m < 30; ++m) {
            const Timestamp t = d * kSecondsPerDay + 36000 + m * 60;
            c += 5000;
            tl.counters.push_back({t, c, 2 * c, CounterWidth::W32});
            tl.rates.push_back({t, 40, 80});
            tl.rssi.push_back({t, -55});
        }
    }
    return tl;
}

}  // namespace

TEST_CASE("allan deviation identities", "[features][oracle]") {
    CHECK(allan_deviation(std::vector<double>{5, 5, 5, 5}) == 0.0);
    CHECK_THAT(allan_deviation(std::vector<double>{0, 1, 0, 1}), WithinAbs(std::sqrt(0.5), 1e-12));
    CHECK_THAT(allan_deviation(std::vector<double>{1, 4}), WithinAbs(std::sqrt(4.5), 1e-12));
    CHECK_THROWS_AS(allan_deviation(std::vector<double>{1}), InsufficientSamples);
}

TEST_CASE("allan deviation agrees with the summation oracle", "[features][oracle]") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(-60, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(2 + rng() % 500);
        for (auto& v : x) v = std::round(n(rng));
        CHECK_THAT(allan_deviation(x), WithinAbs(static_cast<double>(ad_oracle(x)), 1e-12));
    }
}

TEST_CASE("point summaries of 1..10", "[features][oracle]") {
    std::vector<double> x{10, 3, 1, 7, 2, 9, 4, 8, 6, 5};
    const auto s = point_summaries(x);
    CHECK(s.min == 1);
    CHECK(s.max == 10);
    CHECK_THAT(s.p50, WithinAbs(5.5, 1e-9));
    CHECK_THAT(s.iqr, WithinAbs(4.5, 1e-9));
    CHECK_THAT(s.p10, WithinAbs(quantile_oracle(x, 0.10), 1e-9));
    CHECK_THAT(s.p90, WithinAbs(quantile_oracle(x, 0.90), 1e-9));
    CHECK_THAT(s.range80, WithinAbs(quantile_oracle(x, 0.9) - quantile_oracle(x, 0.1), 1e-9));
    CHECK(s.diameter == 9);
    CHECK(s.count == 10);
}

TEST_CASE("point summaries agree with the quantile oracle", "[features][oracle]") {
    std::mt19937_64 rng(21);
    std::lognormal_distribution<double> d(8, 2);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> x(1 + rng() % 200);
        for (auto& v : x) v = d(rng);
        const auto s = point_summaries(x);
        const double scale = std::max(1.0, *std::max_element(x.begin(), x.end()));
        CHECK_THAT(s.p10, WithinAbs(quantile_oracle(x, 0.10), 1e-9 * scale));
        CHECK_THAT(s.p25, WithinAbs(quantile_oracle(x, 0.25), 1e-9 * scale));
        CHECK_THAT(s.p50, WithinAbs(quantile_oracle(x, 0.50), 1e-9 * scale));
        CHECK_THAT(s.p75, WithinAbs(quantile_oracle(x, 0.75), 1e-9 * scale));
        CHECK_THAT(s.p90, WithinAbs(quantile_oracle(x, 0.90), 1e-9 * scale));
        CHECK(s.p10 <= s.p25);
        CHECK(s.p75 <= s.p90);
    }
}

TEST_CASE("point summaries of degenerate series", "[features]") {
    const auto one = point_summaries(std::vector<double>{7});
    for (std::size_t i = 0; i < 7; ++i) CHECK(one.values()[i] == 7);
    CHECK(one.iqr == 0);
    CHECK(one.range80 == 0);
    CHECK(one.diameter == 0);
    CHECK(one.count == 1);

    const auto flat = point_summaries(std::vector<double>{3, 3, 3, 3});
    for (std::size_t i = 0; i < 7; ++i) CHECK(flat.values()[i] == 3);
    CHECK(flat.iqr == 0);
    CHECK(flat.count == 4);

    CHECK_THROWS_AS(point_summaries(std::vector<double>{}), EmptySeries);
}

TEST_CASE("sessionize splits on 15 minutes of silence", "[features]") {
    std::vector<TrafficDelta> d{active_at(0), active_at(5), active_at(10), active_at(40)};
    const auto s = sessionize(d);
    REQUIRE(s.size() == 2);
    CHECK(s[0].start == 0);
    CHECK(s[0].end == 600);
    CHECK(s[1].start == 2400);
    CHECK(s[1].end == 2400);

    CHECK(sessionize(std::vector<TrafficDelta>{active_at(0), active_at(14)}).size() == 1);
    CHECK(sessionize(std::vector<TrafficDelta>{active_at(0), active_at(15)}).size() == 2);
    CHECK(sessionize(std::vector<TrafficDelta>{active_at(0, 0), active_at(5, 0)}).empty());
    CHECK(sessionize(std::vector<TrafficDelta>{active_at(0), active_at(15)}, 16 * 60).size() == 1);
}

TEST_CASE("daily volumes skip idle days", "[features]") {
    const Timestamp day = kSecondsPerDay;
    std::vector<TrafficDelta> d{{0, 60, 100, 1}, {60, 120, 200, 1}, {day, day + 60, 0, 0}, {2 * day, 2 * day + 60, 50, 0}};
    const auto v = daily_volumes(d);
    CHECK(v.tx == std::vector<double>{300, 50});
    CHECK(v.rx == std::vector<double>{2, 0});
    CHECK(daily_volumes(std::vector<TrafficDelta>{{0, 60, 9, 9}}).tx.size() == 1);
    CHECK(daily_volumes(std::vector<TrafficDelta>{}).tx.empty());
}

TEST_CASE("per-session traffic normalisation", "[features]") {
    std::vector<Session> s{{0, 600, 6000, 1200}, {1000, 1600, 6000, 1200}, {5000, 5000, 500, 0}};
    const auto n = normalized_session_traffic(s);
    CHECK(n.tx[0] == 10);
    CHECK(n.rx[0] == 2);
    CHECK(n.tx[1] == n.tx[0]);
    CHECK_THAT(n.tx[2], WithinAbs(500.0 / 60.0, 1e-12));
}

TEST_CASE("M*D product keeps the median's sign", "[features]") {
    PointSummaries s;
    s.diameter = 20;
    s.p50 = 40;
    CHECK(rssi_md_product(s) == 800);
    s.diameter = 0;
    CHECK(rssi_md_product(s) == 0);
    s.diameter = 15;
    s.p50 = -60;
    CHECK(rssi_md_product(s) == -900);
}

TEST_CASE("rssi auc of simple histograms", "[features][oracle]") {
    CHECK(rssi_auc(std::vector<std::int32_t>(50, -50)) == 1.0);
    std::vector<std::int32_t> two(8, -50);
    two.insert(two.end(), 2, -49);
    CHECK_THAT(rssi_auc(two), WithinAbs(1.25, 1e-12));
    std::vector<std::int32_t> ten;
    for (int b = 0; b < 10; ++b) ten.insert(ten.end(), 7, -60 + b);
    CHECK_THAT(rssi_auc(ten), WithinAbs(10.0, 1e-12));
    CHECK_THROWS_AS(rssi_auc(std::vector<std::int32_t>{}), EmptySeries);
}

TEST_CASE("location modes", "[features][oracle]") {
    CHECK(count_location_modes(std::vector<std::int32_t>(100, -50)) == 1);

    // Oracle: a two-component mixture 30 dB apart with sd 2 has exactly two peaks.
    std::mt19937_64 rng(4);
    std::normal_distribution<double> a(-40, 2), b(-70, 2);
    std::vector<std::int32_t> x;
    for (int i = 0; i < 500; ++i) x.push_back(static_cast<std::int32_t>(std::lround(a(rng))));
    for (int i = 0; i < 500; ++i) x.push_back(static_cast<std::int32_t>(std::lround(b(rng))));
    CHECK(count_location_modes(x) == 2);

    std::vector<std::int32_t> three = x;
    std::normal_distribution<double> c(-55, 2);
    for (int i = 0; i < 500; ++i) three.push_back(static_cast<std::int32_t>(std::lround(c(rng))));
    CHECK(count_location_modes(three) == 3);

    // A wide unimodal spread is still one location.
    std::normal_distribution<double> wide(-60, 6);
    std::vector<std::int32_t> u;
    for (int i = 0; i < 5000; ++i) u.push_back(static_cast<std::int32_t>(std::lround(wide(rng))));
    CHECK(count_location_modes(u) == 1);
}

TEST_CASE("feature schema is fixed", "[features][schema]") {
    CHECK(kFeatureNames.size() == 92);
    std::set<std::string_view> unique(kFeatureNames.begin(), kFeatureNames.end());
    CHECK(unique.size() == 92);
    CHECK(feature_index("rssi_ad") == 88);
    CHECK(feature_index("rssi_md") == 89);
    CHECK(feature_index("rssi_num_locations") == 90);
    CHECK(feature_index("rssi_auc") == 91);
    CHECK(feature_index("nope") == -1);
}

TEST_CASE("golden header pins the feature names", "[features][schema]") {
    std::ifstream is(std::string(GWPROF_SOURCE_DIR) + "/tests/golden_feature_header.csv");
    REQUIRE(is);
    std::string line;
    std::getline(is, line);
    std::string expected = "mac";
    for (auto n : kFeatureNames) expected += "," + std::string(n);
    CHECK(line == expected);
}

TEST_CASE("extract_features shape and stationary device", "[features]") {
    const auto fv = extract_features(stationary_device(4));
    CHECK(fv.values.size() == 92);
    for (double v : fv.values) CHECK(std::isfinite(v));
    CHECK(fv["rssi_ad"] == 0);
    CHECK(fv["rssi_auc"] == 1);
    CHECK(fv["rssi_num_locations"] == 1);
    CHECK(fv["rssi_diameter"] == 0);
    CHECK(fv["tx_count"] == 4);
    CHECK(fv["session_l_count"] == 4);
    CHECK(fv["session_l_p50"] == 29 * 60);
    CHECK(fv["tx_rate_p50"] == 40);
    // 29 intervals of 5000 bytes per day plus the first delta of the next day.
    CHECK(fv["tx_p50"] == 150000);
}

TEST_CASE("extract_features reports missing series", "[features]") {
    auto tl = stationary_device(2);
    tl.rssi.resize(1);
    CHECK_THROWS_AS(extract_features(tl), InsufficientData);
    tl = stationary_device(2);
    tl.rates.clear();
    CHECK_THROWS_AS(extract_features(tl), InsufficientData);
    DeviceTimeline idle;
    CHECK_THROWS_AS(extract_features(idle), InsufficientData);
}
