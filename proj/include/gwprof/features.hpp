#pragma once

// Behavioral fingerprint of one device: eight time series, each reduced to
// eleven point summaries, plus four single-point RSSI features (92 values).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gwprof/error.hpp"
#include "gwprof/ingest.hpp"
#include "gwprof/telemetry.hpp"

namespace gwprof {

inline constexpr Timestamp kSessionGap = 15 * 60;       // ARP timeout
inline constexpr Timestamp kReportingInterval = 60;     // nominal sample spacing

struct Session {
    Timestamp start = 0;
    Timestamp end = 0;
    std::uint64_t tx_bytes = 0;
    std::uint64_t rx_bytes = 0;

    Timestamp duration() const noexcept { return end - start; }
};

/// Groups active intervals (tx+rx > 0) into sessions. Activity is placed at each
/// interval's end; a silence of at least `gap` between consecutive active points
/// starts a new session.
inline std::vector<Session> sessionize(std::span<const TrafficDelta> deltas, Timestamp gap = kSessionGap) {
    std::vector<Session> out;
    for (const auto& d : deltas) {
        if (d.total() == 0) continue;
        if (out.empty() || d.interval_end - out.back().end >= gap) {
            out.push_back(Session{d.interval_end, d.interval_end, 0, 0});
        }
        auto& s = out.back();
        s.end = d.interval_end;
        s.tx_bytes += d.tx_bytes;
        s.rx_bytes += d.rx_bytes;
    }
    return out;
}

struct DailyVolumes {
    std::vector<double> tx;
    std::vector<double> rx;
};

/// Per-day byte totals for days with any traffic, in day order.
inline DailyVolumes daily_volumes(std::span<const TrafficDelta> deltas) {
    std::map<std::int64_t, std::pair<std::uint64_t, std::uint64_t>> days;
    for (const auto& d : deltas) {
        if (d.total() == 0) continue;
        auto& v = days[utc_day(d.interval_end)];
        v.first += d.tx_bytes;
        v.second += d.rx_bytes;
    }
    DailyVolumes out;
    out.tx.reserve(days.size());
    out.rx.reserve(days.size());
    for (const auto& [day, v] : days) {
        out.tx.push_back(static_cast<double>(v.first));
        out.rx.push_back(static_cast<double>(v.second));
    }
    return out;
}

/// Percentile of an ascending series: linear interpolation at index (n-1)*p.
inline double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw EmptySeries("percentile of an empty series");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted[lo];
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct PointSummaries {
    double min = 0, p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0, max = 0;
    double iqr = 0;       // p75 - p25
    double range80 = 0;   // p90 - p10
    double diameter = 0;  // max - min
    double count = 0;

    std::array<double, 11> values() const noexcept {
        return {min, p10, p25, p50, p75, p90, max, iqr, range80, diameter, count};
    }
};

inline PointSummaries point_summaries(std::span<const double> series) {
    if (series.empty()) throw EmptySeries("point_summaries of an empty series");
    std::vector<double> s(series.begin(), series.end());
    std::sort(s.begin(), s.end());
    PointSummaries p;
    p.min = s.front();
    p.max = s.back();
    p.p10 = percentile_sorted(s, 0.10);
    p.p25 = percentile_sorted(s, 0.25);
    p.p50 = percentile_sorted(s, 0.50);
    p.p75 = percentile_sorted(s, 0.75);
    p.p90 = percentile_sorted(s, 0.90);
    p.iqr = p.p75 - p.p25;
    p.range80 = p.p90 - p.p10;
    p.diameter = p.max - p.min;
    p.count = static_cast<double>(s.size());
    return p;
}

struct SessionTraffic {
    std::vector<double> tx;
    std::vector<double> rx;
};

/// Per-session bytes per second; zero-length sessions count as `floor` seconds.
inline SessionTraffic normalized_session_traffic(std::span<const Session> sessions,
                                                 Timestamp floor = kReportingInterval) {
    SessionTraffic out;
    for (const auto& s : sessions) {
        const double len = static_cast<double>(s.duration() > 0 ? s.duration() : floor);
        out.tx.push_back(static_cast<double>(s.tx_bytes) / len);
        out.rx.push_back(static_cast<double>(s.rx_bytes) / len);
    }
    return out;
}

inline double allan_deviation(std::span<const double> series) {
    const auto n = series.size();
    if (n < 2) throw InsufficientSamples("allan_deviation needs at least 2 samples");
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = series[i] - series[i - 1];
        acc += d * d;
    }
    return std::sqrt(acc / (2.0 * static_cast<double>(n - 1)));
}

inline double rssi_md_product(const PointSummaries& s) noexcept { return s.diameter * s.p50; }

namespace detail {

// Unit-bin histogram over [min, max].
inline std::vector<double> rssi_histogram(std::span<const std::int32_t> values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    std::vector<double> h(static_cast<std::size_t>(*hi - *lo) + 1, 0.0);
    for (auto v : values) h[static_cast<std::size_t>(v - *lo)] += 1.0;
    return h;
}

// Windows shrink at the borders rather than padding with zeros.
inline std::vector<double> moving_median(const std::vector<double>& x, std::size_t window) {
    const std::size_t half = window / 2;
    std::vector<double> out(x.size());
    std::vector<double> buf;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t a = i >= half ? i - half : 0;
        const std::size_t b = std::min(x.size(), i + half + 1);
        buf.assign(x.begin() + static_cast<std::ptrdiff_t>(a), x.begin() + static_cast<std::ptrdiff_t>(b));
        std::sort(buf.begin(), buf.end());
        const auto m = buf.size();
        out[i] = m % 2 ? buf[m / 2] : 0.5 * (buf[m / 2 - 1] + buf[m / 2]);
    }
    return out;
}

inline std::vector<double> moving_mean(const std::vector<double>& x, std::size_t window) {
    const std::size_t half = window / 2;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t a = i >= half ? i - half : 0;
        const std::size_t b = std::min(x.size(), i + half + 1);
        double s = 0.0;
        for (std::size_t j = a; j < b; ++j) s += x[j];
        out[i] = s / static_cast<double>(b - a);
    }
    return out;
}

// Peaks of a zero-padded profile. A flat run higher than both neighbours is one
// peak. Prominence is the height above the higher of the two lowest points
// separating the peak from taller terrain (or the border) on each side.
inline int count_prominent_peaks(const std::vector<double>& profile, double min_prominence) {
    std::vector<double> y;
    y.reserve(profile.size() + 2);
    y.push_back(0.0);
    y.insert(y.end(), profile.begin(), profile.end());
    y.push_back(0.0);
    const std::size_t n = y.size();
    int peaks = 0;
    std::size_t i = 1;
    while (i + 1 < n) {
        if (y[i] > y[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && y[j + 1] == y[i]) ++j;
            if (j + 1 < n && y[j + 1] < y[i]) {
                const double h = y[i];
                double left_min = h;
                for (std::size_t k = i; k-- > 0;) {
                    if (y[k] > h) break;
                    left_min = std::min(left_min, y[k]);
                }
                double right_min = h;
                for (std::size_t k = j + 1; k < n; ++k) {
                    if (y[k] > h) break;
                    right_min = std::min(right_min, y[k]);
                }
                if (h - std::max(left_min, right_min) >= min_prominence) ++peaks;
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return peaks;
}

}  // namespace detail

/// Number of location modes in the RSSI distribution: peaks of the unit-bin
/// histogram after a width-5 moving median and a width-3 moving mean, keeping
/// peaks whose prominence is at least 5% of the tallest smoothed bin. Never below 1.
inline int count_location_modes(std::span<const std::int32_t> rssi_values) {
    if (rssi_values.empty()) throw EmptySeries("count_location_modes of an empty series");
    const auto smooth = detail::moving_mean(detail::moving_median(detail::rssi_histogram(rssi_values), 5), 3);
    const double tallest = *std::max_element(smooth.begin(), smooth.end());
    return std::max(1, detail::count_prominent_peaks(smooth, 0.05 * tallest));
}

/// Histogram mass over the tallest bin; 1 when every sample shares one value.
inline double rssi_auc(std::span<const std::int32_t> rssi_values) {
    if (rssi_values.empty()) throw EmptySeries("rssi_auc of an empty series");
    const auto hist = detail::rssi_histogram(rssi_values);
    const double tallest = *std::max_element(hist.begin(), hist.end());
    return static_cast<double>(rssi_values.size()) / tallest;
}

inline constexpr std::size_t kFeatureCount = 92;

inline constexpr std::array<std::string_view, 8> kSeriesSubclasses{
    "tx", "rx", "session_l", "session_tx", "session_rx", "tx_rate", "rx_rate", "rssi"};

inline constexpr std::array<std::string_view, 11> kSummaryNames{
    "min", "p10", "p25", "p50", "p75", "p90", "max", "iqr", "range80", "diameter", "count"};

// clang-format off
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "tx_min", "tx_p10", "tx_p25", "tx_p50", "tx_p75", "tx_p90", "tx_max", "tx_iqr", "tx_range80", "tx_diameter", "tx_count",
    "rx_min", "rx_p10", "rx_p25", "rx_p50", "rx_p75", "rx_p90", "rx_max", "rx_iqr", "rx_range80", "rx_diameter", "rx_count",
    "session_l_min", "session_l_p10", "session_l_p25", "session_l_p50", "session_l_p75", "session_l_p90", "session_l_max", "session_l_iqr", "session_l_range80", "session_l_diameter", "session_l_count",
    "session_tx_min", "session_tx_p10", "session_tx_p25", "session_tx_p50", "session_tx_p75", "session_tx_p90", "session_tx_max", "session_tx_iqr", "session_tx_range80", "session_tx_diameter", "session_tx_count",
    "session_rx_min", "session_rx_p10", "session_rx_p25", "session_rx_p50", "session_rx_p75", "session_rx_p90", "session_rx_max", "session_rx_iqr", "session_rx_range80", "session_rx_diameter", "session_rx_count",
    "tx_rate_min", "tx_rate_p10", "tx_rate_p25", "tx_rate_p50", "tx_rate_p75", "tx_rate_p90", "tx_rate_max", "tx_rate_iqr", "tx_rate_range80", "tx_rate_diameter", "tx_rate_count",
    "rx_rate_min", "rx_rate_p10", "rx_rate_p25", "rx_rate_p50", "rx_rate_p75", "rx_rate_p90", "rx_rate_max", "rx_rate_iqr", "rx_rate_range80", "rx_rate_diameter", "rx_rate_count",
    "rssi_min", "rssi_p10", "rssi_p25", "rssi_p50", "rssi_p75", "rssi_p90", "rssi_max", "rssi_iqr", "rssi_range80", "rssi_diameter", "rssi_count",
    "rssi_ad", "rssi_md", "rssi_num_locations", "rssi_auc",
};
// clang-format on

consteval bool feature_names_match_subclasses() {
    std::size_t k = 0;
    for (auto sub : kSeriesSubclasses) {
        for (auto sum : kSummaryNames) {
            const auto name = kFeatureNames[k++];
            if (name.size() != sub.size() + 1 + sum.size()) return false;
            if (name.substr(0, sub.size()) != sub || name[sub.size()] != '_' ||
                name.substr(sub.size() + 1) != sum) {
                return false;
            }
        }
    }
    return k == 88;
}
static_assert(feature_names_match_subclasses());

/// Index of a schema feature name, or -1.
constexpr int feature_index(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
        if (kFeatureNames[i] == name) return static_cast<int>(i);
    }
    return -1;
}

/// True for RSSI-derived features (Gaussian-shaped; exempt from log rescaling).
constexpr bool is_rssi_feature(std::string_view name) noexcept { return name.starts_with("rssi"); }

struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    double operator[](std::string_view name) const {
        const int i = feature_index(name);
        if (i < 0) throw InsufficientData("unknown feature '" + std::string(name) + "'");
        return values[static_cast<std::size_t>(i)];
    }
};

/// Builds the 92-value fingerprint. Requires at least one active day, one rate
/// sample and two RSSI samples; otherwise throws InsufficientData naming the series.
inline FeatureVector extract_features(const DeviceTimeline& tl, Timestamp session_gap = kSessionGap) {
    const auto mac = tl.descriptor.mac.to_string();
    const auto deltas = timeline_deltas(tl);
    const auto daily = daily_volumes(deltas);
    if (daily.tx.empty()) throw InsufficientData(mac + ": no traffic volume");
    if (session_gap <= 0) throw InsufficientData("session gap must be positive");
    const auto sessions = sessionize(deltas, session_gap);
    if (tl.rates.empty()) throw InsufficientData(mac + ": no rate samples");
    if (tl.rssi.size() < 2) throw InsufficientData(mac + ": fewer than 2 rssi samples");

    std::vector<double> lengths;
    lengths.reserve(sessions.size());
    for (const auto& s : sessions) lengths.push_back(static_cast<double>(s.duration()));
    const auto per_session = normalized_session_traffic(sessions);

    std::vector<double> tx_rate, rx_rate;
    tx_rate.reserve(tl.rates.size());
    rx_rate.reserve(tl.rates.size());
    for (const auto& r : tl.rates) {
        tx_rate.push_back(r.tx_kbps);
        rx_rate.push_back(r.rx_kbps);
    }

    std::vector<std::int32_t> rssi_int;
    std::vector<double> rssi;
    rssi_int.reserve(tl.rssi.size());
    rssi.reserve(tl.rssi.size());
    for (const auto& r : tl.rssi) {
        rssi_int.push_back(r.rssi);
        rssi.push_back(r.rssi);
    }

    FeatureVector fv;
    std::size_t k = 0;
    auto put = [&](std::span<const double> series) {
        for (double v : point_summaries(series).values()) fv.values[k++] = v;
    };
    put(daily.tx);
    put(daily.rx);
    put(lengths);
    put(per_session.tx);
    put(per_session.rx);
    put(tx_rate);
    put(rx_rate);
    const auto rssi_summary = point_summaries(rssi);
    for (double v : rssi_summary.values()) fv.values[k++] = v;
    fv.values[k++] = allan_deviation(rssi);
    fv.values[k++] = rssi_md_product(rssi_summary);
    fv.values[k++] = count_location_modes(rssi_int);
    fv.values[k++] = rssi_auc(rssi_int);
    return fv;
}

/// Hostnames seen inside each session: a sighting belongs to the session whose
/// [start, end] contains it.
inline std::map<std::string, std::vector<Session>> sessions_by_hostname(const DeviceTimeline& tl) {
    std::map<std::string, std::vector<Session>> out;
    const auto sessions = sessionize(timeline_deltas(tl));
    for (const auto& s : sessions) {
        auto lo = std::lower_bound(tl.sightings.begin(), tl.sightings.end(), s.start,
                                   [](const HostnameSighting& h, Timestamp t) { return h.timestamp < t; });
        std::set<std::string> names;
        for (auto it = lo; it != tl.sightings.end() && it->timestamp <= s.end; ++it) names.insert(it->hostname);
        for (const auto& n : names) out[n].push_back(s);
    }
    return out;
}

}  // namespace gwprof
