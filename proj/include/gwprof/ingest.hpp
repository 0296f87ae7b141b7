#pragma once

// Trace ingestion: JSONL records -> per-device timelines, cumulative counters ->
// per-interval deltas, and the population funnel (wired / transient filtering).
//
// Trace records, one JSON object per line:
//   {"ts":<int>,"mac":"<mac>","kind":"counter","tx_cum":<int>,"rx_cum":<int>,"width":16|32}
//   {"ts":<int>,"mac":"<mac>","kind":"rate","tx_kbps":<int>,"rx_kbps":<int>}
//   {"ts":<int>,"mac":"<mac>","kind":"rssi","rssi":<int>}
//   {"ts":<int>,"mac":"<mac>","kind":"descriptor","hostname":"..","iface":"wired"|"wifi"[,"ssid":"..","bssid":".."]}

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/error.hpp"
#include "gwprof/telemetry.hpp"

namespace gwprof {

struct TrafficDelta {
    Timestamp interval_start = 0;
    Timestamp interval_end = 0;
    std::uint64_t tx_bytes = 0;
    std::uint64_t rx_bytes = 0;

    std::uint64_t total() const noexcept { return tx_bytes + rx_bytes; }
};

struct PopulationReport {
    std::size_t total = 0;
    std::size_t wired = 0;  // includes wireless devices dropped for 16-bit counters
    std::size_t wireless = 0;
    std::size_t transient = 0;
    std::size_t nontransient = 0;
    std::size_t coarse_labeled = 0;
    std::size_t fine_labeled = 0;
    std::size_t unreliable_counters = 0;  // informational subset of `wired`

    bool consistent() const noexcept {
        return wired + wireless == total && transient + nontransient == wireless &&
               fine_labeled <= coarse_labeled && coarse_labeled <= nontransient;
    }
};

namespace detail {

inline std::int64_t require_int(const nlohmann::json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    if (!it->is_number_integer()) throw ParseError(line, std::string("field '") + key + "' is not an integer");
    return it->get<std::int64_t>();
}

inline std::uint64_t require_uint(const nlohmann::json& rec, const char* key, std::size_t line) {
    const auto v = require_int(rec, key, line);
    if (v < 0) throw ParseError(line, std::string("field '") + key + "' is negative");
    return static_cast<std::uint64_t>(v);
}

inline const std::string& require_string(const nlohmann::json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' is not a string");
    return it->get_ref<const std::string&>();
}

struct TimelineBuilder {
    DeviceTimeline timeline;
    std::optional<Interface> interface;
    std::optional<CounterWidth> width;
    std::set<std::tuple<Timestamp, std::string, std::string, std::string>> descriptor_keys;
};

template <typename Sample>
void sort_and_check(std::vector<Sample>& samples, const MacAddress& mac, const char* kind) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].timestamp == samples[i - 1].timestamp) {
            throw DuplicateSample(mac.to_string() + " has two '" + kind + "' samples at ts " +
                                  std::to_string(samples[i].timestamp));
        }
    }
}

}  // namespace detail

/// Parses a JSONL trace into one timeline per MAC, ordered by MAC. Per-series
/// samples are sorted by time. Devices with no descriptor are taken as WiFi when
/// they report RSSI or rates, wired otherwise.
inline std::vector<DeviceTimeline> parse_trace(std::istream& in) {
    std::map<MacAddress, detail::TimelineBuilder> devices;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        if (!rec.is_object()) throw ParseError(line_no, "record is not a JSON object");

        const Timestamp ts = detail::require_int(rec, "ts", line_no);
        MacAddress mac;
        try {
            mac = parse_mac(detail::require_string(rec, "mac", line_no));
        } catch (const MalformedMac& e) {
            throw ParseError(line_no, e.what());
        }
        const std::string& kind = detail::require_string(rec, "kind", line_no);

        auto& b = devices[mac];
        b.timeline.descriptor.mac = mac;
        auto& tl = b.timeline;

        if (kind == "counter") {
            CounterSample s;
            s.timestamp = ts;
            s.tx_cum = detail::require_uint(rec, "tx_cum", line_no);
            s.rx_cum = detail::require_uint(rec, "rx_cum", line_no);
            const auto w = detail::require_int(rec, "width", line_no);
            if (w != 16 && w != 32) throw ParseError(line_no, "counter width must be 16 or 32");
            s.width = w == 16 ? CounterWidth::W16 : CounterWidth::W32;
            const std::uint64_t limit = std::uint64_t{1} << w;
            if (s.tx_cum >= limit || s.rx_cum >= limit) {
                throw ParseError(line_no, "cumulative counter exceeds its declared width");
            }
            if (b.width && *b.width != s.width) throw ParseError(line_no, "mixed counter widths for one device");
            b.width = s.width;
            tl.counters.push_back(s);
        } else if (kind == "rate") {
            RateSample s;
            s.timestamp = ts;
            s.tx_kbps = static_cast<std::uint32_t>(detail::require_uint(rec, "tx_kbps", line_no));
            s.rx_kbps = static_cast<std::uint32_t>(detail::require_uint(rec, "rx_kbps", line_no));
            tl.rates.push_back(s);
        } else if (kind == "rssi") {
            tl.rssi.push_back(RssiSample{ts, static_cast<std::int32_t>(detail::require_int(rec, "rssi", line_no))});
        } else if (kind == "descriptor") {
            const std::string& hostname = detail::require_string(rec, "hostname", line_no);
            const std::string& iface = detail::require_string(rec, "iface", line_no);
            Interface parsed_iface;
            if (iface == "wired") {
                parsed_iface = Interface::Wired;
            } else if (iface == "wifi") {
                parsed_iface = Interface::WiFi;
            } else {
                throw ParseError(line_no, "iface must be 'wired' or 'wifi'");
            }
            std::string ssid, bssid_text;
            if (rec.contains("ssid") || rec.contains("bssid")) {
                ssid = detail::require_string(rec, "ssid", line_no);
                bssid_text = detail::require_string(rec, "bssid", line_no);
                try {
                    tl.descriptor.advertised_bssids.emplace(ssid, parse_mac(bssid_text));
                } catch (const MalformedMac& e) {
                    throw ParseError(line_no, e.what());
                }
            }
            if (!b.descriptor_keys.emplace(ts, hostname, ssid, bssid_text).second) {
                throw DuplicateSample(mac.to_string() + " has a repeated descriptor at ts " + std::to_string(ts));
            }
            // The first descriptor fixes the interface.
            if (!b.interface) b.interface = parsed_iface;
            tl.descriptor.hostnames.insert(hostname);
            tl.sightings.push_back(HostnameSighting{ts, hostname});
        } else {
            throw ParseError(line_no, "unknown record kind '" + kind + "'");
        }
    }

    std::vector<DeviceTimeline> out;
    out.reserve(devices.size());
    for (auto& [mac, b] : devices) {
        auto& tl = b.timeline;
        detail::sort_and_check(tl.counters, mac, "counter");
        detail::sort_and_check(tl.rates, mac, "rate");
        detail::sort_and_check(tl.rssi, mac, "rssi");
        std::stable_sort(tl.sightings.begin(), tl.sightings.end(),
                         [](const HostnameSighting& x, const HostnameSighting& y) {
                             return std::tie(x.timestamp, x.hostname) < std::tie(y.timestamp, y.hostname);
                         });
        if (b.interface) {
            tl.descriptor.interface = *b.interface;
        } else {
            tl.descriptor.interface = (!tl.rssi.empty() || !tl.rates.empty()) ? Interface::WiFi : Interface::Wired;
        }
        tl.unreliable_counters = b.width == CounterWidth::W16;
        out.push_back(std::move(tl));
    }
    return out;
}

/// Successive differences of cumulative counters. A decrease is read as exactly
/// one wrap of the declared counter width.
inline std::vector<TrafficDelta> diff_counters(std::span<const CounterSample> samples) {
    if (samples.size() < 2) {
        throw InsufficientSamples("diff_counters needs at least 2 samples, got " + std::to_string(samples.size()));
    }
    const auto width = samples.front().width;
    const std::uint64_t modulus = std::uint64_t{1} << static_cast<unsigned>(width);
    auto step = [modulus](std::uint64_t prev, std::uint64_t next) {
        return next >= prev ? next - prev : next + modulus - prev;
    };
    std::vector<TrafficDelta> out;
    out.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const auto& a = samples[i - 1];
        const auto& b = samples[i];
        if (b.width != width) throw InsufficientSamples("diff_counters requires a single counter width");
        out.push_back(TrafficDelta{a.timestamp, b.timestamp, step(a.tx_cum, b.tx_cum), step(a.rx_cum, b.rx_cum)});
    }
    return out;
}

/// Deltas of a timeline, or an empty list when it has fewer than two counter samples.
inline std::vector<TrafficDelta> timeline_deltas(const DeviceTimeline& tl) {
    if (tl.counters.size() < 2) return {};
    return diff_counters(tl.counters);
}

/// Number of distinct UTC days with non-zero traffic. A delta belongs to the day
/// its interval ends in.
inline int active_days(std::span<const TrafficDelta> deltas) {
    std::set<std::int64_t> days;
    for (const auto& d : deltas) {
        if (d.total() > 0) days.insert(utc_day(d.interval_end));
    }
    return static_cast<int>(days.size());
}

struct FilterResult {
    std::vector<DeviceTimeline> kept;
    PopulationReport report;
};

/// Keeps WiFi devices with trustworthy counters and at least `min_days` active days.
inline FilterResult filter_population(std::span<const DeviceTimeline> timelines, int min_days = 3) {
    if (min_days < 1) throw ConfigError("min_days must be >= 1");
    FilterResult r;
    for (const auto& tl : timelines) {
        ++r.report.total;
        if (tl.descriptor.interface == Interface::Wired || tl.unreliable_counters) {
            ++r.report.wired;
            if (tl.unreliable_counters) ++r.report.unreliable_counters;
            continue;
        }
        ++r.report.wireless;
        if (active_days(timeline_deltas(tl)) >= min_days) {
            ++r.report.nontransient;
            r.kept.push_back(tl);
        } else {
            ++r.report.transient;
        }
    }
    return r;
}

inline nlohmann::json to_json(const PopulationReport& r) {
    return nlohmann::json{{"total", r.total},
                          {"wired", r.wired},
                          {"wireless", r.wireless},
                          {"transient", r.transient},
                          {"nontransient", r.nontransient},
                          {"coarse_labeled", r.coarse_labeled},
                          {"fine_labeled", r.fine_labeled},
                          {"unreliable_counters", r.unreliable_counters}};
}

}  // namespace gwprof
