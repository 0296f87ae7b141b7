#pragma once

// Seeded generator of home-gateway traces with known device classes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/dataset.hpp"
#include "gwprof/error.hpp"
#include "gwprof/rng.hpp"
#include "gwprof/telemetry.hpp"

namespace gwprof {

struct LogNormalParam {
    double median = 1;
    double sigma = 0;
};

struct NormalParam {
    double mean = 0;
    double sd = 0;
};

struct HostnameTemplate {
    std::string pattern;  // placeholders: {Name} {name} {hexN} {HEXN}
    double weight = 1;
    std::vector<Oui> ouis;
};

struct ExtenderSpec {
    int children_min = 3;
    int children_max = 5;
    std::vector<std::string> child_profiles;
    double bssid_prob = 0.5;
    double own_hostname_prob = 0.5;  // chance the extender reports its own name too
};

struct GuestSpec {
    int days_min = 1;
    int days_max = 3;
    std::vector<std::string> label_profiles;
};

struct ClassProfile {
    std::string name;
    std::optional<FineClass> fine_class;  // unset for guests, whose class comes from the label profile
    double weight = 0;
    Interface iface = Interface::WiFi;
    CounterWidth counter_width = CounterWidth::W32;
    double sessions_per_day = 2;
    LogNormalParam session_len_s{600, 0.5};
    LogNormalParam tx_bytes_per_s{1000, 0.5};
    LogNormalParam rx_bytes_per_s{10000, 0.5};
    double session_volume_sigma = 0.5;  // per-session multiplier
    double tick_volume_sigma = 0.4;     // per-sample multiplier
    NormalParam rssi_base{-60, 6};
    double rssi_noise_sd = 1.5;
    double mobility_sd = 0;
    int locations_min = 1;
    int locations_max = 1;
    double location_spread_db = 0;
    double location_stickiness = 0.7;  // chance a session reuses the previous location
    double active_min = 0.8;           // per-device daily activity probability range
    double active_max = 0.8;
    std::vector<HostnameTemplate> hostnames;
    std::optional<ExtenderSpec> extender;
    std::optional<GuestSpec> guest;
};

struct CorpusConfig {
    int homes = 240;
    int days = 90;
    std::uint64_t seed = 7;
    int devices_base = 2;
    double devices_poisson_mean = 6;
    Timestamp epoch = 1383264000;  // a UTC midnight
    int max_ticks_per_session = 4;
    Timestamp tick_s = 60;
    Timestamp max_tick_s = 840;  // kept below the session gap
};

struct ProfileSet {
    CorpusConfig corpus;
    std::vector<std::string> names;
    std::vector<ClassProfile> profiles;

    const ClassProfile& by_name(const std::string& n) const {
        for (const auto& p : profiles) {
            if (p.name == n) return p;
        }
        throw ConfigError("unknown profile '" + n + "'");
    }
};

namespace detail {

inline LogNormalParam parse_lognormal(const nlohmann::json& j) {
    return {j.at("median").get<double>(), j.value("sigma", 0.0)};
}

inline std::vector<HostnameTemplate> parse_templates(const nlohmann::json& arr) {
    std::vector<HostnameTemplate> out;
    for (const auto& t : arr) {
        HostnameTemplate h;
        h.pattern = t.at("template").get<std::string>();
        h.weight = t.value("weight", 1.0);
        for (const auto& o : t.value("ouis", nlohmann::json::array())) h.ouis.push_back(parse_oui(o.get<std::string>()));
        if (h.ouis.empty()) throw ConfigError("hostname template '" + h.pattern + "' has no OUIs");
        out.push_back(std::move(h));
    }
    return out;
}

inline std::pair<int, int> parse_range(const nlohmann::json& j, const char* key, int lo, int hi) {
    if (!j.contains(key)) return {lo, hi};
    const auto& r = j.at(key);
    return {r.at(0).get<int>(), r.at(1).get<int>()};
}

}  // namespace detail

inline ProfileSet parse_profiles(const nlohmann::json& j) {
    ProfileSet set;
    try {
        if (j.contains("corpus")) {
            const auto& c = j["corpus"];
            auto& cc = set.corpus;
            cc.homes = c.value("homes", cc.homes);
            cc.days = c.value("days", cc.days);
            cc.seed = c.value("seed", cc.seed);
            if (c.contains("devices_per_home")) {
                cc.devices_base = c["devices_per_home"].value("base", cc.devices_base);
                cc.devices_poisson_mean = c["devices_per_home"].value("poisson_mean", cc.devices_poisson_mean);
            }
            cc.epoch = c.value("epoch", cc.epoch);
            cc.max_ticks_per_session = c.value("max_ticks_per_session", cc.max_ticks_per_session);
            cc.tick_s = c.value("tick_s", cc.tick_s);
            cc.max_tick_s = c.value("max_tick_s", cc.max_tick_s);
        }
        set.names = j.at("names").get<std::vector<std::string>>();
        if (set.names.empty()) throw ConfigError("profile file needs at least one name");
        for (const auto& pj : j.at("profiles")) {
            ClassProfile p;
            p.name = pj.at("name").get<std::string>();
            if (pj.contains("fine_class") && !pj["fine_class"].is_null()) {
                auto f = fine_from_string(pj["fine_class"].get<std::string>());
                if (!f) throw ConfigError("profile '" + p.name + "': unknown fine class");
                p.fine_class = *f;
            }
            p.weight = pj.value("weight", 0.0);
            const auto iface = pj.value("iface", std::string("wifi"));
            if (iface != "wifi" && iface != "wired") throw ConfigError("profile '" + p.name + "': iface must be wifi or wired");
            p.iface = iface == "wired" ? Interface::Wired : Interface::WiFi;
            const int width = pj.value("counter_width", 32);
            if (width != 16 && width != 32) throw ConfigError("profile '" + p.name + "': counter_width must be 16 or 32");
            p.counter_width = width == 16 ? CounterWidth::W16 : CounterWidth::W32;
            p.sessions_per_day = pj.value("sessions_per_day", p.sessions_per_day);
            if (pj.contains("session_len_s")) p.session_len_s = detail::parse_lognormal(pj["session_len_s"]);
            if (pj.contains("tx_bytes_per_s")) p.tx_bytes_per_s = detail::parse_lognormal(pj["tx_bytes_per_s"]);
            if (pj.contains("rx_bytes_per_s")) p.rx_bytes_per_s = detail::parse_lognormal(pj["rx_bytes_per_s"]);
            p.session_volume_sigma = pj.value("session_volume_sigma", p.session_volume_sigma);
            p.tick_volume_sigma = pj.value("tick_volume_sigma", p.tick_volume_sigma);
            if (pj.contains("rssi_base")) p.rssi_base = {pj["rssi_base"].at("mean").get<double>(), pj["rssi_base"].value("sd", 0.0)};
            p.rssi_noise_sd = pj.value("rssi_noise_sd", p.rssi_noise_sd);
            p.mobility_sd = pj.value("mobility_sd", p.mobility_sd);
            std::tie(p.locations_min, p.locations_max) = detail::parse_range(pj, "n_locations", 1, 1);
            p.location_spread_db = pj.value("location_spread_db", p.location_spread_db);
            p.location_stickiness = pj.value("location_stickiness", p.location_stickiness);
            if (pj.contains("active_day_prob")) {
                p.active_min = pj["active_day_prob"].at(0).get<double>();
                p.active_max = pj["active_day_prob"].at(1).get<double>();
            }
            if (pj.contains("hostnames")) p.hostnames = detail::parse_templates(pj["hostnames"]);
            if (pj.contains("extender")) {
                const auto& e = pj["extender"];
                ExtenderSpec x;
                std::tie(x.children_min, x.children_max) = detail::parse_range(e, "children", 3, 5);
                x.child_profiles = e.at("child_profiles").get<std::vector<std::string>>();
                x.bssid_prob = e.value("bssid_prob", x.bssid_prob);
                x.own_hostname_prob = e.value("own_hostname_prob", x.own_hostname_prob);
                p.extender = std::move(x);
            }
            if (pj.contains("guest")) {
                const auto& g = pj["guest"];
                GuestSpec gs;
                std::tie(gs.days_min, gs.days_max) = detail::parse_range(g, "active_days", 1, 3);
                gs.label_profiles = g.at("label_profiles").get<std::vector<std::string>>();
                p.guest = std::move(gs);
            }

            const bool probs_ok = p.active_min >= 0 && p.active_max <= 1 && p.active_min <= p.active_max &&
                                  p.location_stickiness >= 0 && p.location_stickiness <= 1;
            if (!probs_ok) throw ConfigError("profile '" + p.name + "': probabilities must lie in [0,1]");
            if (p.weight < 0 || p.sessions_per_day < 0 || p.locations_min < 1 || p.locations_max < p.locations_min) {
                throw ConfigError("profile '" + p.name + "': invalid parameter range");
            }
            if (!p.guest && !p.fine_class) throw ConfigError("profile '" + p.name + "' needs a fine_class");
            if (!p.guest && p.hostnames.empty()) throw ConfigError("profile '" + p.name + "' needs hostname templates");
            set.profiles.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile file: ") + e.what());
    }
    for (const auto& p : set.profiles) {
        if (p.extender) {
            for (const auto& c : p.extender->child_profiles) set.by_name(c);
        }
        if (p.guest) {
            for (const auto& c : p.guest->label_profiles) set.by_name(c);
        }
    }
    if (set.profiles.empty()) throw ConfigError("profile file has no profiles");
    return set;
}

struct GeneratedDevice {
    DeviceTimeline timeline;
    FineClass fine{};
    std::string profile;    // profile that supplied the name and OUI
    std::string behaviour;  // profile that drove the traffic and RSSI
    bool guest = false;
    int home = 0;
};

/// Everything a device needs from its home and the corpus.
struct DeviceContext {
    MacAddress mac{{0x02, 0, 0, 0, 0, 1}};
    int home = 0;
    std::string home_ssid = "home";
    const ProfileSet* profiles = nullptr;  // needed for extenders and guests
    std::vector<std::string> names{"Alex"};
    CorpusConfig corpus;
};

namespace detail {

template <typename T>
const T& pick_weighted(Rng& rng, const std::vector<T>& items, auto weight_of) {
    double total = 0;
    for (const auto& it : items) total += weight_of(it);
    double u = uniform01(rng) * total;
    for (const auto& it : items) {
        u -= weight_of(it);
        if (u < 0) return it;
    }
    return items.back();
}

inline std::string render_hostname(const std::string& pattern, const std::string& name, Rng& rng) {
    static constexpr char kLower[] = "0123456789abcdef";
    static constexpr char kUpper[] = "0123456789ABCDEF";
    std::string out;
    for (std::size_t i = 0; i < pattern.size();) {
        if (pattern[i] != '{') {
            out += pattern[i++];
            continue;
        }
        const auto close = pattern.find('}', i);
        if (close == std::string::npos) throw ConfigError("unterminated placeholder in '" + pattern + "'");
        const std::string key = pattern.substr(i + 1, close - i - 1);
        if (key == "Name") {
            out += name;
        } else if (key == "name") {
            for (char c : name) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (key.starts_with("hex") || key.starts_with("HEX")) {
            const int n = std::stoi(key.substr(3));
            const char* digits = key[0] == 'h' ? kLower : kUpper;
            for (int d = 0; d < n; ++d) out += digits[uniform_int(rng, 0, 15)];
        } else {
            throw ConfigError("unknown placeholder {" + key + "}");
        }
        i = close + 1;
    }
    return out;
}

struct Tick {
    Timestamp ts = 0;
    std::uint64_t tx = 0;  // bytes since the previous tick of the same stream
    std::uint64_t rx = 0;
    double tx_kbps = 0;
    double rx_kbps = 0;
    std::string hostname;  // sighting at this tick, if any
};

struct SessionPlan {
    Timestamp start;
    Timestamp length;
};

/// Session start times and lengths over the whole run for one behaviour profile.
inline std::vector<SessionPlan> plan_sessions(const ClassProfile& p, const std::vector<int>& active, double len_mult,
                                              double rate_mult, const CorpusConfig& cc, Rng& rng) {
    std::vector<SessionPlan> out;
    Timestamp prev_end = std::numeric_limits<Timestamp>::min() / 2;
    for (int day : active) {
        const int n = std::max(1, poisson(rng, p.sessions_per_day * rate_mult));
        std::vector<Timestamp> starts;
        for (int s = 0; s < n; ++s) starts.push_back(uniform_int(rng, 0, kSecondsPerDay - 1));
        std::sort(starts.begin(), starts.end());
        for (auto off : starts) {
            Timestamp start = cc.epoch + static_cast<Timestamp>(day) * kSecondsPerDay + off;
            // Keep sessions apart so each one is recovered as a separate session.
            start = std::max(start, prev_end + 2 * cc.max_tick_s + 60);
            const double len = std::clamp(lognormal(rng, p.session_len_s.median * len_mult, p.session_len_s.sigma), 60.0,
                                          8.0 * 3600);
            const auto length = static_cast<Timestamp>(len);
            out.push_back({start, length});
            prev_end = start + length;
        }
    }
    return out;
}

/// Sample spacing for a session: the base tick, stretched so no session needs
/// more than `max_ticks_per_session` samples.
inline Timestamp tick_spacing(Timestamp length, const CorpusConfig& cc) {
    const Timestamp want = (length + cc.max_ticks_per_session - 1) / std::max(1, cc.max_ticks_per_session);
    const Timestamp spacing = std::clamp(want, cc.tick_s, cc.max_tick_s);
    return (spacing + cc.tick_s - 1) / cc.tick_s * cc.tick_s;
}

/// Ticks for one stream: a zero-traffic tick opening each session followed by
/// traffic ticks, one hostname sighting on the first traffic tick.
inline std::vector<Tick> session_ticks(const std::vector<SessionPlan>& plan, const ClassProfile& p, double tx_base,
                                       double rx_base, const std::string& hostname, const CorpusConfig& cc, Rng& rng) {
    std::vector<Tick> out;
    for (const auto& s : plan) {
        const Timestamp dt = tick_spacing(s.length, cc);
        const auto m = std::max<Timestamp>(1, (s.length + dt / 2) / dt);
        const double tx_rate = tx_base * lognormal(rng, 1.0, p.session_volume_sigma);
        const double rx_rate = rx_base * lognormal(rng, 1.0, p.session_volume_sigma);
        out.push_back(Tick{s.start, 0, 0, 0, 0, {}});
        for (Timestamp k = 1; k <= m; ++k) {
            Tick t;
            t.ts = s.start + k * dt;
            const double tx = std::max(1.0, tx_rate * static_cast<double>(dt) * lognormal(rng, 1.0, p.tick_volume_sigma));
            const double rx = std::max(1.0, rx_rate * static_cast<double>(dt) * lognormal(rng, 1.0, p.tick_volume_sigma));
            t.tx = static_cast<std::uint64_t>(tx);
            t.rx = static_cast<std::uint64_t>(rx);
            t.tx_kbps = tx * 8.0 / 1000.0 / static_cast<double>(dt);
            t.rx_kbps = rx * 8.0 / 1000.0 / static_cast<double>(dt);
            if (k == 1) t.hostname = hostname;
            out.push_back(std::move(t));
        }
    }
    return out;
}

inline std::vector<int> pick_active_days(double prob, int days, Rng& rng) {
    std::vector<int> out;
    for (int d = 0; d < days; ++d) {
        if (bernoulli(rng, prob)) out.push_back(d);
    }
    return out;
}

inline std::vector<int> pick_guest_days(const GuestSpec& g, int days, Rng& rng) {
    const int n = static_cast<int>(std::min<std::int64_t>(days, uniform_int(rng, g.days_min, g.days_max)));
    const int first = static_cast<int>(uniform_int(rng, 0, std::max(0, days - n)));
    std::vector<int> out;
    for (int d = 0; d < n; ++d) out.push_back(first + d);
    return out;
}

/// Folds the ticks into cumulative counters, rates, RSSI and sightings.
inline void fill_timeline(DeviceTimeline& tl, std::vector<Tick> ticks, const ClassProfile& behaviour,
                          bool fixed_location, Rng& rng) {
    std::stable_sort(ticks.begin(), ticks.end(), [](const Tick& a, const Tick& b) { return a.ts < b.ts; });
    // Ticks sharing a timestamp (overlapping child streams) are summed.
    std::vector<Tick> merged;
    for (auto& t : ticks) {
        if (!merged.empty() && merged.back().ts == t.ts) {
            auto& m = merged.back();
            m.tx += t.tx;
            m.rx += t.rx;
            m.tx_kbps += t.tx_kbps;
            m.rx_kbps += t.rx_kbps;
            if (!t.hostname.empty()) {
                if (m.hostname.empty()) {
                    m.hostname = t.hostname;
                } else if (m.hostname != t.hostname) {
                    tl.sightings.push_back({m.ts, t.hostname});
                }
            }
        } else {
            merged.push_back(std::move(t));
        }
    }

    const auto width = behaviour.counter_width;
    const std::uint64_t modulus = std::uint64_t{1} << static_cast<int>(width);
    std::uint64_t tx_cum = static_cast<std::uint64_t>(uniform_int(rng, 0, static_cast<std::int64_t>(modulus / 2)));
    std::uint64_t rx_cum = static_cast<std::uint64_t>(uniform_int(rng, 0, static_cast<std::int64_t>(modulus / 2)));
    const bool wireless = tl.descriptor.interface == Interface::WiFi;

    // RSSI: a few locations around a per-device base, an AR(1) walk within a
    // session and white measurement noise.
    const int n_loc = static_cast<int>(uniform_int(rng, behaviour.locations_min, behaviour.locations_max));
    const double base = normal(rng, behaviour.rssi_base.mean, behaviour.rssi_base.sd);
    std::vector<double> locations{base};
    for (int i = 1; i < (fixed_location ? 1 : n_loc); ++i) locations.push_back(base + normal(rng, 0, behaviour.location_spread_db));
    const double mobility = fixed_location ? 0.0 : behaviour.mobility_sd * lognormal(rng, 1.0, 0.25);
    const double noise = behaviour.rssi_noise_sd;
    std::size_t loc = 0;
    double walk = 0;

    for (const auto& t : merged) {
        const bool traffic = t.tx + t.rx > 0;
        if (traffic) {
            tx_cum = (tx_cum + t.tx) % modulus;
            rx_cum = (rx_cum + t.rx) % modulus;
        }
        tl.counters.push_back(CounterSample{t.ts, tx_cum, rx_cum, width});
        if (!t.hostname.empty()) tl.sightings.push_back({t.ts, t.hostname});
        if (!traffic) {
            // Session opening: maybe move, restart the walk.
            if (locations.size() > 1 && !bernoulli(rng, behaviour.location_stickiness)) {
                loc = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(locations.size()) - 1));
            }
            walk = 0;
            continue;
        }
        if (!wireless) continue;
        tl.rates.push_back(RateSample{t.ts, static_cast<std::uint32_t>(t.tx_kbps), static_cast<std::uint32_t>(t.rx_kbps)});
        walk = 0.7 * walk + (mobility > 0 ? normal(rng, 0, mobility) : 0.0);
        const double value = locations[loc] + walk + (noise > 0 ? normal(rng, 0, noise) : 0.0);
        tl.rssi.push_back(RssiSample{t.ts, static_cast<std::int32_t>(std::clamp(std::lround(value), -95L, -20L))});
    }
    std::stable_sort(tl.sightings.begin(), tl.sightings.end(), [](const HostnameSighting& a, const HostnameSighting& b) {
        return std::tie(a.timestamp, a.hostname) < std::tie(b.timestamp, b.hostname);
    });
    tl.sightings.erase(std::unique(tl.sightings.begin(), tl.sightings.end(),
                                   [](const HostnameSighting& a, const HostnameSighting& b) {
                                       return a.timestamp == b.timestamp && a.hostname == b.hostname;
                                   }),
                       tl.sightings.end());
    tl.unreliable_counters = width == CounterWidth::W16;
}

inline const std::string& pick_name(const std::vector<std::string>& names, Rng& rng) {
    return names[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(names.size()) - 1))];
}

}  // namespace detail

/// Simulates one device over `days` days. The MAC's OUI is replaced by one from
/// the chosen hostname template's pool.
inline GeneratedDevice generate_device(const ClassProfile& profile, int days, std::uint64_t seed,
                                       const DeviceContext& ctx = {}) {
    if (days < 1) throw ConfigError("generate_device needs days >= 1");
    Rng rng(seed);
    GeneratedDevice out;
    out.home = ctx.home;
    out.profile = profile.name;

    const ClassProfile* label = &profile;
    const ClassProfile* behaviour = &profile;
    if (profile.guest) {
        if (!ctx.profiles) throw ConfigError("guest profile needs the profile set");
        out.guest = true;
        const auto& names = profile.guest->label_profiles;
        label = &ctx.profiles->by_name(names[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(names.size()) - 1))]);
        std::vector<const ClassProfile*> pool;
        for (const auto& p : ctx.profiles->profiles) {
            if (!p.guest && !p.extender && p.iface == Interface::WiFi && p.counter_width == CounterWidth::W32) pool.push_back(&p);
        }
        behaviour = pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))];
        out.profile = label->name;
    }
    out.behaviour = behaviour->name;
    out.fine = *label->fine_class;

    const std::string& person = detail::pick_name(ctx.names, rng);
    const auto& tmpl = detail::pick_weighted(rng, label->hostnames, [](const HostnameTemplate& t) { return t.weight; });
    const Oui oui = tmpl.ouis[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(tmpl.ouis.size()) - 1))];
    const std::string hostname = detail::render_hostname(tmpl.pattern, person, rng);

    auto& tl = out.timeline;
    tl.descriptor.mac = ctx.mac;
    for (std::size_t i = 0; i < 3; ++i) tl.descriptor.mac.octets[i] = oui.prefix[i];
    tl.descriptor.interface = behaviour->iface;

    const CorpusConfig& cc = ctx.corpus;
    std::vector<int> active;
    if (profile.guest) {
        active = detail::pick_guest_days(*profile.guest, days, rng);
    } else {
        active = detail::pick_active_days(profile.active_min + (profile.active_max - profile.active_min) * uniform01(rng),
                                          days, rng);
    }

    std::vector<detail::Tick> ticks;
    bool fixed_location = false;
    if (profile.extender) {
        if (!ctx.profiles) throw ConfigError("extender profile needs the profile set");
        const auto& ex = *profile.extender;
        fixed_location = true;
        const int n_children = static_cast<int>(uniform_int(rng, ex.children_min, ex.children_max));
        std::set<std::string> used;
        std::vector<std::vector<detail::SessionPlan>> plans;
        std::vector<std::string> child_names;
        std::vector<const ClassProfile*> child_profiles;
        for (int c = 0; c < n_children; ++c) {
            const auto& cp = ctx.profiles->by_name(
                ex.child_profiles[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(ex.child_profiles.size()) - 1))]);
            std::string child_host;
            do {
                const auto& ct = detail::pick_weighted(rng, cp.hostnames, [](const HostnameTemplate& t) { return t.weight; });
                child_host = detail::render_hostname(ct.pattern, detail::pick_name(ctx.names, rng), rng);
            } while (!used.insert(child_host).second);
            std::vector<int> child_days;
            for (int d : active) {
                if (bernoulli(rng, 0.5 * (cp.active_min + cp.active_max))) child_days.push_back(d);
            }
            if (child_days.empty() && !active.empty()) child_days.push_back(active.front());
            plans.push_back(detail::plan_sessions(cp, child_days, 1.0, 1.0, cc, rng));
            child_names.push_back(child_host);
            child_profiles.push_back(&cp);
        }
        // Two children share one session window on the first active day.
        if (!active.empty() && n_children >= 2) {
            const Timestamp t0 = cc.epoch + static_cast<Timestamp>(active.front()) * kSecondsPerDay + 12 * 3600;
            auto clear_window = [&](std::vector<detail::SessionPlan>& p) {
                std::erase_if(p, [&](const detail::SessionPlan& s) {
                    return s.start + s.length + 2 * cc.max_tick_s >= t0 - 3600 && s.start <= t0 + 3 * 3600;
                });
                p.push_back({t0, 1800});
                std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
            };
            clear_window(plans[0]);
            clear_window(plans[1]);
        }
        for (int c = 0; c < n_children; ++c) {
            const auto& cp = *child_profiles[static_cast<std::size_t>(c)];
            const double tx = lognormal(rng, cp.tx_bytes_per_s.median, cp.tx_bytes_per_s.sigma);
            const double rx = lognormal(rng, cp.rx_bytes_per_s.median, cp.rx_bytes_per_s.sigma);
            auto t = detail::session_ticks(plans[static_cast<std::size_t>(c)], cp, tx, rx, child_names[static_cast<std::size_t>(c)], cc, rng);
            ticks.insert(ticks.end(), t.begin(), t.end());
        }
        const bool own_named = bernoulli(rng, ex.own_hostname_prob);
        if (own_named) {
            const std::string& own = hostname;
            // Own name is reported on each active day's first sample.
            std::sort(ticks.begin(), ticks.end(), [](const detail::Tick& a, const detail::Tick& b) { return a.ts < b.ts; });
            std::int64_t last_day = -1;
            for (auto& t : ticks) {
                if (t.tx + t.rx == 0) continue;
                const auto day = utc_day(t.ts);
                if (day != last_day) {
                    last_day = day;
                    tl.sightings.push_back({t.ts, own});
                }
            }
        }
        if (bernoulli(rng, ex.bssid_prob)) {
            const bool tplink = !own_named && bernoulli(rng, 0.5);
            const std::string ssid = tplink ? "TL-WA850RE_" + detail::render_hostname("{HEX4}", person, rng) : ctx.home_ssid + "_EXT";
            tl.descriptor.advertised_bssids.emplace(ssid, tl.descriptor.mac.offset(1));
        }
    } else {
        const double dev = lognormal(rng, 1.0, 0.35);
        const auto plan = detail::plan_sessions(*behaviour, active, lognormal(rng, 1.0, 0.3), dev, cc, rng);
        const double tx = lognormal(rng, behaviour->tx_bytes_per_s.median, behaviour->tx_bytes_per_s.sigma);
        const double rx = lognormal(rng, behaviour->rx_bytes_per_s.median, behaviour->rx_bytes_per_s.sigma);
        ticks = detail::session_ticks(plan, *behaviour, tx, rx, hostname, cc, rng);
    }
    detail::fill_timeline(tl, std::move(ticks), *behaviour, fixed_location, rng);
    for (const auto& s : tl.sightings) tl.descriptor.hostnames.insert(s.hostname);
    return out;
}

namespace detail {

inline void append_uint(std::string& out, std::uint64_t v) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

inline void append_int(std::string& out, std::int64_t v) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

inline void append_json_string(std::string& out, const std::string& s) {
    out += nlohmann::json(s).dump();
}

}  // namespace detail

/// Trace lines for one timeline in time order (descriptors first at equal times).
inline void write_trace_records(const DeviceTimeline& tl, std::string& out) {
    const std::string mac = tl.descriptor.mac.to_string();
    const char* iface = tl.descriptor.interface == Interface::Wired ? "wired" : "wifi";
    std::size_t c = 0, r = 0, s = 0, h = 0;
    bool bssid_written = false;
    auto head = [&](Timestamp ts) {
        out += "{\"ts\":";
        detail::append_int(out, ts);
        out += ",\"mac\":\"";
        out += mac;
        out += "\",\"kind\":\"";
    };
    constexpr Timestamp kEnd = std::numeric_limits<Timestamp>::max();
    while (true) {
        const Timestamp tc = c < tl.counters.size() ? tl.counters[c].timestamp : kEnd;
        const Timestamp tr = r < tl.rates.size() ? tl.rates[r].timestamp : kEnd;
        const Timestamp ts = s < tl.rssi.size() ? tl.rssi[s].timestamp : kEnd;
        const Timestamp th = h < tl.sightings.size() ? tl.sightings[h].timestamp : kEnd;
        const Timestamp t = std::min({tc, tr, ts, th});
        if (t == kEnd) break;
        if (th == t) {
            const auto& sight = tl.sightings[h++];
            head(t);
            out += "descriptor\",\"hostname\":";
            detail::append_json_string(out, sight.hostname);
            out += ",\"iface\":\"";
            out += iface;
            out += '"';
            if (!bssid_written && !tl.descriptor.advertised_bssids.empty()) {
                const auto& [ssid, bssid] = *tl.descriptor.advertised_bssids.begin();
                out += ",\"ssid\":";
                detail::append_json_string(out, ssid);
                out += ",\"bssid\":\"" + bssid.to_string() + '"';
                bssid_written = true;
            }
            out += "}\n";
        } else if (tc == t) {
            const auto& cs = tl.counters[c++];
            head(t);
            out += "counter\",\"tx_cum\":";
            detail::append_uint(out, cs.tx_cum);
            out += ",\"rx_cum\":";
            detail::append_uint(out, cs.rx_cum);
            out += ",\"width\":";
            out += cs.width == CounterWidth::W16 ? "16" : "32";
            out += "}\n";
        } else if (tr == t) {
            const auto& rs = tl.rates[r++];
            head(t);
            out += "rate\",\"tx_kbps\":";
            detail::append_uint(out, rs.tx_kbps);
            out += ",\"rx_kbps\":";
            detail::append_uint(out, rs.rx_kbps);
            out += "}\n";
        } else {
            const auto& ss = tl.rssi[s++];
            head(t);
            out += "rssi\",\"rssi\":";
            detail::append_int(out, ss.rssi);
            out += "}\n";
        }
    }
}

struct CorpusSummary {
    std::size_t devices = 0;
    std::size_t records = 0;
    std::size_t bytes = 0;
    std::map<std::string, std::size_t> per_fine;
    std::size_t guests = 0;
};

/// MAC suffix for (home, device): a bijection on 24 bits, so suffixes never repeat.
inline std::uint32_t device_suffix(int home, int index) noexcept {
    std::uint32_t v = (static_cast<std::uint32_t>(home) << 6 | static_cast<std::uint32_t>(index & 63)) & 0xffffffu;
    v = (v * 0x9e3779u + 0x5bd1e9u) & 0xffffffu;  // odd multiplier: invertible mod 2^24
    v ^= v >> 11;
    return v;
}

struct HomeOutput {
    std::string trace;
    std::vector<nlohmann::json> truth;
    std::size_t records = 0;
};

inline HomeOutput generate_home(const ProfileSet& set, const CorpusConfig& cc, int home) {
    HomeOutput out;
    const std::uint64_t home_seed = derive_seed(cc.seed, static_cast<std::uint64_t>(home));
    Rng rng(home_seed);
    const int n = std::min(64, cc.devices_base + poisson(rng, cc.devices_poisson_mean));
    DeviceContext ctx;
    ctx.home = home;
    ctx.profiles = &set;
    ctx.names = set.names;
    ctx.corpus = cc;
    ctx.home_ssid = "home-" + detail::render_hostname("{hex4}", "", rng);
    for (int d = 0; d < n; ++d) {
        const auto& p = detail::pick_weighted(rng, set.profiles, [](const ClassProfile& x) { return x.weight; });
        const std::uint32_t suffix = device_suffix(home, d);
        ctx.mac = MacAddress{{0, 0, 0, static_cast<std::uint8_t>(suffix >> 16), static_cast<std::uint8_t>(suffix >> 8),
                              static_cast<std::uint8_t>(suffix)}};
        GeneratedDevice g = generate_device(p, cc.days, derive_seed(home_seed, static_cast<std::uint64_t>(d) + 1), ctx);
        const auto& tl = g.timeline;
        out.records += tl.counters.size() + tl.rates.size() + tl.rssi.size() + tl.sightings.size();
        write_trace_records(tl, out.trace);
        out.truth.push_back({{"mac", tl.descriptor.mac.to_string()},
                             {"coarse", std::string(to_string(coarse_of(g.fine)))},
                             {"fine", std::string(to_string(g.fine))},
                             {"profile", g.profile},
                             {"behaviour", g.behaviour},
                             {"guest", g.guest},
                             {"home", home}});
    }
    return out;
}

/// Writes `trace.jsonl` and `truth.json` into `out_dir`. Homes are generated
/// independently from per-home seeds and written in home order.
inline CorpusSummary generate_corpus(const ProfileSet& set, const CorpusConfig& cc, const std::filesystem::path& out_dir,
                                     unsigned threads = 0) {
    if (cc.homes < 1) throw ConfigError("need at least one home");
    if (cc.days < 1) throw ConfigError("need at least one day");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::ofstream trace(out_dir / "trace.jsonl", std::ios::binary);
    if (!trace) throw IoError("cannot write " + (out_dir / "trace.jsonl").string());

    CorpusSummary summary;
    nlohmann::json devices = nlohmann::json::array();
    // Homes in batches so memory stays bounded while workers stay busy.
    const std::size_t batch = 16;
    for (std::size_t first = 0; first < static_cast<std::size_t>(cc.homes); first += batch) {
        const std::size_t count = std::min(batch, static_cast<std::size_t>(cc.homes) - first);
        std::vector<HomeOutput> outs(count);
        parallel_for(count, [&](std::size_t i) { outs[i] = generate_home(set, cc, static_cast<int>(first + i)); }, threads);
        for (auto& o : outs) {
            trace.write(o.trace.data(), static_cast<std::streamsize>(o.trace.size()));
            summary.bytes += o.trace.size();
            summary.records += o.records;
            for (auto& t : o.truth) {
                ++summary.per_fine[t["fine"].get<std::string>()];
                summary.guests += t["guest"].get<bool>();
                devices.push_back(std::move(t));
            }
        }
    }
    summary.devices = devices.size();
    if (!trace) throw IoError("write failed for trace.jsonl");

    const nlohmann::json truth{{"schema_version", 1}, {"seed", cc.seed}, {"homes", cc.homes},
                               {"days", cc.days},     {"devices", devices}};
    std::ofstream tf(out_dir / "truth.json", std::ios::binary);
    if (!tf) throw IoError("cannot write " + (out_dir / "truth.json").string());
    tf << truth.dump(1) << '\n';
    if (!tf) throw IoError("write failed for truth.json");
    return summary;
}

}  // namespace gwprof
