#pragma once

// Conservative ground-truth labels from static host descriptors: hostname
// dictionary, narrow-portfolio OUIs, self-advertised BSSIDs and extender
// detection, followed by sanity checks. Any disagreement rejects the label.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwprof/default_rules.hpp"
#include "gwprof/error.hpp"
#include "gwprof/features.hpp"
#include "gwprof/telemetry.hpp"

namespace gwprof {

/// A label named by a rule: either a fine class or only a coarse class.
using RuleLabel = std::variant<CoarseClass, FineClass>;

inline CoarseClass coarse_part(const RuleLabel& l) {
    return std::holds_alternative<FineClass>(l) ? coarse_of(std::get<FineClass>(l)) : std::get<CoarseClass>(l);
}

inline std::optional<FineClass> fine_part(const RuleLabel& l) {
    if (std::holds_alternative<FineClass>(l)) return std::get<FineClass>(l);
    return std::nullopt;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

struct NamePattern {
    std::string id;
    std::string pattern;
    bool is_regex = false;
    RuleLabel label;
    std::string vendor;      // hostname implies this vendor
    std::string not_vendor;  // hostname rules out this vendor
    std::regex compiled;

    bool matches(std::string_view text) const {
        const auto lower = to_lower(text);
        if (is_regex) return std::regex_search(lower, compiled);
        return lower.find(to_lower(pattern)) != std::string::npos;
    }
};

struct LabelRuleset {
    std::vector<NamePattern> hostname_patterns;  // ordered; first match wins
    std::vector<NamePattern> ssid_patterns;
    std::map<Oui, FineClass> oui_map;            // narrow-portfolio vendors only
    std::map<Oui, std::string> oui_vendors;
    std::set<std::string> default_stb_names;     // lower-case, exact match
    int extender_hostname_count_threshold = 3;
};

namespace detail {

inline RuleLabel parse_rule_label(const std::string& s) {
    if (auto f = fine_from_string(s)) return *f;
    if (auto c = coarse_from_string(s)) return *c;
    throw ConfigError("unknown class label '" + s + "' in ruleset");
}

inline std::vector<NamePattern> parse_patterns(const nlohmann::json& arr) {
    std::vector<NamePattern> out;
    for (const auto& p : arr) {
        NamePattern np;
        np.pattern = p.at("pattern").get<std::string>();
        np.id = p.value("id", np.pattern);
        const auto kind = p.value("kind", std::string("substring"));
        if (kind != "regex" && kind != "substring") throw ConfigError("pattern kind must be regex or substring");
        np.is_regex = kind == "regex";
        np.label = parse_rule_label(p.at("label").get<std::string>());
        np.vendor = p.value("vendor", std::string());
        np.not_vendor = p.value("not_vendor", std::string());
        if (np.is_regex) {
            try {
                np.compiled = std::regex(to_lower(np.pattern), std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw ConfigError("bad regex '" + np.pattern + "': " + e.what());
            }
        }
        out.push_back(std::move(np));
    }
    return out;
}

}  // namespace detail

inline LabelRuleset parse_ruleset(const nlohmann::json& j) {
    try {
        LabelRuleset r;
        r.hostname_patterns = detail::parse_patterns(j.at("hostname_patterns"));
        if (j.contains("ssid_patterns")) r.ssid_patterns = detail::parse_patterns(j.at("ssid_patterns"));
        if (j.contains("oui_map")) {
            for (const auto& [k, v] : j.at("oui_map").items()) {
                auto f = fine_from_string(v.get<std::string>());
                if (!f) throw ConfigError("oui_map entry must name a fine class: " + k);
                r.oui_map[parse_oui(k)] = *f;
            }
        }
        if (j.contains("oui_vendors")) {
            for (const auto& [k, v] : j.at("oui_vendors").items()) r.oui_vendors[parse_oui(k)] = v.get<std::string>();
        }
        if (j.contains("stb_names")) {
            for (const auto& s : j.at("stb_names")) r.default_stb_names.insert(to_lower(s.get<std::string>()));
        }
        r.extender_hostname_count_threshold = j.value("extender_hostname_count_threshold", 3);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed ruleset: ") + e.what());
    } catch (const MalformedMac& e) {
        throw ConfigError(std::string("malformed ruleset: ") + e.what());
    }
}

inline const LabelRuleset& default_ruleset() {
    static const LabelRuleset rules = parse_ruleset(nlohmann::json::parse(kDefaultRulesJson));
    return rules;
}

struct HostnameMatch {
    RuleLabel label;
    std::string rule_id;
    std::string vendor;
    std::string not_vendor;

    CoarseClass coarse() const { return coarse_part(label); }
    std::optional<FineClass> fine() const { return fine_part(label); }
};

/// Default STB names first, then patterns in order; each pattern is tried
/// against every hostname before moving on, so hostname order is irrelevant.
inline std::optional<HostnameMatch> label_by_hostname(const std::set<std::string>& hostnames,
                                                      const LabelRuleset& rules) {
    for (const auto& h : hostnames) {
        if (rules.default_stb_names.contains(to_lower(h))) {
            return HostnameMatch{FineClass::STB, "stb-name", {}, {}};
        }
    }
    for (const auto& p : rules.hostname_patterns) {
        for (const auto& h : hostnames) {
            if (p.matches(h)) return HostnameMatch{p.label, p.id, p.vendor, p.not_vendor};
        }
    }
    return std::nullopt;
}

inline std::optional<FineClass> label_by_oui(const Oui& oui, const LabelRuleset& rules) {
    if (auto it = rules.oui_map.find(oui); it != rules.oui_map.end()) return it->second;
    return std::nullopt;
}

/// Same first five octets, last octet within one.
inline bool bssid_adjacent(const MacAddress& a, const MacAddress& b) noexcept {
    for (std::size_t i = 0; i < 5; ++i) {
        if (a.octets[i] != b.octets[i]) return false;
    }
    const int d = static_cast<int>(a.octets[5]) - static_cast<int>(b.octets[5]);
    return d >= -1 && d <= 1;
}

inline std::optional<FineClass> label_by_bssid(const HostDescriptor& d, const LabelRuleset& rules) {
    for (const auto& [ssid, bssid] : d.advertised_bssids) {
        if (!bssid_adjacent(bssid, d.mac)) continue;
        for (const auto& p : rules.ssid_patterns) {
            if (p.matches(ssid)) {
                if (auto f = fine_part(p.label)) return f;
            }
        }
    }
    return std::nullopt;
}

/// Confirmed extender: more hostnames than the threshold allows for one device
/// AND two sessions attributed to different hostnames overlap in time.
inline bool detect_extender(const HostDescriptor& d,
                            const std::map<std::string, std::vector<Session>>& sessions_by_host,
                            int hostname_count_threshold = 3) {
    if (static_cast<int>(d.hostnames.size()) < hostname_count_threshold) return false;
    std::vector<std::pair<Session, std::string>> all;
    for (const auto& [host, sessions] : sessions_by_host) {
        if (!d.hostnames.contains(host)) continue;
        for (const auto& s : sessions) all.emplace_back(s, host);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.start, a.first.end, a.second) < std::tie(b.first.start, b.first.end, b.second);
    });
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size() && all[j].first.start <= all[i].first.end; ++j) {
            if (all[j].second != all[i].second) return true;
        }
    }
    return false;
}

struct GroundTruthLabel {
    MacAddress mac;
    std::optional<CoarseClass> coarse;
    std::optional<FineClass> fine;
    std::vector<std::string> evidence;
    std::string rejected;  // non-empty when a sanity check discarded the label
};

/// Which evidence sources `label_device` may consult.
struct EvidenceMask {
    bool bssid = true;
    bool hostname = true;
    bool oui = true;
    bool extender = true;
};

inline GroundTruthLabel label_device(const DeviceTimeline& tl, const LabelRuleset& rules,
                                     EvidenceMask use = {}) {
    const auto& d = tl.descriptor;
    GroundTruthLabel out;
    out.mac = d.mac;

    const bool extender =
        use.extender && detect_extender(d, sessions_by_hostname(tl), rules.extender_hostname_count_threshold);

    std::vector<FineClass> fines;
    std::vector<CoarseClass> coarses;
    auto reject = [&](std::string why) {
        out.coarse.reset();
        out.fine.reset();
        out.rejected = std::move(why);
        return out;
    };

    if (use.bssid) {
        if (auto f = label_by_bssid(d, rules)) {
            fines.push_back(*f);
            out.evidence.push_back("bssid:" + std::string(to_string(*f)));
        }
    }

    std::optional<HostnameMatch> host;
    if (use.hostname) {
        host = label_by_hostname(d.hostnames, rules);
        // Behind a confirmed extender the names belong to the hidden devices.
        if (host && extender && host->coarse() != CoarseClass::NetworkEquipment) host.reset();
        if (host && !extender) {
            // Every recognised hostname must tell the same story.
            for (const auto& h : d.hostnames) {
                auto single = label_by_hostname({h}, rules);
                if (single && single->coarse() != host->coarse()) {
                    return reject("hostnames disagree");
                }
            }
        }
        if (host) {
            if (auto f = host->fine()) fines.push_back(*f);
            coarses.push_back(host->coarse());
            out.evidence.push_back("hostname:" + host->rule_id);
        }
    }

    const Oui oui = d.mac.oui();
    if (use.oui) {
        if (auto f = label_by_oui(oui, rules)) {
            fines.push_back(*f);
            out.evidence.push_back("oui:" + oui.to_string());
        }
    }

    if (extender) {
        coarses.push_back(CoarseClass::NetworkEquipment);
        out.evidence.push_back("extender");
    }

    for (auto f : fines) coarses.push_back(coarse_of(f));
    if (coarses.empty()) return out;

    for (auto f : fines) {
        if (f != fines.front()) return reject("conflicting fine evidence");
    }
    for (auto c : coarses) {
        if (c != coarses.front()) return reject("conflicting coarse evidence");
    }

    if (coarses.front() == CoarseClass::MobileHandheld && d.interface == Interface::Wired && !extender) {
        return reject("handheld on a wired interface");
    }
    if (host && use.oui) {
        auto v = rules.oui_vendors.find(oui);
        if (v != rules.oui_vendors.end()) {
            if (!host->vendor.empty() && host->vendor != v->second) return reject("vendor mismatch");
            if (!host->not_vendor.empty() && host->not_vendor == v->second) return reject("vendor mismatch");
        }
    }

    out.coarse = coarses.front();
    if (!fines.empty()) out.fine = fines.front();
    return out;
}

inline nlohmann::json to_json(const GroundTruthLabel& l) {
    nlohmann::json j{{"mac", l.mac.to_string()}};
    j["coarse"] = l.coarse ? nlohmann::json(std::string(to_string(*l.coarse))) : nlohmann::json(nullptr);
    j["fine"] = l.fine ? nlohmann::json(std::string(to_string(*l.fine))) : nlohmann::json(nullptr);
    j["evidence"] = l.evidence;
    if (!l.rejected.empty()) j["rejected"] = l.rejected;
    return j;
}

inline GroundTruthLabel label_from_json(const nlohmann::json& j) {
    GroundTruthLabel l;
    l.mac = parse_mac(j.at("mac").get<std::string>());
    if (j.contains("coarse") && !j["coarse"].is_null()) {
        auto c = coarse_from_string(j["coarse"].get<std::string>());
        if (!c) throw ConfigError("unknown coarse class in labels");
        l.coarse = *c;
    }
    if (j.contains("fine") && !j["fine"].is_null()) {
        auto f = fine_from_string(j["fine"].get<std::string>());
        if (!f) throw ConfigError("unknown fine class in labels");
        l.fine = *f;
    }
    if (j.contains("evidence")) l.evidence = j["evidence"].get<std::vector<std::string>>();
    l.rejected = j.value("rejected", std::string());
    return l;
}

}  // namespace gwprof
