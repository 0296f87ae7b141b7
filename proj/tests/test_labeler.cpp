#include <catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "gwprof/labeler.hpp"
#include "gwprof/default_profiles.hpp"
#include "gwprof/synthgen.hpp"

using namespace gwprof;

namespace {

const LabelRuleset& rules() { return default_ruleset(); }

DeviceTimeline device(const std::string& mac, std::set<std::string> names, Interface iface = Interface::WiFi) {
    DeviceTimeline tl;
    tl.descriptor.mac = parse_mac(mac);
    tl.descriptor.hostnames = std::move(names);
    tl.descriptor.interface = iface;
    return tl;
}

// Counter and sighting samples so that `host` is active during [start, end].
void add_activity(DeviceTimeline& tl, const std::string& host, Timestamp start, Timestamp end) {
    tl.sightings.push_back({start, host});
    std::uint64_t c = tl.counters.empty() ? 0 : tl.counters.back().tx_cum;
    if (tl.counters.empty() || tl.counters.back().timestamp < start - 60) {
        tl.counters.push_back({start - 60, c, c, CounterWidth::W32});
    }
    for (Timestamp t = start; t <= end; t += 60) {
        c += 100;
        tl.counters.push_back({t, c, c, CounterWidth::W32});
    }
}

void sort_samples(DeviceTimeline& tl) {
    std::sort(tl.sightings.begin(), tl.sightings.end(),
              [](const auto& a, const auto& b) { return std::tie(a.timestamp, a.hostname) < std::tie(b.timestamp, b.hostname); });
}

}  // namespace

TEST_CASE("hostname rules give coarse and fine classes", "[labeler]") {
    auto m = label_by_hostname({"user-iPhone"}, rules());
    REQUIRE(m);
    CHECK(m->coarse() == CoarseClass::MobileHandheld);
    CHECK(m->fine() == FineClass::Smartphone);

    m = label_by_hostname({"RM4100"}, rules());
    REQUIRE(m);
    CHECK(m->coarse() == CoarseClass::ConsumerElectronics);
    CHECK(m->fine() == FineClass::STB);

    m = label_by_hostname({"android-2013051200001053"}, rules());
    REQUIRE(m);
    CHECK(m->coarse() == CoarseClass::MobileHandheld);
    CHECK_FALSE(m->fine().has_value());

    CHECK_FALSE(label_by_hostname({"localhost"}, rules()).has_value());
    CHECK_FALSE(label_by_hostname({}, rules()).has_value());
}

TEST_CASE("hostname matching ignores set iteration order", "[labeler]") {
    // Pattern order decides, not hostname order.
    const auto a = label_by_hostname({"aaa-laptop", "zzz-iphone"}, rules());
    const auto b = label_by_hostname({"zzz-iphone", "aaa-laptop"}, rules());
    REQUIRE(a);
    CHECK(a->fine() == FineClass::Smartphone);
    CHECK(b->fine() == a->fine());
}

TEST_CASE("OUI refinement only for narrow vendors", "[labeler]") {
    CHECK(label_by_oui(parse_oui("00:00:48"), rules()) == FineClass::PrinterScanner);
    CHECK_FALSE(label_by_oui(parse_oui("f0:db:f8"), rules()).has_value());  // apple
    CHECK_FALSE(label_by_oui(parse_oui("12:34:56"), rules()).has_value());
}

TEST_CASE("advertised network identifies extenders", "[labeler]") {
    HostDescriptor d;
    d.mac = parse_mac("f8:1a:67:00:00:10");
    d.advertised_bssids.insert({"TL-WA850RE_ext", d.mac});
    CHECK(label_by_bssid(d, rules()) == FineClass::WifiExtender);

    d.advertised_bssids = {{"TL-WA850RE_ext", d.mac.offset(1)}};
    CHECK(label_by_bssid(d, rules()) == FineClass::WifiExtender);

    d.advertised_bssids = {{"TL-WA850RE_ext", parse_mac("00:11:22:33:44:55")}};
    CHECK_FALSE(label_by_bssid(d, rules()).has_value());

    d.advertised_bssids = {{"TL-WA850RE_ext", d.mac.offset(2)}};
    CHECK_FALSE(label_by_bssid(d, rules()).has_value());
}

TEST_CASE("detect_extender needs several names and overlapping sessions", "[labeler]") {
    auto tl = device("f8:1a:67:00:00:20", {"Anna-laptop", "Bens-iPhone", "Chloes-iPad"});
    add_activity(tl, "Anna-laptop", 10000, 10600);
    add_activity(tl, "Chloes-iPad", 50000, 50600);
    add_activity(tl, "Bens-iPhone", 90000, 90600);
    sort_samples(tl);
    CHECK_FALSE(detect_extender(tl.descriptor, sessions_by_hostname(tl)));

    auto overlap = device("f8:1a:67:00:00:21", {"Anna-laptop", "Bens-iPhone", "Chloes-iPad"});
    add_activity(overlap, "Anna-laptop", 10000, 10600);
    add_activity(overlap, "Bens-iPhone", 10300, 10900);
    add_activity(overlap, "Chloes-iPad", 90000, 90600);
    overlap.counters.erase(std::unique(overlap.counters.begin(), overlap.counters.end(),
                                       [](const auto& a, const auto& b) { return a.timestamp == b.timestamp; }),
                           overlap.counters.end());
    std::sort(overlap.counters.begin(), overlap.counters.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 1; i < overlap.counters.size(); ++i) {
        overlap.counters[i].tx_cum = std::max(overlap.counters[i].tx_cum, overlap.counters[i - 1].tx_cum + 1);
        overlap.counters[i].rx_cum = overlap.counters[i].tx_cum;
    }
    sort_samples(overlap);
    CHECK(detect_extender(overlap.descriptor, sessions_by_hostname(overlap)));

    auto single = device("f8:1a:67:00:00:22", {"Anna-laptop"});
    add_activity(single, "Anna-laptop", 10000, 10600);
    CHECK_FALSE(detect_extender(single.descriptor, sessions_by_hostname(single)));
}

TEST_CASE("label_device combines evidence", "[labeler]") {
    auto l = label_device(device("a4:5e:60:00:00:01", {"iPad-user"}), rules());
    CHECK(l.coarse == CoarseClass::MobileHandheld);
    CHECK(l.fine == FineClass::Tablet);

    l = label_device(device("00:00:48:00:00:01", {"EPSONA1B2C3"}), rules());
    CHECK(l.fine == FineClass::PrinterScanner);
    CHECK(l.evidence.size() == 2);
}

TEST_CASE("label_device sanity checks reject", "[labeler]") {
    auto l = label_device(device("f0:db:f8:00:00:01", {"john-iphone"}, Interface::Wired), rules());
    CHECK_FALSE(l.coarse.has_value());
    CHECK_FALSE(l.fine.has_value());
    CHECK_FALSE(l.rejected.empty());

    l = label_device(device("f0:db:f8:00:00:02", {"Galaxy-S4-1a2b"}), rules());
    CHECK_FALSE(l.coarse.has_value());
    CHECK(l.rejected == "vendor mismatch");

    l = label_device(device("00:00:48:00:00:03", {"Anna-laptop"}), rules());
    CHECK_FALSE(l.coarse.has_value());

    l = label_device(device("12:00:00:00:00:04", {"Anna-laptop", "Bens-iPhone"}), rules());
    CHECK_FALSE(l.coarse.has_value());
}

TEST_CASE("fine labels always carry their coarse parent", "[labeler][property]") {
    const std::vector<std::string> pool{"Anna-laptop", "Bens-iPhone", "Chloes-iPad", "RM4100", "android-1234",
                                        "Kindle-abc123", "EPSONA1B2C3", "Roku-123456", "TL-WA850RE", "Samsung-Smart-TV",
                                        "XboxOne-1a2b", "DiskStation-aa", "localhost", "Galaxy-S4-0000"};
    const std::vector<std::string> ouis{"00:00:48", "f0:db:f8", "5c:0a:5b", "12:34:56", "f8:1a:67", "b0:a7:37"};
    std::mt19937_64 rng(11);
    const EvidenceMask full{};
    for (int i = 0; i < 3000; ++i) {
        std::set<std::string> names;
        const auto n = rng() % 3;
        for (std::size_t k = 0; k < n; ++k) names.insert(pool[rng() % pool.size()]);
        char mac[18];
        std::snprintf(mac, sizeof mac, "%s:00:00:%02x", ouis[rng() % ouis.size()].c_str(), static_cast<unsigned>(i & 0xff));
        auto tl = device(mac, names, rng() % 4 == 0 ? Interface::Wired : Interface::WiFi);
        if (rng() % 3 == 0) tl.descriptor.advertised_bssids.insert({"TL-WA850RE_ext", tl.descriptor.mac.offset(1)});

        const auto l = label_device(tl, rules(), full);
        if (l.fine) {
            REQUIRE(l.coarse);
            CHECK(coarse_of(*l.fine) == *l.coarse);
        }
        // Dropping one source either keeps an emitted label or withdraws it.
        if (l.coarse) {
            for (int drop = 0; drop < 4; ++drop) {
                EvidenceMask m;
                m.bssid = drop != 0;
                m.hostname = drop != 1;
                m.oui = drop != 2;
                m.extender = drop != 3;
                const auto r = label_device(tl, rules(), m);
                if (r.coarse) CHECK(*r.coarse == *l.coarse);
                if (r.fine) CHECK(r.fine == l.fine);
            }
        }
        CHECK(label_device(tl, rules()).coarse == l.coarse);
    }
}

TEST_CASE("generator first names never trigger a rule", "[labeler]") {
    const auto set = parse_profiles(nlohmann::json::parse(kDefaultProfilesJson));
    for (const auto& name : set.names) {
        INFO(name);
        CHECK_FALSE(label_by_hostname(std::set<std::string>{name}, rules()).has_value());
        std::string lower = name;
        for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        CHECK_FALSE(label_by_hostname(std::set<std::string>{lower}, rules()).has_value());
    }
}

TEST_CASE("label JSON round trip", "[labeler]") {
    const auto l = label_device(device("00:00:48:00:00:01", {"EPSONA1B2C3"}), rules());
    const auto back = label_from_json(to_json(l));
    CHECK(back.mac == l.mac);
    CHECK(back.coarse == l.coarse);
    CHECK(back.fine == l.fine);
    CHECK(back.evidence == l.evidence);
}

TEST_CASE("ruleset parsing is strict", "[labeler]") {
    CHECK_THROWS_AS(parse_ruleset(nlohmann::json::parse(R"({"hostname_patterns":[{"pattern":"(","kind":"regex","label":"NAS"}]})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_ruleset(nlohmann::json::parse(R"({"hostname_patterns":[{"pattern":"x","kind":"regex","label":"Toaster"}]})")),
                    ConfigError);
}

TEST_CASE("embedded ruleset matches the data file", "[labeler]") {
    std::ifstream is(std::string(GWPROF_SOURCE_DIR) + "/data/default_rules.json");
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    CHECK(ss.str() == std::string(kDefaultRulesJson));
}
