#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gwprof/default_profiles.hpp"
#include "gwprof/features.hpp"
#include "gwprof/ingest.hpp"
#include "gwprof/synthgen.hpp"

using namespace gwprof;
namespace fs = std::filesystem;

namespace {

const ProfileSet& defaults() {
    static const ProfileSet set = parse_profiles(nlohmann::json::parse(kDefaultProfilesJson));
    return set;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string trace_of(const DeviceTimeline& tl) {
    std::string s;
    write_trace_records(tl, s);
    return s;
}

ClassProfile still_laptop() {
    ClassProfile p = defaults().by_name("LaptopDesktop");
    p.mobility_sd = 0;
    p.rssi_noise_sd = 0;
    p.locations_min = p.locations_max = 1;
    p.location_spread_db = 0;
    return p;
}

}  // namespace

TEST_CASE("embedded profiles match the data file", "[synthgen]") {
    const auto file = slurp(fs::path(GWPROF_SOURCE_DIR) / "data" / "default_profiles.json");
    REQUIRE_FALSE(file.empty());
    CHECK(file == std::string(kDefaultProfilesJson));
}

TEST_CASE("default profiles cover every coarse class", "[synthgen]") {
    std::set<CoarseClass> coarse;
    std::set<FineClass> fine;
    for (const auto& p : defaults().profiles) {
        if (p.fine_class) {
            coarse.insert(coarse_of(*p.fine_class));
            fine.insert(*p.fine_class);
        }
    }
    CHECK(coarse.size() == kAllCoarse.size());
    CHECK(fine.size() >= 6);
}

TEST_CASE("generate_device is a pure function of its seed", "[synthgen]") {
    const auto& p = defaults().by_name("Smartphone");
    const auto a = generate_device(p, 14, 99);
    const auto b = generate_device(p, 14, 99);
    const auto c = generate_device(p, 14, 100);
    CHECK(trace_of(a.timeline) == trace_of(b.timeline));
    CHECK(trace_of(a.timeline) != trace_of(c.timeline));
    CHECK(a.fine == FineClass::Smartphone);
    CHECK_THROWS_AS(generate_device(p, 0, 1), ConfigError);
}

TEST_CASE("a motionless device has zero allan deviation", "[synthgen]") {
    const auto g = generate_device(still_laptop(), 10, 5);
    REQUIRE(g.timeline.rssi.size() >= 2);
    const auto fv = extract_features(g.timeline);
    CHECK(fv["rssi_ad"] == 0.0);
    CHECK(fv["rssi_num_locations"] == 1);
}

TEST_CASE("mobility raises allan deviation", "[synthgen]") {
    ClassProfile moving = still_laptop();
    moving.mobility_sd = 3;
    const auto fv = extract_features(generate_device(moving, 10, 5).timeline);
    CHECK(fv["rssi_ad"] > 1.0);
}

TEST_CASE("always-active devices are active every day", "[synthgen]") {
    ClassProfile p = still_laptop();
    p.active_min = p.active_max = 1.0;
    const auto g = generate_device(p, 30, 8);
    CHECK(active_days(timeline_deltas(g.timeline)) == 30);

    p.active_min = p.active_max = 0.5;
    const auto half = generate_device(p, 30, 8);
    const auto d = active_days(timeline_deltas(half.timeline));
    CHECK(d >= 5);
    CHECK(d <= 25);
}

TEST_CASE("device suffixes never collide", "[synthgen]") {
    std::set<std::uint32_t> seen;
    for (int home = 0; home < 2000; ++home) {
        for (int i = 0; i < 64; ++i) {
            const auto s = device_suffix(home, i);
            CHECK(s <= 0xffffffu);
            seen.insert(s);
        }
    }
    CHECK(seen.size() == 2000u * 64u);
}

TEST_CASE("small corpus is deterministic and spans the taxonomy", "[synthgen]") {
    CorpusConfig cc = defaults().corpus;
    cc.homes = 24;
    cc.days = 6;
    cc.seed = 3;
    const auto base = fs::temp_directory_path() / "gwprof_synth_test";
    fs::remove_all(base);
    const auto s1 = generate_corpus(defaults(), cc, base / "a", 1);
    const auto s2 = generate_corpus(defaults(), cc, base / "b", 2);
    CHECK(s1.devices == s2.devices);
    CHECK(slurp(base / "a" / "trace.jsonl") == slurp(base / "b" / "trace.jsonl"));
    CHECK(slurp(base / "a" / "truth.json") == slurp(base / "b" / "truth.json"));

    const auto truth = nlohmann::json::parse(slurp(base / "a" / "truth.json"));
    std::set<std::string> coarse, macs;
    for (const auto& d : truth["devices"]) {
        coarse.insert(d["coarse"].get<std::string>());
        macs.insert(d["mac"].get<std::string>());
    }
    CHECK(coarse.size() == 4);
    CHECK(macs.size() == truth["devices"].size());

    // Every device in the trace is in the truth file. Devices idle for the
    // whole window leave no records at all.
    std::ifstream in(base / "a" / "trace.jsonl");
    const auto tls = parse_trace(in);
    CHECK(tls.size() <= s1.devices);
    CHECK(tls.size() * 10 >= s1.devices * 9);
    for (const auto& tl : tls) CHECK(macs.contains(tl.descriptor.mac.to_string()));

    cc.seed = 4;
    generate_corpus(defaults(), cc, base / "c", 1);
    CHECK(slurp(base / "a" / "trace.jsonl") != slurp(base / "c" / "trace.jsonl"));
    fs::remove_all(base);
}

TEST_CASE("corpus configuration is validated", "[synthgen]") {
    CorpusConfig cc;
    cc.homes = 0;
    CHECK_THROWS_AS(generate_corpus(defaults(), cc, fs::temp_directory_path() / "gwprof_never"), ConfigError);
    CHECK_THROWS_AS(defaults().by_name("Toaster"), ConfigError);
}

TEST_CASE("class behaviour orderings hold on medians", "[synthgen][slow]") {
    DeviceContext ctx;
    ctx.profiles = &defaults();
    ctx.names = defaults().names;
    auto medians = [&](const std::vector<std::string>& profiles, std::string_view feature) {
        std::vector<double> v;
        std::uint64_t seed = 1000;
        for (const auto& name : profiles) {
            for (int i = 0; i < 120; ++i) {
                const auto g = generate_device(defaults().by_name(name), 21, ++seed, ctx);
                try {
                    const auto fv = extract_features(g.timeline);
                    if (feature == "volume") v.push_back(fv["tx_p50"] + fv["rx_p50"]);
                    else v.push_back(fv[feature]);
                } catch (const InsufficientData&) {
                }
            }
        }
        REQUIRE(v.size() >= 100);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const std::vector<std::string> handheld{"Smartphone", "Tablet", "EReader"};
    const std::vector<std::string> compute{"LaptopDesktop"};
    const std::vector<std::string> extender{"WifiExtender"};
    const std::vector<std::string> ott{"OTTBox"};
    const std::vector<std::string> others{"GameConsole", "SmartTV", "PrinterScanner"};

    const double hh_volume = medians(handheld, "volume");
    CHECK(medians(compute, "volume") > hh_volume);
    CHECK(medians(extender, "volume") > hh_volume);

    const double hh_session = medians(handheld, "session_l_p50");
    CHECK(hh_session < medians(compute, "session_l_p50"));
    CHECK(hh_session < medians(ott, "session_l_p50"));

    const double hh_diameter = medians(handheld, "rssi_diameter");
    for (const auto& group : {compute, extender, ott, others}) CHECK(hh_diameter > medians(group, "rssi_diameter"));
}
