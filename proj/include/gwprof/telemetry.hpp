#pragma once

// Domain types shared by every pipeline stage. Value types only; no I/O.

#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gwprof/error.hpp"

namespace gwprof {

using Timestamp = std::int64_t;  // seconds since the Unix epoch, UTC

inline constexpr Timestamp kSecondsPerDay = 86400;

/// UTC calendar day index of a timestamp.
constexpr std::int64_t utc_day(Timestamp ts) noexcept {
    return ts >= 0 ? ts / kSecondsPerDay : (ts - kSecondsPerDay + 1) / kSecondsPerDay;
}

namespace detail {

inline int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

template <std::size_t N>
std::string render_octets(const std::array<std::uint8_t, N>& octets) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(N * 3);
    for (std::size_t i = 0; i < N; ++i) {
        if (i) out.push_back(':');
        out.push_back(kHex[octets[i] >> 4]);
        out.push_back(kHex[octets[i] & 0xf]);
    }
    return out;
}

template <std::size_t N>
std::array<std::uint8_t, N> parse_octets(std::string_view text, std::string_view what) {
    // Exactly N two-digit groups separated by ':' or '-'.
    std::array<std::uint8_t, N> out{};
    if (text.size() != N * 3 - 1) {
        throw MalformedMac(std::string(what) + " has wrong length: '" + std::string(text) + "'");
    }
    for (std::size_t i = 0; i < N; ++i) {
        const int hi = hex_value(text[i * 3]);
        const int lo = hex_value(text[i * 3 + 1]);
        if (hi < 0 || lo < 0) {
            throw MalformedMac(std::string(what) + " has invalid hex: '" + std::string(text) + "'");
        }
        if (i + 1 < N) {
            const char sep = text[i * 3 + 2];
            if (sep != ':' && sep != '-') {
                throw MalformedMac(std::string(what) + " has invalid separator: '" +
                                   std::string(text) + "'");
            }
        }
        out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return out;
}

}  // namespace detail

/// Organizationally unique identifier: the vendor prefix of a MAC address.
struct Oui {
    std::array<std::uint8_t, 3> prefix{};

    std::string to_string() const { return detail::render_octets(prefix); }
    auto operator<=>(const Oui&) const = default;
};

inline Oui parse_oui(std::string_view text) { return Oui{detail::parse_octets<3>(text, "OUI")}; }

struct MacAddress {
    std::array<std::uint8_t, 6> octets{};

    std::string to_string() const { return detail::render_octets(octets); }
    Oui oui() const noexcept { return Oui{{octets[0], octets[1], octets[2]}}; }

    /// The address whose 48-bit value differs by `delta` (wraps modulo 2^48).
    MacAddress offset(std::int64_t delta) const noexcept {
        std::uint64_t v = 0;
        for (auto o : octets) v = (v << 8) | o;
        v = (v + static_cast<std::uint64_t>(delta)) & 0xffffffffffffULL;
        MacAddress out;
        for (int i = 5; i >= 0; --i) {
            out.octets[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
            v >>= 8;
        }
        return out;
    }

    auto operator<=>(const MacAddress&) const = default;
};

/// Accepts six colon- or dash-separated hex octets in any case.
inline MacAddress parse_mac(std::string_view text) {
    return MacAddress{detail::parse_octets<6>(text, "MAC address")};
}

enum class Interface : std::uint8_t { Wired, WiFi };

struct HostDescriptor {
    MacAddress mac;
    std::set<std::string> hostnames;
    Interface interface = Interface::WiFi;
    /// (ssid, bssid) pairs the device has advertised.
    std::set<std::pair<std::string, MacAddress>> advertised_bssids;
};

enum class CounterWidth : std::uint8_t { W16 = 16, W32 = 32 };

struct CounterSample {
    Timestamp timestamp = 0;
    std::uint64_t tx_cum = 0;
    std::uint64_t rx_cum = 0;
    CounterWidth width = CounterWidth::W32;
};

/// Gateway-reported throughput; integer kbps, zero encodes "below 1 kbps".
struct RateSample {
    Timestamp timestamp = 0;
    std::uint32_t tx_kbps = 0;
    std::uint32_t rx_kbps = 0;
};

/// RSSI exactly as reported by the gateway; no unit or sign convention is assumed.
struct RssiSample {
    Timestamp timestamp = 0;
    std::int32_t rssi = 0;
};

/// A descriptor report naming the device; kept with its time so that names can
/// be attributed to activity sessions (extender detection).
struct HostnameSighting {
    Timestamp timestamp = 0;
    std::string hostname;
};

struct DeviceTimeline {
    HostDescriptor descriptor;
    std::vector<CounterSample> counters;
    std::vector<RateSample> rates;
    std::vector<RssiSample> rssi;
    std::vector<HostnameSighting> sightings;
    /// Set when the device reports 16-bit counters, which wrap too quickly to trust.
    bool unreliable_counters = false;
};

enum class CoarseClass : std::uint8_t { Compute, MobileHandheld, NetworkEquipment, ConsumerElectronics };

enum class FineClass : std::uint8_t {
    LaptopDesktop,
    Smartphone,
    Tablet,
    EReader,
    PowerlineEth,
    WifiExtender,
    SmartTV,
    NAS,
    GameConsole,
    MediaBridge,
    OTTBox,
    PrinterScanner,
    STB,
};

inline constexpr std::array<CoarseClass, 4> kAllCoarse{
    CoarseClass::Compute, CoarseClass::MobileHandheld, CoarseClass::NetworkEquipment,
    CoarseClass::ConsumerElectronics};

inline constexpr std::array<FineClass, 13> kAllFine{
    FineClass::LaptopDesktop, FineClass::Smartphone,  FineClass::Tablet,       FineClass::EReader,
    FineClass::PowerlineEth,  FineClass::WifiExtender, FineClass::SmartTV,     FineClass::NAS,
    FineClass::GameConsole,   FineClass::MediaBridge,  FineClass::OTTBox,      FineClass::PrinterScanner,
    FineClass::STB};

constexpr CoarseClass coarse_of(FineClass fine) noexcept {
    switch (fine) {
        case FineClass::LaptopDesktop:
            return CoarseClass::Compute;
        case FineClass::Smartphone:
        case FineClass::Tablet:
        case FineClass::EReader:
            return CoarseClass::MobileHandheld;
        case FineClass::PowerlineEth:
        case FineClass::WifiExtender:
            return CoarseClass::NetworkEquipment;
        case FineClass::SmartTV:
        case FineClass::NAS:
        case FineClass::GameConsole:
        case FineClass::MediaBridge:
        case FineClass::OTTBox:
        case FineClass::PrinterScanner:
        case FineClass::STB:
            return CoarseClass::ConsumerElectronics;
    }
    return CoarseClass::ConsumerElectronics;
}

constexpr std::string_view to_string(CoarseClass c) noexcept {
    switch (c) {
        case CoarseClass::Compute: return "Compute";
        case CoarseClass::MobileHandheld: return "MobileHandheld";
        case CoarseClass::NetworkEquipment: return "NetworkEquipment";
        case CoarseClass::ConsumerElectronics: return "ConsumerElectronics";
    }
    return "?";
}

constexpr std::string_view to_string(FineClass f) noexcept {
    switch (f) {
        case FineClass::LaptopDesktop: return "LaptopDesktop";
        case FineClass::Smartphone: return "Smartphone";
        case FineClass::Tablet: return "Tablet";
        case FineClass::EReader: return "EReader";
        case FineClass::PowerlineEth: return "PowerlineEth";
        case FineClass::WifiExtender: return "WifiExtender";
        case FineClass::SmartTV: return "SmartTV";
        case FineClass::NAS: return "NAS";
        case FineClass::GameConsole: return "GameConsole";
        case FineClass::MediaBridge: return "MediaBridge";
        case FineClass::OTTBox: return "OTTBox";
        case FineClass::PrinterScanner: return "PrinterScanner";
        case FineClass::STB: return "STB";
    }
    return "?";
}

inline std::optional<CoarseClass> coarse_from_string(std::string_view s) noexcept {
    for (auto c : kAllCoarse) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

inline std::optional<FineClass> fine_from_string(std::string_view s) noexcept {
    for (auto f : kAllFine) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

}  // namespace gwprof
