#pragma once

// On-disk formats: binary timelines, feature CSVs, label and report JSON.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/array.hpp>
#include <cereal/types/set.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/utility.hpp>
#include <cereal/types/vector.hpp>
#include <nlohmann/json.hpp>

#include "gwprof/analysis.hpp"
#include "gwprof/error.hpp"
#include "gwprof/features.hpp"
#include "gwprof/labeler.hpp"
#include "gwprof/telemetry.hpp"

namespace gwprof {

template <class Archive>
void serialize(Archive& ar, MacAddress& m) {
    ar(m.octets);
}

template <class Archive>
void serialize(Archive& ar, HostDescriptor& d) {
    ar(d.mac, d.hostnames, d.interface, d.advertised_bssids);
}

template <class Archive>
void serialize(Archive& ar, CounterSample& s) {
    ar(s.timestamp, s.tx_cum, s.rx_cum, s.width);
}

template <class Archive>
void serialize(Archive& ar, RateSample& s) {
    ar(s.timestamp, s.tx_kbps, s.rx_kbps);
}

template <class Archive>
void serialize(Archive& ar, RssiSample& s) {
    ar(s.timestamp, s.rssi);
}

template <class Archive>
void serialize(Archive& ar, HostnameSighting& s) {
    ar(s.timestamp, s.hostname);
}

template <class Archive>
void serialize(Archive& ar, DeviceTimeline& t) {
    ar(t.descriptor, t.counters, t.rates, t.rssi, t.sightings, t.unreliable_counters);
}

inline constexpr std::uint32_t kTimelineFormat = 1;

inline void write_timelines(const std::filesystem::path& path, const std::vector<DeviceTimeline>& timelines) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    {
        cereal::PortableBinaryOutputArchive ar(os);
        ar(kTimelineFormat, timelines);
    }
    if (!os) throw IoError("write failed for " + path.string());
}

inline std::vector<DeviceTimeline> read_timelines(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::uint32_t format = 0;
    std::vector<DeviceTimeline> out;
    try {
        cereal::PortableBinaryInputArchive ar(is);
        ar(format);
        if (format != kTimelineFormat) throw IoError(path.string() + ": unsupported timeline format");
        ar(out);
    } catch (const cereal::Exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return out;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

struct FeatureRows {
    std::vector<std::string> macs;
    FeatureTable table;
};

inline void write_csv(const std::filesystem::path& path, const FeatureRows& rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << "mac";
    for (const auto& n : rows.table.names) os << ',' << n;
    os << '\n';
    for (std::size_t r = 0; r < rows.macs.size(); ++r) {
        os << rows.macs[r];
        for (double v : rows.table.values.row(r)) os << ',' << format_double(v);
        os << '\n';
    }
    if (!os) throw IoError("write failed for " + path.string());
}

inline FeatureRows read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    FeatureRows out;
    std::string line;
    std::size_t line_no = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line);
    if (header.empty() || header.front() != "mac") throw IoError(path.string() + ": header must start with 'mac'");
    out.table.names.assign(header.begin() + 1, header.end());
    std::vector<double> row(out.table.names.size());
    out.table.values = Matrix(0, out.table.names.size());
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size()) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                          " cells, got " + std::to_string(cells.size()));
        }
        out.macs.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto& cell = cells[c];
            double v = 0;
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || p != cell.data() + cell.size()) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            row[c - 1] = v;
        }
        out.table.values.append_row(row);
    }
    return out;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed for " + path.string());
}

inline nlohmann::json labels_to_json(const std::vector<GroundTruthLabel>& labels) {
    auto arr = nlohmann::json::array();
    for (const auto& l : labels) arr.push_back(to_json(l));
    return {{"schema_version", 1}, {"labels", arr}};
}

inline std::map<std::string, GroundTruthLabel> labels_from_json(const nlohmann::json& j) {
    std::map<std::string, GroundTruthLabel> out;
    try {
        for (const auto& l : j.at("labels")) {
            auto g = label_from_json(l);
            out.emplace(g.mac.to_string(), std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("labels: ") + e.what());
    }
    return out;
}

}  // namespace gwprof
