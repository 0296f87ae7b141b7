#pragma once

// Default generator profiles. Kept identical to data/default_profiles.json (checked by a test).

#include <string_view>

namespace gwprof {

inline constexpr std::string_view kDefaultProfilesJson = R"json({
  "schema_version": 1,
  "corpus": {
    "homes": 240,
    "days": 90,
    "seed": 7,
    "devices_per_home": {"base": 2, "poisson_mean": 6},
    "epoch": 1383264000,
    "max_ticks_per_session": 4,
    "tick_s": 60,
    "max_tick_s": 840
  },
  "names": ["Anna", "Ben", "Chloe", "David", "Emma", "Finn", "Grace", "Harry", "Isla", "Jack", "Lucy", "Mia",
            "Noah", "Olivia", "Ruby", "Sam", "Tom", "Zoe", "Leo", "Ella", "Kate", "Luke", "Amy", "Dan", "Eve",
            "Joe", "Rosa", "Iris", "Owen", "Paul", "Sara", "Theo", "Yara", "Ivy", "Adam", "Beth", "Carl", "Dora"],
  "profiles": [
    {
      "name": "Smartphone", "fine_class": "Smartphone", "weight": 0.26,
      "sessions_per_day": 3.5, "session_len_s": {"median": 420, "sigma": 0.7},
      "tx_bytes_per_s": {"median": 2500, "sigma": 0.7}, "rx_bytes_per_s": {"median": 15000, "sigma": 0.8},
      "rssi_base": {"mean": -58, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 3.5,
      "n_locations": [2, 4], "location_spread_db": 7, "location_stickiness": 0.3,
      "active_day_prob": [0.85, 1.0],
      "hostnames": [
        {"template": "{Name}s-iPhone", "weight": 5, "ouis": ["f0:db:f8", "ac:bc:32", "28:cf:e9"]},
        {"template": "Galaxy-S4-{hex4}", "weight": 3, "ouis": ["5c:0a:5b", "c0:bd:d1"]},
        {"template": "{Name}s-Xperia", "weight": 1, "ouis": ["30:39:26"]},
        {"template": "Lumia-{HEX4}", "weight": 0.5, "ouis": ["28:18:78"]},
        {"template": "android-{hex16}", "weight": 2, "ouis": ["00:e0:fc", "28:6e:d4", "c0:bd:d1"]},
        {"template": "{Name}-phone", "weight": 0.5, "ouis": ["00:e0:fc"]}
      ]
    },
    {
      "name": "Tablet", "fine_class": "Tablet", "weight": 0.12,
      "sessions_per_day": 2, "session_len_s": {"median": 1500, "sigma": 0.6},
      "tx_bytes_per_s": {"median": 1500, "sigma": 0.7}, "rx_bytes_per_s": {"median": 40000, "sigma": 0.8},
      "rssi_base": {"mean": -60, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 1.6,
      "n_locations": [2, 3], "location_spread_db": 4, "location_stickiness": 0.7,
      "active_day_prob": [0.5, 0.9],
      "hostnames": [
        {"template": "{Name}s-iPad", "weight": 5, "ouis": ["a4:5e:60", "28:cf:e9"]},
        {"template": "Galaxy-Tab-{hex4}", "weight": 2, "ouis": ["38:aa:3c"]},
        {"template": "Nexus-7-{hex4}", "weight": 1, "ouis": ["10:bf:48"]},
        {"template": "kindle-fire-{hex4}", "weight": 1, "ouis": ["f0:27:2d"]}
      ]
    },
    {
      "name": "EReader", "fine_class": "EReader", "weight": 0.03,
      "sessions_per_day": 1, "session_len_s": {"median": 600, "sigma": 0.6},
      "tx_bytes_per_s": {"median": 80, "sigma": 0.6}, "rx_bytes_per_s": {"median": 1500, "sigma": 0.7},
      "rssi_base": {"mean": -62, "sd": 5}, "rssi_noise_sd": 1.5, "mobility_sd": 1.2,
      "n_locations": [1, 2], "location_spread_db": 3,
      "active_day_prob": [0.3, 0.7],
      "hostnames": [
        {"template": "Kindle-{hex6}", "weight": 3, "ouis": ["74:75:48"]},
        {"template": "kobo-{hex4}", "weight": 1, "ouis": ["94:a1:a2"]}
      ]
    },
    {
      "name": "LaptopDesktop", "fine_class": "LaptopDesktop", "weight": 0.17,
      "sessions_per_day": 2.5, "session_len_s": {"median": 4000, "sigma": 0.8},
      "tx_bytes_per_s": {"median": 12000, "sigma": 0.8}, "rx_bytes_per_s": {"median": 50000, "sigma": 0.8},
      "rssi_base": {"mean": -55, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 0.25,
      "n_locations": [1, 3], "location_spread_db": 4, "location_stickiness": 0.7,
      "active_day_prob": [0.6, 0.95],
      "hostnames": [
        {"template": "{Name}s-MacBook-Pro", "weight": 4, "ouis": ["3c:15:c2", "78:31:c1"]},
        {"template": "DESKTOP-{HEX7}", "weight": 2, "ouis": ["00:1b:21", "3c:a9:f4"]},
        {"template": "{Name}-ThinkPad", "weight": 1, "ouis": ["60:d9:a0"]},
        {"template": "{Name}-laptop", "weight": 2, "ouis": ["f8:bc:12", "3c:a9:f4"]}
      ]
    },
    {
      "name": "WifiExtender", "fine_class": "WifiExtender", "weight": 0.05,
      "rssi_base": {"mean": -66, "sd": 5}, "rssi_noise_sd": 1.5, "mobility_sd": 0,
      "active_day_prob": [0.9, 1.0],
      "hostnames": [
        {"template": "TL-WA850RE", "weight": 2, "ouis": ["f8:1a:67", "c0:4a:00"]},
        {"template": "Netgear-Extender-{hex4}", "weight": 1, "ouis": ["a0:40:a0", "20:4e:7f"]}
      ],
      "extender": {"children": [3, 5], "child_profiles": ["Smartphone", "Tablet", "LaptopDesktop"],
                   "bssid_prob": 0.5, "own_hostname_prob": 0.5}
    },
    {
      "name": "GameConsole", "fine_class": "GameConsole", "weight": 0.05,
      "sessions_per_day": 1, "session_len_s": {"median": 5400, "sigma": 0.6},
      "tx_bytes_per_s": {"median": 10000, "sigma": 0.7}, "rx_bytes_per_s": {"median": 60000, "sigma": 0.8},
      "rssi_base": {"mean": -62, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 0,
      "active_day_prob": [0.3, 0.7],
      "hostnames": [
        {"template": "XboxOne-{hex4}", "weight": 2, "ouis": ["7c:ed:8d"]},
        {"template": "PS4-{hex4}", "weight": 2, "ouis": ["fc:0f:e6"]},
        {"template": "nintendo-{hex4}", "weight": 1, "ouis": ["00:1f:32"]}
      ]
    },
    {
      "name": "OTTBox", "fine_class": "OTTBox", "weight": 0.05,
      "sessions_per_day": 1.5, "session_len_s": {"median": 7200, "sigma": 0.5},
      "tx_bytes_per_s": {"median": 800, "sigma": 0.6}, "rx_bytes_per_s": {"median": 250000, "sigma": 0.6},
      "rssi_base": {"mean": -64, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 0,
      "active_day_prob": [0.5, 0.9],
      "hostnames": [
        {"template": "Roku-{hex6}", "weight": 2, "ouis": ["b0:a7:37", "dc:3a:5e"]},
        {"template": "Chromecast-{hex4}", "weight": 2, "ouis": ["6c:ad:f8"]},
        {"template": "Apple-TV-{Name}", "weight": 1, "ouis": ["f0:db:f8"]},
        {"template": "Fire-TV-{hex4}", "weight": 1, "ouis": ["f0:27:2d"]}
      ]
    },
    {
      "name": "SmartTV", "fine_class": "SmartTV", "weight": 0.04,
      "sessions_per_day": 1.5, "session_len_s": {"median": 9000, "sigma": 0.5},
      "tx_bytes_per_s": {"median": 900, "sigma": 0.6}, "rx_bytes_per_s": {"median": 200000, "sigma": 0.6},
      "rssi_base": {"mean": -64, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 0,
      "active_day_prob": [0.6, 0.95],
      "hostnames": [
        {"template": "Samsung-Smart-TV", "weight": 2, "ouis": ["8c:77:12"]},
        {"template": "LG-webOS-TV-{hex4}", "weight": 1, "ouis": ["a8:23:fe"]},
        {"template": "BRAVIA-{HEX4}", "weight": 1, "ouis": ["30:39:26"]}
      ]
    },
    {
      "name": "PrinterScanner", "fine_class": "PrinterScanner", "weight": 0.05,
      "sessions_per_day": 1, "session_len_s": {"median": 120, "sigma": 0.5},
      "tx_bytes_per_s": {"median": 300, "sigma": 0.6}, "rx_bytes_per_s": {"median": 3000, "sigma": 0.7},
      "rssi_base": {"mean": -60, "sd": 6}, "rssi_noise_sd": 1.5, "mobility_sd": 0,
      "active_day_prob": [0.2, 0.5],
      "hostnames": [
        {"template": "EPSON{HEX6}", "weight": 2, "ouis": ["64:eb:8c", "00:00:48"]},
        {"template": "HP{hex6}", "weight": 2, "ouis": ["3c:d9:2b"]},
        {"template": "Canon-printer-{hex4}", "weight": 1, "ouis": ["00:1e:8f"]}
      ]
    },
    {
      "name": "STB", "fine_class": "STB", "weight": 0.06, "counter_width": 16,
      "sessions_per_day": 2, "session_len_s": {"median": 10800, "sigma": 0.5},
      "tx_bytes_per_s": {"median": 1000, "sigma": 0.5}, "rx_bytes_per_s": {"median": 300000, "sigma": 0.5},
      "rssi_base": {"mean": -62, "sd": 5}, "rssi_noise_sd": 1.5, "mobility_sd": 0,
      "active_day_prob": [0.7, 0.95],
      "hostnames": [{"template": "RM4100", "weight": 1, "ouis": ["00:1e:46"]}]
    },
    {
      "name": "NAS", "fine_class": "NAS", "weight": 0.02, "iface": "wired", "counter_width": 16,
      "sessions_per_day": 4, "session_len_s": {"median": 3600, "sigma": 0.7},
      "tx_bytes_per_s": {"median": 50000, "sigma": 0.7}, "rx_bytes_per_s": {"median": 20000, "sigma": 0.7},
      "active_day_prob": [0.9, 1.0],
      "hostnames": [{"template": "DiskStation-{hex4}", "weight": 1, "ouis": ["00:11:32"]}]
    },
    {
      "name": "WiredDesktop", "fine_class": "LaptopDesktop", "weight": 0.03, "iface": "wired", "counter_width": 16,
      "sessions_per_day": 2, "session_len_s": {"median": 5400, "sigma": 0.7},
      "tx_bytes_per_s": {"median": 15000, "sigma": 0.8}, "rx_bytes_per_s": {"median": 60000, "sigma": 0.8},
      "active_day_prob": [0.6, 0.9],
      "hostnames": [{"template": "DESKTOP-{HEX7}", "weight": 1, "ouis": ["00:1b:21", "3c:a9:f4"]}]
    },
    {
      "name": "Guest", "weight": 0.10,
      "guest": {"active_days": [1, 3], "label_profiles": ["Smartphone", "Tablet", "LaptopDesktop"]}
    }
  ]
}
)json";

}  // namespace gwprof
