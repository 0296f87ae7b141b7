#pragma once

// Starter labeling ruleset. Kept identical to data/default_rules.json (checked by a test).

#include <string_view>

namespace gwprof {

inline constexpr std::string_view kDefaultRulesJson = R"json({
  "extender_hostname_count_threshold": 3,
  "stb_names": ["RM4100"],
  "hostname_patterns": [
    {"id": "tplink-extender", "pattern": "tl-wa[0-9o]+re", "kind": "regex", "label": "WifiExtender"},
    {"id": "linksys-wrt", "pattern": "wrt54g", "kind": "substring", "label": "WifiExtender"},
    {"id": "extender", "pattern": "(repeater|extender|range-?ext)", "kind": "regex", "label": "WifiExtender"},
    {"id": "powerline", "pattern": "(devolo|dlan|powerline)", "kind": "regex", "label": "PowerlineEth"},
    {"id": "ipad", "pattern": "ipad", "kind": "substring", "label": "Tablet", "vendor": "apple"},
    {"id": "iphone", "pattern": "iphone", "kind": "substring", "label": "Smartphone", "vendor": "apple"},
    {"id": "android-tablet", "pattern": "(galaxy-?tab|tablet|nexus-?7|kindle-?fire)", "kind": "regex", "label": "Tablet", "not_vendor": "apple"},
    {"id": "ereader", "pattern": "(kindle|kobo|ereader|nook)", "kind": "regex", "label": "EReader", "not_vendor": "apple"},
    {"id": "android-phone", "pattern": "(galaxy|xperia|nexus-?5|lumia|windows-?phone)", "kind": "regex", "label": "Smartphone", "not_vendor": "apple"},
    {"id": "mac", "pattern": "(macbook|imac|mac-?mini)", "kind": "regex", "label": "LaptopDesktop", "vendor": "apple"},
    {"id": "pc", "pattern": "(laptop|desktop|notebook|thinkpad|workstation|(^|-)pc($|-))", "kind": "regex", "label": "LaptopDesktop"},
    {"id": "console", "pattern": "(xbox|playstation|ps3|ps4|(^|-)wii($|-)|nintendo)", "kind": "regex", "label": "GameConsole"},
    {"id": "printer", "pattern": "(printer|epson|officejet|deskjet|laserjet|(^|-)hp[0-9a-f]{6}$)", "kind": "regex", "label": "PrinterScanner"},
    {"id": "ott", "pattern": "(chromecast|roku|apple-?tv|fire-?tv)", "kind": "regex", "label": "OTTBox"},
    {"id": "smart-tv", "pattern": "(smart-?tv|bravia|webos|(^|-)tv($|-))", "kind": "regex", "label": "SmartTV"},
    {"id": "nas", "pattern": "(diskstation|synology|qnap|(^|-)nas($|-))", "kind": "regex", "label": "NAS"},
    {"id": "media-bridge", "pattern": "(media-?bridge|wet610n)", "kind": "regex", "label": "MediaBridge"},
    {"id": "android", "pattern": "android", "kind": "substring", "label": "MobileHandheld", "not_vendor": "apple"},
    {"id": "mobile", "pattern": "(phone|mobile)", "kind": "regex", "label": "MobileHandheld"}
  ],
  "ssid_patterns": [
    {"id": "tplink-ssid", "pattern": "tl-wa[0-9o]+re", "kind": "regex", "label": "WifiExtender"},
    {"id": "ext-ssid", "pattern": "_ext$", "kind": "regex", "label": "WifiExtender"},
    {"id": "epson-direct", "pattern": "direct-.*epson", "kind": "regex", "label": "PrinterScanner"},
    {"id": "hp-direct", "pattern": "direct-.*hp", "kind": "regex", "label": "PrinterScanner"},
    {"id": "bridge-ssid", "pattern": "wet610n", "kind": "substring", "label": "MediaBridge"}
  ],
  "oui_map": {
    "00:00:48": "PrinterScanner",
    "64:eb:8c": "PrinterScanner",
    "b0:a7:37": "OTTBox",
    "dc:3a:5e": "OTTBox",
    "00:0b:3b": "PowerlineEth",
    "fc:0f:e6": "GameConsole"
  },
  "oui_vendors": {
    "f0:db:f8": "apple",
    "ac:bc:32": "apple",
    "28:cf:e9": "apple",
    "a4:5e:60": "apple",
    "3c:15:c2": "apple",
    "78:31:c1": "apple",
    "5c:0a:5b": "samsung",
    "c0:bd:d1": "samsung",
    "38:aa:3c": "samsung",
    "00:e0:fc": "huawei",
    "28:6e:d4": "huawei",
    "30:39:26": "sony",
    "fc:0f:e6": "sony",
    "74:75:48": "amazon",
    "f0:27:2d": "amazon"
  }
}
)json";

}  // namespace gwprof
