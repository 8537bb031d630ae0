#pragma once

// Minimal INI-style reader/writer: [section] headers, key = value lines,
// '#' or ';' comments. Used for experiment config files and detector bundle
// manifests.

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gsmdet/common.hpp"

namespace gsmdet {

using KvSection = std::map<std::string, std::string>;
using KvFile = std::map<std::string, KvSection>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline KvFile parse_kv(std::istream& is) {
  KvFile out;
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = detail::trim(t.substr(1, t.size() - 2));
      out[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    out[section][detail::trim(t.substr(0, eq))] = detail::trim(t.substr(eq + 1));
  }
  return out;
}

inline KvFile parse_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open " + path);
  try {
    return parse_kv(is);
  } catch (const config_error& e) {
    throw config_error(path + ": " + e.what());
  }
}

inline void write_kv(const KvFile& kv, std::ostream& os) {
  bool first = true;
  for (const auto& [section, entries] : kv) {
    if (!first) os << "\n";
    first = false;
    os << "[" << section << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
  }
}

inline void write_kv_file(const KvFile& kv, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot write " + path);
  write_kv(kv, os);
}

inline const std::string& kv_get(const KvFile& kv, const std::string& section,
                                 const std::string& key) {
  const auto s = kv.find(section);
  if (s == kv.end()) throw config_error("missing section [" + section + "]");
  const auto k = s->second.find(key);
  if (k == s->second.end())
    throw config_error("missing key '" + key + "' in section [" + section + "]");
  return k->second;
}

inline std::string kv_get_or(const KvFile& kv, const std::string& section,
                             const std::string& key, const std::string& fallback) {
  const auto s = kv.find(section);
  if (s == kv.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

}  // namespace gsmdet
