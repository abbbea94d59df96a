// Licensed under the Apache License 2.0 (see LICENSE file).
#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "raster.hpp"

namespace ksr {

static std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::config, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw Error(ErrorCode::config, where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::config, where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::config, where + "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full))
      throw Error(ErrorCode::config, where + "duplicate key '" + full + "' (first set on line " +
                                         std::to_string(cfg.entries_[full].line) + ")");
    cfg.entries_[full] = Entry{trim(line.substr(eq + 1)), lineno};
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  auto& e = entries_[key];
  e.value = value;
}

void Config::fail(const std::string& key, const std::string& msg) const {
  auto it = entries_.find(key);
  const int line = it == entries_.end() ? 0 : it->second.line;
  std::string where = origin_;
  if (line > 0) where += ":" + std::to_string(line);
  throw Error(ErrorCode::config, where + ": " + key + ": " + msg);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second.value;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return parse_double(it->second.value);
  } catch (const Error&) {
    fail(key, "expected a number, got '" + it->second.value + "'");
  }
}

long Config::get_int(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second.value;
  long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(key, "expected an integer, got '" + v + "'");
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = it->second.value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(key, "expected a boolean, got '" + it->second.value + "'");
}

std::vector<std::string> Config::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::string> out;
  std::stringstream ss(it->second.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void Config::require_known(const std::string& section, const std::set<std::string>& allowed) const {
  const std::string prefix = section.empty() ? "" : section + ".";
  for (const auto& [key, entry] : entries_) {
    if (key.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string local = key.substr(prefix.size());
    if (section.empty() && local.find('.') != std::string::npos) continue;
    if (!allowed.count(local)) fail(key, "unknown key");
  }
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    const auto dot = key.find('.');
    const std::string s = dot == std::string::npos ? "" : key.substr(0, dot);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

}  // namespace ksr
