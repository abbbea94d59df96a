// Licensed under the Apache License 2.0 (see LICENSE file).
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ksr {

// Flat "key = value" text with [section] headers; '#' and ';' start comments.
// Keys are addressed as "section.key"; keys before any header live in section "".
class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

  // Rejects any key in `section` outside `allowed`, naming its line.
  void require_known(const std::string& section, const std::set<std::string>& allowed) const;
  std::vector<std::string> sections() const;
  const std::string& origin() const { return origin_; }
  // Throws a config error located at the line that set `key`.
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

}  // namespace ksr
