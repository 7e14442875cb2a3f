#ifndef FUNNEL_EXPERIMENTS_CONFIG_HPP
#define FUNNEL_EXPERIMENTS_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "funnel/core/error.hpp"

namespace funnel::experiments {

/// Flat key-value configuration grouped into sections:
///
///   # comment            (also ';')
///   [section]
///   key = value          (value runs to the end of the line, trimmed)
///
/// Keys before the first section header belong to section "general".
/// Section and key names are [A-Za-z0-9_.-]+. Repeating a key within one
/// source is an error; `set` overwrites, which is how flags override files.
class Config {
 public:
  using Section = std::map<std::string, std::string>;

  static Config parse(std::string_view text, const std::string& source = "<string>") {
    Config cfg;
    std::string section = "general";
    std::map<std::string, int> seen_line;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string buf; std::getline(in, buf);) {
      ++line_no;
      const std::string line(trim(buf));
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      const std::string where = source + ":" + std::to_string(line_no) + ": ";
      if (line.front() == '[') {
        if (line.back() != ']') fail(ErrorKind::config, where + "unterminated section header");
        section = std::string(trim(std::string_view(line).substr(1, line.size() - 2)));
        if (!valid_name(section)) fail(ErrorKind::config, where + "bad section name '" + section + "'");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorKind::config, where + "expected key = value");
      const std::string key(trim(std::string_view(line).substr(0, eq)));
      const std::string value(trim(std::string_view(line).substr(eq + 1)));
      if (!valid_name(key)) fail(ErrorKind::config, where + "bad key '" + key + "'");
      const std::string full = section + "." + key;
      if (auto it = seen_line.find(full); it != seen_line.end()) {
        fail(ErrorKind::config, where + "duplicate key '" + full + "' (first on line " +
                                    std::to_string(it->second) + ")");
      }
      seen_line[full] = line_no;
      cfg.data_[section][key] = value;
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::config, "cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  /// Later values win. Used to layer defaults, file and flags.
  void merge(const Config& other) {
    for (const auto& [s, kv] : other.data_)
      for (const auto& [k, v] : kv) data_[s][k] = v;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = value;
  }

  /// "section.key=value", as given to --set.
  void set_assignment(const std::string& text) {
    const auto eq = text.find('=');
    const auto dot = text.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      fail(ErrorKind::config, "--set expects section.key=value, got '" + text + "'");
    }
    const std::string section(trim(std::string_view(text).substr(0, dot)));
    const std::string key(trim(std::string_view(text).substr(dot + 1, eq - dot - 1)));
    if (!valid_name(section) || !valid_name(key)) {
      fail(ErrorKind::config, "--set: bad name in '" + text + "'");
    }
    set(section, key, std::string(trim(std::string_view(text).substr(eq + 1))));
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    return s != data_.end() && s->second.count(key) > 0;
  }

  const std::string& raw(const std::string& section, const std::string& key) const {
    if (!has(section, key)) fail(ErrorKind::config, "missing config key " + section + "." + key);
    return data_.at(section).at(key);
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return has(section, key) ? raw(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    return parse_double(raw(section, key), section + "." + key);
  }
  double get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  std::int64_t get_int(const std::string& section, const std::string& key) const {
    const std::string& s = raw(section, key);
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail(ErrorKind::config, section + "." + key + ": expected an integer, got '" + s + "'");
    }
    return v;
  }
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  std::size_t get_count(const std::string& section, const std::string& key,
                        std::size_t fallback) const {
    const auto v = get_int(section, key, static_cast<std::int64_t>(fallback));
    if (v < 0) fail(ErrorKind::config, section + "." + key + " must be >= 0");
    return static_cast<std::size_t>(v);
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string& s = raw(section, key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(ErrorKind::config, section + "." + key + ": expected a boolean, got '" + s + "'");
  }

  /// Whitespace-separated list of numbers.
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(raw(section, key))) out.push_back(parse_double(w, section + "." + key));
    return out;
  }
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::vector<double> fallback) const {
    return has(section, key) ? get_doubles(section, key) : fallback;
  }

  /// Sorted, normalised text. Re-parsing it gives the same Config.
  std::string canonical() const {
    std::string out;
    for (const auto& [s, kv] : data_) {
      if (kv.empty()) continue;
      out += "[" + s + "]\n";
      for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    }
    return out;
  }

  const std::map<std::string, Section>& sections() const { return data_; }

  static double parse_double(const std::string& s, const std::string& what) {
    // from_chars does not take a leading '+'.
    std::string_view sv(s);
    if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || p != sv.data() + sv.size() || sv.empty()) {
      fail(ErrorKind::config, what + ": expected a number, got '" + s + "'");
    }
    return v;
  }

  static std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
  }

 private:
  static std::string_view trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char ch : s) {
      const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                      (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' || ch == '.';
      if (!ok) return false;
    }
    return true;
  }

  std::map<std::string, Section> data_;
};

}  // namespace funnel::experiments

#endif  // FUNNEL_EXPERIMENTS_CONFIG_HPP
