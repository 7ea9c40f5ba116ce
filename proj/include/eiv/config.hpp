#ifndef EIV_CONFIG_HPP
#define EIV_CONFIG_HPP

// Flat key=value configuration with dotted keys.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eiv/errors.hpp"

namespace eiv {

class Config {
 public:
  Config() = default;

  /// Lines are `key = value`; '#' starts a comment; blank lines are skipped.
  static Config parse(std::istream& in, const std::string& source = "config") {
    Config c;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(source + ":" + std::to_string(no) + ": expected key=value, got '" + line + "'");
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(no) + ": empty key");
      for (char ch : key)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' || ch == '-'))
          throw ConfigError(source + ":" + std::to_string(no) + ": bad character in key '" + key + "'");
      if (c.values_.count(key)) throw ConfigError(key + ": duplicate key (" + source + ":" + std::to_string(no) + ")");
      c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& key, double def) const {
    return has(key) ? to_double(key, values_.at(key)) : def;
  }

  /// Finite number in [lo, hi].
  double get_double(const std::string& key, double def, double lo, double hi) const {
    const double v = get_double(key, def);
    if (!(v >= lo && v <= hi)) {
      std::ostringstream os;
      os << key << ": value " << v << " outside [" << lo << ", " << hi << "]";
      throw ConfigError(os.str());
    }
    return v;
  }

  long long get_int(const std::string& key, long long def, long long lo, long long hi) const {
    if (!has(key)) return def;
    const auto& s = values_.at(key);
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key + ": not an integer '" + s + "'");
    if (v < lo || v > hi)
      throw ConfigError(key + ": value " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  bool get_bool(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const auto& s = values_.at(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key + ": not a boolean '" + s + "'");
  }

  std::vector<double> get_list(const std::string& key, const std::vector<double>& def) const {
    if (!has(key)) return def;
    std::vector<double> out;
    for (const auto& item : split(values_.at(key), ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
  }

  /// Throws on the first key not in `known` (exact match) and not under a known prefix ending in '.'.
  void check_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_) {
      if (known.count(k)) continue;
      bool ok = false;
      for (const auto& p : known)
        if (!p.empty() && p.back() == '.' && k.rfind(p, 0) == 0) ok = true;
      if (!ok) throw ConfigError(k + ": unknown key");
    }
  }

  /// Sorted key=value lines.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    return s;
  }

  /// 64-bit FNV-1a of the canonical text, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
  }

  static double to_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(key + ": not a number '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace eiv

#endif  // EIV_CONFIG_HPP
