// Minimal sectioned key/value config format:
//   [section]
//   key = value        # comment
//   list = [1, 2, 3]
// Keys are addressed as "section.key".  Every lookup records the resolved
// value (including applied defaults) so a run manifest can echo the full
// effective configuration.
#pragma once

#include <cctype>
#include <cstddef>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsvol {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text) {
    Config cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t eol = text.find('\n', pos);
      std::string line(text.substr(
          pos, eol == std::string_view::npos ? text.size() - pos : eol - pos));
      pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos)
        line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ConfigError("line " + std::to_string(line_no) +
                            ": unterminated section header");
        section = trim(t.substr(1, t.size() - 2));
        if (section.empty())
          throw ConfigError("line " + std::to_string(line_no) +
                            ": empty section name");
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) +
                          ": expected key = value");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.raw_.count(full))
        throw ConfigError("line " + std::to_string(line_no) +
                          ": duplicate key " + full);
      cfg.raw_[full] = value;
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    raw_[key] = value;
  }

  bool has(const std::string& key) const { return raw_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    const auto it = raw_.find(key);
    const std::string v = (it == raw_.end()) ? fallback : it->second;
    resolved_[key] = v;
    return v;
  }

  std::string require_string(const std::string& key) const {
    const auto it = raw_.find(key);
    if (it == raw_.end())
      throw ConfigError("missing required config key: " + key);
    resolved_[key] = it->second;
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
      resolved_[key] = to_string(fallback);
      return fallback;
    }
    resolved_[key] = it->second;
    return parse_double(key, it->second);
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
      resolved_[key] = std::to_string(fallback);
      return fallback;
    }
    resolved_[key] = it->second;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
      resolved_[key] = fallback ? "true" : "false";
      return fallback;
    }
    resolved_[key] = it->second;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError("key " + key + ": expected true/false: " + it->second);
  }

  std::vector<double> get_double_array(
      const std::string& key, const std::vector<double>& fallback) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
      std::string s = "[";
      for (std::size_t i = 0; i < fallback.size(); ++i)
        s += (i ? ", " : "") + to_string(fallback[i]);
      resolved_[key] = s + "]";
      return fallback;
    }
    resolved_[key] = it->second;
    return parse_array(key, it->second);
  }

  // Section names matching "prefix.<name>.<key>", deduplicated, in order.
  std::vector<std::string> subsections(const std::string& prefix) const {
    std::vector<std::string> names;
    const std::string p = prefix + ".";
    for (const auto& [k, v] : raw_) {
      if (k.rfind(p, 0) != 0) continue;
      const auto dot = k.find('.', p.size());
      if (dot == std::string::npos) continue;
      const std::string name = k.substr(p.size(), dot - p.size());
      bool seen = false;
      for (const auto& n : names) seen = seen || n == name;
      if (!seen) names.push_back(name);
    }
    return names;
  }

  const std::map<std::string, std::string>& raw() const { return raw_; }
  const std::map<std::string, std::string>& resolved() const {
    return resolved_;
  }

 private:
  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": not a number: " + v);
    }
  }

  static std::string to_string(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

  static std::vector<double> parse_array(const std::string& key,
                                         const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
      throw ConfigError("key " + key + ": expected [a, b, ...]: " + v);
    std::vector<double> out;
    std::string body = v.substr(1, v.size() - 2);
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t comma = body.find(',', pos);
      if (comma == std::string::npos) comma = body.size();
      const std::string item = trim(body.substr(pos, comma - pos));
      if (!item.empty()) out.push_back(parse_double(key, item));
      pos = comma + 1;
    }
    return out;
  }

  std::map<std::string, std::string> raw_;
  mutable std::map<std::string, std::string> resolved_;
};

}  // namespace tsvol
