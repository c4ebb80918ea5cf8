#pragma once
// Flat key-value experiment configs with one nesting level through dotted
// keys ("M.kind = affine"). '#' starts a comment; values keep interior
// whitespace trimmed at both ends. Lists are comma-separated.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kcorr/kirchhoff.hpp"
#include "kcorr/numerics.hpp"

namespace kcorr {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str(), path);
  }

  static Config from_string(const std::string& text, const std::string& origin = "<string>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (std::count(key.begin(), key.end(), '.') > 1)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": at most one nesting level ('" + key + "')");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long get_int(const std::string& key) const {
    const double v = get_double(key);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v)
      throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
    return n;
  }
  long get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(origin_ + ": key '" + key + "' must be a boolean");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(to_double(key, t));
    }
    if (out.empty())
      throw ConfigError(origin_ + ": key '" + key + "' holds an empty list");
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  // The M specification: {kind: constant|affine|power} with parameters.
  KirchhoffFunction kirchhoff() const {
    const std::string kind = get_string("M.kind");
    if (kind == "constant") return KirchhoffFunction::constant(get_double("M.c"));
    if (kind == "affine")
      return KirchhoffFunction::affine(get_double("M.a"), get_double("M.b"));
    if (kind == "power")
      return KirchhoffFunction::power(get_double("M.a"), get_double("M.b"),
                                      get_double("M.q"));
    throw ConfigError(origin_ + ": M.kind must be constant, affine or power");
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }
  double to_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' has non-numeric value '" + v + "'");
    }
  }

  std::string origin_ = "<empty>";
  std::map<std::string, std::string> values_;
};

}  // namespace kcorr
