#include "tsr/config.hpp"

#include <cctype>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tsr/error.hpp"

namespace tsr {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: " + key + ": not a number: '" + v + "'");
  }
  return d;
}

long long parse_ll(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long n = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError("config: " + key + ": not an integer: '" + v + "'");
  }
  return n;
}

unsigned long long parse_ull(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos) {
    throw ConfigError("config: " + key +
                      ": not a non-negative integer: '" + v + "'");
  }
  return n;
}

} // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": empty key");
    }
    cfg.kv_[key] = value;
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  if (k.empty()) throw ConfigError("config: empty key");
  kv_[k] = trim(value);
}

void Config::set_assignment(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config: override must look like key=value: '" +
                      assignment + "'");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool Config::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : parse_double(key, it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const long long n = parse_ll(key, it->second);
  if (n < INT_MIN || n > INT_MAX) {
    throw ConfigError("config: " + key + ": out of int range");
  }
  return static_cast<int>(n);
}

unsigned long long Config::get_u64(const std::string& key,
                                   unsigned long long fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : parse_ull(key, it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + ": not a boolean: '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  for (const std::string& item : split_commas(it->second)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  for (const std::string& item : split_commas(it->second)) {
    const long long n = parse_ll(key, item);
    if (n < INT_MIN || n > INT_MAX) {
      throw ConfigError("config: " + key + ": out of int range");
    }
    out.push_back(static_cast<int>(n));
  }
  return out;
}

std::vector<std::string> Config::get_string_list(
    const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return {};
  return split_commas(it->second);
}

std::vector<unsigned long long> Config::get_u64_list(
    const std::string& key) const {
  std::vector<unsigned long long> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  for (const std::string& item : split_commas(it->second)) {
    out.push_back(parse_ull(key, item));
  }
  return out;
}

} // namespace tsr
