#pragma once

#include <map>
#include <string>
#include <vector>

namespace tsr {

/// Plain `key = value` text configuration. Blank lines and lines whose
/// first non-space character is '#' are ignored; keys are dotted paths
/// (e.g. data.train_count). Values are kept verbatim (trimmed) and parsed
/// on access; list values are comma separated.
class Config {
public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);

  /// Applies a "key=value" assignment (CLI override form).
  void set_assignment(const std::string& assignment);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  unsigned long long get_u64(const std::string& key,
                             unsigned long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;
  std::vector<unsigned long long> get_u64_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

} // namespace tsr
