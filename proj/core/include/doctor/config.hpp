#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace doctor {

// Plain-text key=value configuration with dotted section prefixes
// (train.lr=1e-4). CLI flags override file keys; every run prints the
// resolved config so reports are attributable to exact settings.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);

  // Parses a single "key=value" assignment.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  // Later sources win; used for flag-over-file precedence.
  void merge(const Config& overrides);

  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  std::int64_t get_int(const std::string& key, std::int64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  // Sorted "key = value" lines, one per key.
  std::string resolved() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace doctor
