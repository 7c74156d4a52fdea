#pragma once

// Flat `key=value` configuration with dotted section prefixes
// (`walks.length=80`). `#` starts a comment line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace xrec {

class Config {
 public:
  static Config parse(const std::string& contents, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  /// `key=value` override; throws ValidationError on a missing `=`.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list.
  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Keys that no reader asked for; used to flag typos.
  std::vector<std::string> unread_keys() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> read_;
};

}  // namespace xrec
