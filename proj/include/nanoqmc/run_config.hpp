#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nanoqmc {

// Flat key-value configuration:
//
//   # comment
//   key = value
//   list_key = 0, 1, 2.5
//
// Keys may appear once per source. Command-line overrides ("key=value")
// replace file values. Every lookup records the resolved value (including
// defaults) for the run manifest. Errors carry the file and line of the key.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig parse(std::string_view text, const std::string& source);
  static RunConfig load(const std::string& path);

  void set_override(std::string_view assignment);
  // Throws ConfigError naming the first key outside `allowed`.
  void restrict_to(const std::set<std::string>& allowed, std::string_view command) const;

  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback);
  std::string text(const std::string& key, const std::string& fallback);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  // "file:line" or "--set" for a given key; "default" if absent.
  std::string where(const std::string& key) const;
  // Raises a ConfigError located at `key`.
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  struct Entry {
    std::string value;
    std::string origin;
  };
  const Entry* find(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace nanoqmc
