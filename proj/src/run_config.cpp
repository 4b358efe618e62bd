#include "nanoqmc/run_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nanoqmc/errors.hpp"

namespace nanoqmc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::string& source) {
  RunConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string origin = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(origin + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!valid_key(key)) throw ConfigError(origin + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(origin + ": key '" + key + "' has no value");
    if (cfg.entries_.count(key)) {
      throw ConfigError(origin + ": duplicate key '" + key + "' (first at " + cfg.entries_[key].origin + ")");
    }
    cfg.entries_[key] = {value, origin};
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("--set: expected key=value, got '" + std::string(assignment) + "'");
  const std::string key(trim(assignment.substr(0, eq)));
  const std::string value(trim(assignment.substr(eq + 1)));
  if (!valid_key(key)) throw ConfigError("--set: invalid key '" + key + "'");
  if (value.empty()) throw ConfigError("--set: key '" + key + "' has no value");
  entries_[key] = {value, "--set " + key};
}

void RunConfig::restrict_to(const std::set<std::string>& allowed, std::string_view command) const {
  for (const auto& [key, entry] : entries_) {
    if (!allowed.count(key)) {
      throw ConfigError(entry.origin + ": unknown key '" + key + "' for command '" + std::string(command) + "'");
    }
  }
}

const RunConfig::Entry* RunConfig::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string RunConfig::where(const std::string& key) const {
  const Entry* e = find(key);
  return e ? e->origin : "default";
}

void RunConfig::fail(const std::string& key, const std::string& message) const {
  throw ConfigError(where(key) + ": key '" + key + "': " + message);
}

double RunConfig::number(const std::string& key, double fallback) {
  double v = fallback;
  if (const Entry* e = find(key)) {
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      fail(key, "expected a finite number, got '" + e->value + "'");
    }
  }
  resolved_[key] = format_number(v);
  return v;
}

std::int64_t RunConfig::integer(const std::string& key, std::int64_t fallback) {
  std::int64_t v = fallback;
  if (const Entry* e = find(key)) {
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(key, "expected an integer, got '" + e->value + "'");
  }
  resolved_[key] = std::to_string(v);
  return v;
}

std::uint64_t RunConfig::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  std::uint64_t v = fallback;
  if (const Entry* e = find(key)) {
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(key, "expected an unsigned integer, got '" + e->value + "'");
  }
  resolved_[key] = std::to_string(v);
  return v;
}

std::vector<double> RunConfig::list(const std::string& key, const std::vector<double>& fallback) {
  std::vector<double> out = fallback;
  if (const Entry* e = find(key)) {
    out.clear();
    std::string_view rest = e->value;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view item = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v)) {
        fail(key, "expected a comma-separated list of numbers, got '" + e->value + "'");
      }
      out.push_back(v);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i) joined += (i ? "," : "") + format_number(out[i]);
  resolved_[key] = joined;
  return out;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) {
  std::string v = fallback;
  if (const Entry* e = find(key)) v = e->value;
  resolved_[key] = v;
  return v;
}

}  // namespace nanoqmc
