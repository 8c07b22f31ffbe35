// Flat `key = value` configuration files with [section] headers (a TOML-like
// subset, no nesting or includes). Errors carry file, line, and key.
#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "deeprx/harness.hpp"

namespace deeprx {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FlatConfig {
 public:
  static FlatConfig parse_file(const std::string& path);
  static FlatConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  // Typed getters; a parse failure names the key and its source line.
  std::string get_string(const std::string& key, const std::string& fallback);
  long get_int(const std::string& key, long fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback);
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback);
  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> fallback);

  void set(const std::string& key, const std::string& value);  // CLI overrides
  // Keys present in the file but never read by any getter (typo guard).
  std::vector<std::string> unread_keys() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string origin_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> read_;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

// Build an ExperimentConfig from a flat config; rejects unread keys.
ExperimentConfig config_from_flat(FlatConfig& flat);
ExperimentConfig config_from_file(const std::string& path);

// All defaults materialized, re-parseable, with the fingerprint as a comment.
std::string resolved_config_text(const ExperimentConfig& cfg);

}  // namespace deeprx
