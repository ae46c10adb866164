#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "harness.hpp"

namespace matrixrl {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Flat key = value configuration text. One assignment per line, `#` starts a
/// comment, values are scalars or comma-separated lists. Key order and
/// unknown keys are preserved for echoing into manifests.
class FlatConfig {
 public:
  static FlatConfig parse(const std::string& text);
  static FlatConfig parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> entries_;  // in file order
};

/// Instance-level configuration from flat keys (n_states, n_actions, d,
/// d_prime, r, P, seed and optional generator knobs).
InstanceConfig instance_config_from(const FlatConfig& cfg);

/// Full run configuration; requires N and H on top of the instance keys.
RunConfig run_config_from(const FlatConfig& cfg);

}  // namespace matrixrl
