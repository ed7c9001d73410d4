#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "agnc/experiments/icp_bench.hpp"
#include "agnc/experiments/linreg.hpp"

namespace agnc {

/// Flat `key = value` text. `#` starts a comment, blank lines are ignored,
/// lists are comma-separated. Errors carry "source:line:".
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct KeyValueConfig {
  std::string source;
  std::vector<ConfigEntry> entries;

  static KeyValueConfig parse(std::istream& in, std::string source);
  static KeyValueConfig load(const std::filesystem::path& path);
};

/// Defaults for missing keys; unknown keys, bad values and out-of-range
/// settings throw ConfigError.
LinRegConfig linreg_config(const KeyValueConfig& kv);
IcpBenchConfig icp_config(const KeyValueConfig& kv);

}  // namespace agnc
