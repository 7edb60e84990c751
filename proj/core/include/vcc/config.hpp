#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vcc {

/// One `key = value` assignment and the 1-based line it came from.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Reads `key = value` lines. Blank lines and text after '#' are ignored;
/// keys and values are trimmed. Throws ConfigError on a line without '=' or
/// a repeated key.
std::vector<ConfigEntry> parse_config(std::istream& in);
std::vector<ConfigEntry> load_config(const std::string& path);

// Typed views of entry values; all throw ConfigError naming the entry's line.
std::size_t config_count(const ConfigEntry& e);
std::uint64_t config_u64(const ConfigEntry& e);
bool config_bool(const ConfigEntry& e);
/// Comma- or space-separated counts.
std::vector<std::size_t> config_counts(const ConfigEntry& e);

}  // namespace vcc
