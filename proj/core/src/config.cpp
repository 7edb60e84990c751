#include "vcc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vcc/error.hpp"

namespace vcc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(const std::string& text, const ConfigEntry& e) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || text.front() == '-' || text.front() == '+') {
    throw ConfigError(e.key + ": expected a non-negative integer, got '" + text + "'", e.line);
  }
  return value;
}

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& in) {
  std::vector<ConfigEntry> entries;
  std::set<std::string> seen;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", number);
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), number};
    if (e.key.empty()) throw ConfigError("missing key before '='", number);
    if (!seen.insert(e.key).second) throw ConfigError("duplicate key '" + e.key + "'", number);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ConfigEntry> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what(), 0);
  }
}

std::size_t config_count(const ConfigEntry& e) {
  return static_cast<std::size_t>(parse_u64(e.value, e));
}

std::uint64_t config_u64(const ConfigEntry& e) { return parse_u64(e.value, e); }

bool config_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "on") return true;
  if (e.value == "false" || e.value == "0" || e.value == "off") return false;
  throw ConfigError(e.key + ": expected true or false, got '" + e.value + "'", e.line);
}

std::vector<std::size_t> config_counts(const ConfigEntry& e) {
  std::string text = e.value;
  for (char& c : text)
    if (c == ',') c = ' ';
  std::istringstream fields(text);
  std::vector<std::size_t> out;
  std::string item;
  while (fields >> item) out.push_back(static_cast<std::size_t>(parse_u64(item, e)));
  if (out.empty()) throw ConfigError(e.key + ": expected at least one value", e.line);
  return out;
}

}  // namespace vcc
