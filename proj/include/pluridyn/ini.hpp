#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pluridyn {

/// Minimal `key = value` document with `[section]` headers and `#`/`;`
/// comments. Keys may repeat inside a section (used for `term` lines).
struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  int line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(std::string_view key) const;
  std::vector<const IniEntry*> find_all(std::string_view key) const;
};

struct IniDocument {
  std::string source;
  std::vector<IniSection> sections;

  const IniSection* section(std::string_view name) const;
};

IniDocument parse_ini(std::string_view text, const std::string& source);
IniDocument load_ini(const std::string& path);

/// Throws ConfigError with a "source:line: message" diagnostic.
[[noreturn]] void config_error(const std::string& source, int line, const std::string& message);

double parse_double(const IniEntry& e, const std::string& source);
std::int64_t parse_int(const IniEntry& e, const std::string& source);
std::vector<double> parse_doubles(const IniEntry& e, const std::string& source);
std::vector<double> split_doubles(std::string_view text, const std::string& source, int line);

std::string trim(std::string_view s);

}  // namespace pluridyn
