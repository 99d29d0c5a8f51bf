#include "pluridyn/ini.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pluridyn/errors.hpp"

namespace pluridyn {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

const IniEntry* IniSection::find(std::string_view key) const {
  const IniEntry* found = nullptr;
  for (const auto& e : entries)
    if (e.key == key) found = &e;
  return found;
}

std::vector<const IniEntry*> IniSection::find_all(std::string_view key) const {
  std::vector<const IniEntry*> out;
  for (const auto& e : entries)
    if (e.key == key) out.push_back(&e);
  return out;
}

const IniSection* IniDocument::section(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

void config_error(const std::string& source, int line, const std::string& message) {
  fail(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ": " + message);
}

IniDocument parse_ini(std::string_view text, const std::string& source) {
  IniDocument doc;
  doc.source = source;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(source, line_no, "unterminated section header");
      IniSection s;
      s.name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (s.name.empty()) config_error(source, line_no, "empty section name");
      if (doc.section(s.name)) config_error(source, line_no, "duplicate section [" + s.name + "]");
      s.line = line_no;
      doc.sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(source, line_no, "expected 'key = value'");
    if (doc.sections.empty()) config_error(source, line_no, "entry outside of any section");
    IniEntry e;
    e.key = trim(std::string_view(line).substr(0, eq));
    e.value = trim(std::string_view(line).substr(eq + 1));
    e.line = line_no;
    if (e.key.empty()) config_error(source, line_no, "empty key");
    doc.sections.back().entries.push_back(std::move(e));
  }
  return doc;
}

IniDocument load_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ini(ss.str(), path);
}

std::vector<double> split_doubles(std::string_view text, const std::string& source, int line) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',')) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != ',') ++j;
    double v = 0.0;
    const char* first = text.data() + i;
    const char* last = text.data() + j;
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      config_error(source, line, "not a number: '" + std::string(text.substr(i, j - i)) + "'");
    }
    out.push_back(v);
    i = j;
  }
  return out;
}

std::vector<double> parse_doubles(const IniEntry& e, const std::string& source) {
  return split_doubles(e.value, source, e.line);
}

double parse_double(const IniEntry& e, const std::string& source) {
  auto v = parse_doubles(e, source);
  if (v.size() != 1) config_error(source, e.line, "key '" + e.key + "' expects one number");
  return v[0];
}

std::int64_t parse_int(const IniEntry& e, const std::string& source) {
  std::int64_t v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) config_error(source, e.line, "key '" + e.key + "' expects an integer");
  return v;
}

}  // namespace pluridyn
