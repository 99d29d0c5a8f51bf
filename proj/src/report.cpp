#include "pluridyn/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/hash.hpp"

namespace pluridyn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

double parse_double_text(const std::string& s) {
  if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "Infinity") return std::numeric_limits<double>::infinity();
  if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(ErrorKind::InvalidArgument, "not a number: '" + s + "'");
  return x;
}

void Table::add_row(std::vector<TableValue> row) {
  if (row.size() != columns.size()) {
    fail(ErrorKind::InvalidArgument, "row has " + std::to_string(row.size()) + " cells, table has " +
                                         std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  fail(ErrorKind::InvalidArgument, "unknown table format '" + name + "'");
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_cell(const TableValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  return quote(std::get<std::string>(v));
}

struct CsvField {
  std::string text;
  bool quoted = false;
};

std::vector<std::vector<CsvField>> split_csv(const std::string& text) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> rec;
  CsvField field;
  std::size_t i = 0;
  bool any = false;
  auto end_field = [&] {
    rec.push_back(std::move(field));
    field = {};
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '"' && field.text.empty() && !field.quoted) {
      field.quoted = true;
      ++i;
      for (;;) {
        if (i >= text.size()) fail(ErrorKind::InvalidArgument, "unterminated quoted CSV field");
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field.text += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field.text += text[i++];
      }
      if (i < text.size() && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
        fail(ErrorKind::InvalidArgument, "text after closing quote in CSV field");
      }
      any = true;
      continue;
    }
    if (c == ',') {
      end_field();
      any = true;
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_field();
      records.push_back(std::move(rec));
      rec.clear();
      any = false;
      i += (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ? 2 : 1;
    } else {
      if (field.quoted) fail(ErrorKind::InvalidArgument, "text after closing quote in CSV field");
      field.text += c;
      any = true;
      ++i;
    }
  }
  if (any || !field.text.empty() || field.quoted) {
    end_field();
    records.push_back(std::move(rec));
  }
  return records;
}

TableValue bare_value(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  if (!s.empty() && s.find_first_not_of("-0123456789") == std::string::npos) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
  }
  return parse_double_text(s);
}

json json_value(const TableValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return std::isfinite(*d) ? json(*d) : json(format_double(*d));
  if (const auto* i = std::get_if<std::int64_t>(&v)) return json(*i);
  if (const auto* b = std::get_if<bool>(&v)) return json(*b);
  return json(std::get<std::string>(v));
}

TableValue from_json_value(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "NaN" || s == "Infinity" || s == "-Infinity") return parse_double_text(s);
    return s;
  }
  fail(ErrorKind::InvalidArgument, "table cell must be a number, string or boolean");
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot write " + path);
  out << text;
  out.close();
  if (!out) fail(ErrorKind::IoFailure, "short write on " + path);
}

}  // namespace

std::string table_to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + quote(t.columns[c]);
  out += "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_cell(row[c]);
    out += "\r\n";
  }
  return out;
}

Table table_from_csv(const std::string& text) {
  const auto records = split_csv(text);
  if (records.empty()) fail(ErrorKind::InvalidArgument, "CSV has no header");
  Table t;
  for (const auto& f : records[0]) t.columns.push_back(f.text);
  for (std::size_t r = 1; r < records.size(); ++r) {
    std::vector<TableValue> row;
    for (const auto& f : records[r]) row.push_back(f.quoted ? TableValue(f.text) : bare_value(f.text));
    t.add_row(std::move(row));
  }
  return t;
}

std::string table_to_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& v : row) r.push_back(json_value(v));
    rows.push_back(std::move(r));
  }
  json doc = {{"columns", t.columns}, {"rows", std::move(rows)}};
  return doc.dump(1) + "\n";
}

Table table_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("table JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("columns") || !doc.contains("rows")) {
    fail(ErrorKind::InvalidArgument, "table JSON needs columns and rows");
  }
  Table t;
  for (const auto& c : doc["columns"]) {
    if (!c.is_string()) fail(ErrorKind::InvalidArgument, "column names must be strings");
    t.columns.push_back(c.get<std::string>());
  }
  for (const auto& r : doc["rows"]) {
    if (!r.is_array()) fail(ErrorKind::InvalidArgument, "rows must be arrays");
    std::vector<TableValue> row;
    for (const auto& v : r) row.push_back(from_json_value(v));
    t.add_row(std::move(row));
  }
  return t;
}

void emit_table(const Table& t, TableFormat fmt, const std::string& path) {
  write_text(fmt == TableFormat::Csv ? table_to_csv(t) : table_to_json(t), path);
}

std::string summary_to_json(const Summary& s) {
  json values = json::object();
  for (const auto& [name, v] : s.values) values[name] = json_value(v);
  json doc = {{"command", s.command}, {"map_hash", s.map_hash}, {"seed", s.seed}, {"values", std::move(values)}};
  return doc.dump(1) + "\n";
}

std::string validate_summary_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    return std::string("not JSON: ") + e.what();
  }
  if (!doc.is_object()) return "top level must be an object";
  const std::pair<const char*, const char*> required[] = {
      {"command", "string"}, {"map_hash", "string"}, {"seed", "unsigned integer"}, {"values", "object"}};
  for (const auto& [key, type] : required) {
    if (!doc.contains(key)) return std::string("missing key '") + key + "'";
    const json& v = doc[key];
    const bool ok = std::string(type) == "string"   ? v.is_string()
                    : std::string(type) == "object" ? v.is_object()
                                                    : v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok) return std::string("'") + key + "' must be a " + type;
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "command" && it.key() != "map_hash" && it.key() != "seed" && it.key() != "values") {
      return "unexpected key '" + it.key() + "'";
    }
  }
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), doc["command"].get<std::string>()) == names.end()) {
    return "unknown command '" + doc["command"].get<std::string>() + "'";
  }
  for (auto it = doc["values"].begin(); it != doc["values"].end(); ++it) {
    if (!(it->is_number() || it->is_string() || it->is_boolean())) {
      return "value '" + it.key() + "' must be a number, string or boolean";
    }
  }
  return {};
}

// --- configuration ---------------------------------------------------------

const IniSection& ExperimentConfig::params() const {
  static const IniSection empty{"params", 0, {}};
  const IniSection* s = doc.section("params");
  return s ? *s : empty;
}

std::string ExperimentConfig::resolve(const std::string& p) const {
  const fs::path q(p);
  if (q.is_absolute()) return q.string();
  return (fs::path(path).parent_path() / q).lexically_normal().string();
}

namespace {

void check_file(const ExperimentConfig& cfg, const IniSection* sec, const char* key) {
  if (!sec) return;
  if (const IniEntry* e = sec->find(key)) {
    if (!fs::is_regular_file(cfg.resolve(e->value))) config_error(cfg.path, e->line, "file not found: " + e->value);
  }
}

std::int64_t positive(const IniEntry& e, const std::string& source) {
  const std::int64_t v = parse_int(e, source);
  if (v <= 0) config_error(source, e.line, e.key + " must be positive");
  return v;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path, const ConfigOverrides& over) {
  ExperimentConfig cfg;
  cfg.path = path;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::ConfigError, path + ": cannot read config");
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg.text = ss.str();
  }
  cfg.doc = parse_ini(cfg.text, path);
  const IniSection* run = cfg.doc.section("run");
  if (!run) config_error(path, 0, "missing [run] section");
  static const char* run_keys[] = {"command", "seed", "out", "workers", "max_tree_leaves", "max_orbit_len"};
  for (const auto& e : run->entries) {
    if (std::find_if(std::begin(run_keys), std::end(run_keys), [&](const char* k) { return e.key == k; }) ==
        std::end(run_keys)) {
      config_error(path, e.line, "unknown [run] key '" + e.key + "'");
    }
  }

  if (over.command) {
    cfg.command = *over.command;
  } else if (const IniEntry* e = run->find("command")) {
    cfg.command = e->value;
  } else {
    config_error(path, run->line, "missing command");
  }
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), cfg.command) == names.end()) {
    const IniEntry* e = run->find("command");
    config_error(path, e ? e->line : run->line, "unknown command '" + cfg.command + "'");
  }

  if (const IniEntry* e = run->find("seed")) {
    const std::int64_t s = parse_int(*e, path);
    if (s < 0) config_error(path, e->line, "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (!over.seed) {
    config_error(path, run->line, "missing seed");
  }
  if (over.seed) cfg.seed = *over.seed;

  if (const IniEntry* e = run->find("workers")) cfg.workers = static_cast<int>(positive(*e, path));
  if (over.workers) {
    if (*over.workers <= 0) fail(ErrorKind::ConfigError, "workers must be positive");
    cfg.workers = *over.workers;
  }
  if (const IniEntry* e = run->find("max_tree_leaves")) cfg.max_tree_leaves = positive(*e, path);
  if (const IniEntry* e = run->find("max_orbit_len")) cfg.max_orbit_len = positive(*e, path);

  if (over.out_dir) {
    cfg.out_dir = *over.out_dir;
  } else if (const IniEntry* e = run->find("out")) {
    cfg.out_dir = e->value;
  } else {
    cfg.out_dir = (fs::path("out") / fs::path(path).stem()).string();
  }

  const bool polylike = cfg.command == "polylike-degree" || cfg.command == "polylike-measure";
  const char* block = cfg.command == "render" ? nullptr : polylike ? "polylike" : cfg.command == "bifurcation" ? "family" : "map";
  if (block && !cfg.doc.section(block)) config_error(path, run->line, cfg.command + " needs a [" + block + "] section");
  check_file(cfg, cfg.doc.section("map"), "file");
  check_file(cfg, cfg.doc.section("params"), "input");
  if (cfg.command == "render" && !cfg.params().find("input")) config_error(path, run->line, "render needs an input grid");
  return cfg;
}

std::string manifest_to_json(const RunManifest& m) {
  json timings = json::object();
  for (const auto& [name, sec] : m.timings) timings[name] = sec;
  json outputs = json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  json doc = {{"command", m.command},       {"config_hash", m.config_hash}, {"version", m.version},
              {"seed", m.seed},             {"workers", m.workers},         {"timings", std::move(timings)},
              {"warnings", m.warnings},     {"outputs", std::move(outputs)}};
  return doc.dump(1) + "\n";
}

}  // namespace pluridyn
