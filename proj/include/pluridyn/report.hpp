#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pluridyn/ini.hpp"

namespace pluridyn {

/// Shortest decimal that reads back to the same double, always carrying a
/// '.' or an exponent so it never reads as an integer; "NaN", "Infinity" and
/// "-Infinity" for the non-finite values.
std::string format_double(double x);
double parse_double_text(const std::string& s);

using TableValue = std::variant<double, std::int64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<TableValue>> rows;

  void add_row(std::vector<TableValue> row);
};

enum class TableFormat { Csv, Json };
TableFormat parse_table_format(const std::string& name);

/// RFC 4180 with CRLF line ends. Column names and string cells are always
/// quoted; numbers and booleans (true/false) are bare, which keeps the cell
/// types through a round trip.
std::string table_to_csv(const Table& t);
/// {"columns": [...], "rows": [[...], ...]}; non-finite doubles become the
/// strings "NaN", "Infinity", "-Infinity".
std::string table_to_json(const Table& t);
/// Inverse of table_to_csv. Throws InvalidArgument on malformed input.
Table table_from_csv(const std::string& text);
/// Inverse of table_to_json; the strings "NaN", "Infinity", "-Infinity" come
/// back as doubles.
Table table_from_json(const std::string& text);
/// Throws IoFailure when the file cannot be written.
void emit_table(const Table& t, TableFormat fmt, const std::string& path);

/// Mixed-type one-object JSON written next to every run:
///   {"command": str, "map_hash": str, "seed": uint, "values": {name: number | str | bool}}
/// Non-finite doubles are stored as in table JSON.
struct Summary {
  std::string command;
  std::string map_hash;
  std::uint64_t seed = 0;
  std::map<std::string, TableValue> values;
};

std::string summary_to_json(const Summary& s);
/// Empty when the text matches the schema above, else the first problem found.
std::string validate_summary_json(const std::string& text);

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "green",   "measure", "pf-rate",         "mixing",           "clt",         "ldt",    "lyapunov",
      "periodic", "entropy", "dimension",      "polylike-degree", "polylike-measure", "bifurcation", "render"};
  return names;
}

struct ExperimentConfig {
  std::string path;
  std::string text;  // file contents, hashed into the manifest
  IniDocument doc;
  std::string command;
  std::uint64_t seed = 0;
  std::string out_dir;
  int workers = 1;
  std::int64_t max_tree_leaves = std::int64_t{1} << 22;
  std::int64_t max_orbit_len = 1000000;

  /// [params] entries; empty section when absent.
  const IniSection& params() const;
  /// Resolves a path from the config relative to the config's directory.
  std::string resolve(const std::string& p) const;
};

struct ConfigOverrides {
  std::optional<std::string> command;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
};

/// [run] holds command, seed (mandatory), out, workers, max_tree_leaves and
/// max_orbit_len; overrides win over the file. Throws ConfigError with
/// line diagnostics.
ExperimentConfig load_experiment_config(const std::string& path, const ConfigOverrides& over = {});

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::pair<std::string, double>> timings;  // seconds
  std::vector<std::string> warnings;
  std::vector<OutputFile> outputs;
};

std::string manifest_to_json(const RunManifest& m);

/// Runs one command, writes its outputs and manifest.json into out_dir.
RunManifest run_experiment(const ExperimentConfig& cfg);
RunManifest run_experiment(const std::string& config_path, const ConfigOverrides& over = {});

}  // namespace pluridyn
