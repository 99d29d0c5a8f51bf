#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "pluridyn/errors.hpp"
#include "pluridyn/report.hpp"
#include "pluridyn/rng.hpp"

using namespace pluridyn;
namespace fs = std::filesystem;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_cell(const TableValue& a, const TableValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return std::isnan(*x) ? std::isnan(y) : same_bits(*x, y);
  }
  return a == b;
}

bool same_table(const Table& a, const Table& b) {
  if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
  for (std::size_t r = 0; r < a.rows.size(); ++r)
    for (std::size_t c = 0; c < a.columns.size(); ++c)
      if (!same_cell(a.rows[r][c], b.rows[r][c])) return false;
  return true;
}

Table mixed_table() {
  const double inf = std::numeric_limits<double>::infinity();
  Table t{{"name", "x", "count", "ok"}, {}};
  t.add_row({std::string("plain"), 0.1, std::int64_t{3}, true});
  t.add_row({std::string("comma, \"quote\"\r\nbreak"), -0.0, std::int64_t{-7}, false});
  t.add_row({std::string(""), 1e300, std::int64_t{0}, true});
  t.add_row({std::string("true"), 5e-324, std::int64_t{1} << 62, false});
  t.add_row({std::string("3.5"), std::numeric_limits<double>::quiet_NaN(), std::int64_t{1}, true});
  t.add_row({std::string("NaN"), inf, std::int64_t{2}, false});
  t.add_row({std::string("x"), -inf, std::int64_t{-1}, true});
  t.add_row({std::string("y"), 1.0, std::int64_t{1}, true});
  return t;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pluridyn_test_report";
  fs::create_directories(dir);
  return dir / name;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("shortest double text reads back bit for bit") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1.0");
  CHECK(format_double(-0.0) == "-0.0");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "NaN");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-Infinity");
  Rng rng(17);
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t bits = rng.next();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    if (std::isnan(x)) continue;
    CHECK(same_bits(parse_double_text(format_double(x)), x));
  }
  CHECK(kind_of([] { parse_double_text("1.5x"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("CSV round trip keeps values and cell types") {
  const Table t = mixed_table();
  const std::string csv = table_to_csv(t);
  CHECK(csv.rfind("\"name\",\"x\",\"count\",\"ok\"\r\n", 0) == 0);
  CHECK(csv.find("\"comma, \"\"quote\"\"\r\nbreak\",-0.0,-7,false\r\n") != std::string::npos);
  CHECK(same_table(table_from_csv(csv), t));
  // LF line ends and a missing final line break are accepted on input.
  CHECK(same_table(table_from_csv("\"a\",\"b\"\n1,\"s\""), Table{{"a", "b"}, {{std::int64_t{1}, std::string("s")}}}));
}

TEST_CASE("JSON round trip keeps values and cell types") {
  const Table t = mixed_table();
  const std::string js = table_to_json(t);
  CHECK(js.find("\"Infinity\"") != std::string::npos);
  CHECK(same_table(table_from_json(js), t) == false);  // the string cell "NaN" comes back as a double
  Table no_clash = t;
  no_clash.rows[5][0] = std::string("nan-free");
  CHECK(same_table(table_from_json(table_to_json(no_clash)), no_clash));
}

TEST_CASE("empty table writes a header-only file") {
  const Table t{{"n", "value"}, {}};
  CHECK(table_to_csv(t) == "\"n\",\"value\"\r\n");
  const Table back = table_from_json(table_to_json(t));
  CHECK(back.columns == t.columns);
  CHECK(back.rows.empty());
  const fs::path p = scratch("empty.csv");
  emit_table(t, TableFormat::Csv, p.string());
  CHECK(fs::file_size(p) == table_to_csv(t).size());
}

TEST_CASE("table errors") {
  Table t{{"a"}, {}};
  CHECK(kind_of([&] { t.add_row({1.0, 2.0}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { emit_table(t, TableFormat::Csv, "/nonexistent/dir/t.csv"); }) == ErrorKind::IoFailure);
  CHECK(kind_of([] { table_from_csv("\"a\"\n\"open"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { table_from_csv("\"a\",\"b\"\n1\n"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { table_from_csv("\"a\"\nhello\n"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { table_from_json("{\"columns\": [\"a\"]}"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { parse_table_format("xml"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("summary JSON against its schema") {
  Summary s;
  s.command = "lyapunov";
  s.map_hash = "abc";
  s.seed = 5;
  s.values["sum"] = 1.5;
  s.values["undefined"] = std::numeric_limits<double>::quiet_NaN();
  s.values["count"] = std::int64_t{4};
  s.values["method"] = std::string("orbit");
  s.values["ok"] = true;
  CHECK(validate_summary_json(summary_to_json(s)).empty());

  CHECK_FALSE(validate_summary_json("[1, 2]").empty());
  CHECK_FALSE(validate_summary_json("not json").empty());
  CHECK_FALSE(validate_summary_json(R"({"command": "green", "map_hash": "a", "values": {}})").empty());
  CHECK_FALSE(validate_summary_json(R"({"command": "green", "map_hash": "a", "seed": -1, "values": {}})").empty());
  CHECK_FALSE(validate_summary_json(R"({"command": "fly", "map_hash": "a", "seed": 1, "values": {}})").empty());
  CHECK_FALSE(validate_summary_json(R"({"command": "green", "map_hash": "a", "seed": 1, "values": {"v": [1]}})").empty());
  CHECK_FALSE(validate_summary_json(R"({"command": "green", "map_hash": "a", "seed": 1, "values": {"v": null}})").empty());
  CHECK_FALSE(validate_summary_json(R"({"command": "green", "map_hash": "a", "seed": 1, "values": {}, "x": 1})").empty());
  CHECK(validate_summary_json(R"({"command": "green", "map_hash": "a", "seed": 1, "values": {}})").empty());
}

TEST_CASE("experiment config keys and diagnostics") {
  const std::string map = "\n[map]\nfamily = power\nparams = 1 2\n";
  const std::string ok = write_config("ok.ini", "[run]\ncommand = lyapunov\nseed = 3\nworkers = 2\n" + map);
  const ExperimentConfig cfg = load_experiment_config(ok);
  CHECK(cfg.command == "lyapunov");
  CHECK(cfg.seed == 3);
  CHECK(cfg.workers == 2);
  CHECK(cfg.out_dir == "out/ok");
  CHECK(cfg.params().entries.empty());

  ConfigOverrides over;
  over.seed = 11;
  over.workers = 1;
  over.out_dir = "elsewhere";
  const ExperimentConfig o = load_experiment_config(ok, over);
  CHECK(o.seed == 11);
  CHECK(o.workers == 1);
  CHECK(o.out_dir == "elsewhere");

  const std::string no_seed = write_config("no_seed.ini", "[run]\ncommand = green\n" + map);
  CHECK(kind_of([&] { load_experiment_config(no_seed); }) == ErrorKind::ConfigError);
  try {
    load_experiment_config(no_seed);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no_seed.ini:1") != std::string::npos);
    CHECK(std::string(e.what()).find("seed") != std::string::npos);
  }
  // An explicit seed on the command line is enough.
  CHECK(load_experiment_config(no_seed, over).seed == 11);

  auto bad = [&](const std::string& name, const std::string& text) {
    return kind_of([&] { load_experiment_config(write_config(name, text)); });
  };
  CHECK(bad("w0.ini", "[run]\ncommand = green\nseed = 1\nworkers = 0\n" + map) == ErrorKind::ConfigError);
  CHECK(bad("cap.ini", "[run]\ncommand = green\nseed = 1\nmax_tree_leaves = -4\n" + map) == ErrorKind::ConfigError);
  CHECK(bad("orb.ini", "[run]\ncommand = green\nseed = 1\nmax_orbit_len = 0\n" + map) == ErrorKind::ConfigError);
  CHECK(bad("cmd.ini", "[run]\ncommand = fly\nseed = 1\n" + map) == ErrorKind::ConfigError);
  CHECK(bad("key.ini", "[run]\ncommand = green\nseed = 1\nsed = 2\n" + map) == ErrorKind::ConfigError);
  CHECK(bad("nomap.ini", "[run]\ncommand = green\nseed = 1\n") == ErrorKind::ConfigError);
  CHECK(bad("norun.ini", map) == ErrorKind::ConfigError);
  CHECK(bad("file.ini", "[run]\ncommand = green\nseed = 1\n[map]\nfile = missing.map\n") == ErrorKind::ConfigError);
  CHECK(bad("render.ini", "[run]\ncommand = render\nseed = 1\n[params]\ninput = missing.grid\n") == ErrorKind::ConfigError);
  CHECK(bad("render2.ini", "[run]\ncommand = render\nseed = 1\n") == ErrorKind::ConfigError);
  CHECK(bad("pl.ini", "[run]\ncommand = polylike-measure\nseed = 1\n" + map) == ErrorKind::ConfigError);
  CHECK(kind_of([] { load_experiment_config("/nonexistent/x.ini"); }) == ErrorKind::ConfigError);
}

TEST_CASE("command parameters are checked before any work") {
  const std::string head = "[run]\ncommand = lyapunov\nseed = 1\nmax_orbit_len = 500\n[map]\nfamily = power\nparams = 1 2\n";
  ConfigOverrides over;
  over.out_dir = scratch("params_out").string();
  const std::string typo = write_config("typo.ini", head + "[params]\norbit_len = 100\norbit_lenght = 100\n");
  try {
    run_experiment(typo, over);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    CHECK(std::string(e.what()).find("typo.ini:10") != std::string::npos);
  }
  const std::string big = write_config("big.ini", head + "[params]\norbit_len = 501\n");
  CHECK(kind_of([&] { run_experiment(big, over); }) == ErrorKind::ConfigError);
  // The default orbit length (10000) is held to the cap as well.
  const std::string dflt = write_config("default.ini", head);
  CHECK(kind_of([&] { run_experiment(dflt, over); }) == ErrorKind::ConfigError);
  const std::string tree = write_config(
      "tree.ini", "[run]\ncommand = pf-rate\nseed = 1\nmax_tree_leaves = 100\n[map]\nfamily = power\nparams = 1 2\n"
                  "[params]\nn_max = 6\n");
  CHECK(kind_of([&] { run_experiment(tree, over); }) == ErrorKind::ConfigError);
  const std::string obs = write_config("obs.ini", "[run]\ncommand = clt\nseed = 1\n[map]\nfamily = power\nparams = 1 2\n"
                                                  "[params]\nobservable = re 0 7\n");
  CHECK(kind_of([&] { run_experiment(obs, over); }) == ErrorKind::ConfigError);
}

TEST_CASE("manifest JSON lists outputs and timings") {
  RunManifest m;
  m.command = "green";
  m.config_hash = "h";
  m.version = "v";
  m.timings = {{"map", 0.5}};
  m.warnings = {"w"};
  m.outputs = {{"a.csv", "00", 3}};
  const std::string js = manifest_to_json(m);
  for (const char* key : {"\"config_hash\"", "\"timings\"", "\"warnings\"", "\"outputs\"", "\"sha256\"", "\"version\""})
    CHECK(js.find(key) != std::string::npos);
}
