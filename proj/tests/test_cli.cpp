#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "pluridyn/endomorphism.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/grid.hpp"
#include "pluridyn/report.hpp"
#include "pluridyn/rng.hpp"

using namespace pluridyn;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(PLURIDYN_SOURCE_DIR) / "configs";

fs::path out_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "pluridyn_test_cli" / name;
  fs::remove_all(p);
  return p;
}

RunManifest run(const std::string& config, const fs::path& out, int workers = 1) {
  ConfigOverrides over;
  over.out_dir = out.string();
  over.workers = workers;
  return run_experiment((kConfigs / config).string(), over);
}

std::vector<std::pair<std::string, std::string>> checksums(const RunManifest& m) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& o : m.outputs) out.emplace_back(o.path, o.sha256);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PLURIDYN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("power-map green run is checksum-identical on a second run") {
  const RunManifest a = run("green_power.ini", out_dir("green_a"));
  const RunManifest b = run("green_power.ini", out_dir("green_b"));
  CHECK(a.outputs.size() == 5);  // green/density grid + ppm, summary
  CHECK(checksums(a) == checksums(b));
  CHECK(a.config_hash == b.config_hash);
  CHECK(a.version == PLURIDYN_VERSION);
  const fs::path dir = fs::temp_directory_path() / "pluridyn_test_cli" / "green_a";
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(validate_summary_json(slurp(dir / "summary.json")).empty());
  const ChartGrid g = read_grid((dir / "green.grid").string());
  CHECK(g.nx == 64);
  // g = log max(1, |w|) - log sqrt(1 + |w|^2) for z -> z^2.
  for (int iy = 0; iy < 64; iy += 9)
    for (int ix = 0; ix < 64; ix += 7) {
      const double r = std::abs(g.point(ix, iy));
      CHECK(std::abs(g.at(ix, iy) - (std::log(std::max(1.0, r)) - 0.5 * std::log1p(r * r))) < 1e-9);
    }
}

TEST_CASE("worker count does not change outputs") {
  CHECK(checksums(run("measure_quadratic.ini", out_dir("m1"), 1)) == checksums(run("measure_quadratic.ini", out_dir("m3"), 3)));
}

TEST_CASE("seed override changes sampled outputs") {
  ConfigOverrides over;
  over.out_dir = out_dir("seed_a").string();
  const RunManifest a = run_experiment((kConfigs / "measure_quadratic.ini").string(), over);
  over.out_dir = out_dir("seed_b").string();
  over.seed = 99;
  const RunManifest b = run_experiment((kConfigs / "measure_quadratic.ini").string(), over);
  CHECK(b.seed == 99);
  CHECK(checksums(a) != checksums(b));
}

TEST_CASE("every bundled config loads") {
  int count = 0;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path().string());
    const ExperimentConfig cfg = load_experiment_config(e.path().string());
    CHECK(!cfg.command.empty());
    ++count;
  }
  CHECK(count >= 14);
  std::set<std::string> commands;
  for (const auto& e : fs::directory_iterator(kConfigs))
    if (e.path().extension() == ".ini") commands.insert(load_experiment_config(e.path().string()).command);
  CHECK(commands.size() == command_names().size());
}

TEST_CASE("degenerate Desboves map is refused") {
  try {
    run("invalid/desboves_f0.ini", out_dir("desboves_f0"));
    FAIL("expected Degenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
}

TEST_CASE("perturbed Desboves map preserves the Fermat cubic") {
  const IniDocument doc = load_ini((kConfigs / "green_desboves.ini").string());
  const HomEndo f = map_from_section(*doc.section("map"), "green_desboves.ini");
  CHECK(f.k() == 2);
  CHECK(f.d() == 4);
  auto phi = [](const HVec& z) { return z[0] * z[0] * z[0] + z[1] * z[1] * z[1] + z[2] * z[2] * z[2]; };
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    HVec z(3);
    z[0] = rng.complex_normal();
    z[1] = rng.complex_normal();
    z[2] = std::pow(-(z[0] * z[0] * z[0] + z[1] * z[1] * z[1]), 1.0 / 3.0);
    z = normalize(z).coords();
    REQUIRE(std::abs(phi(z)) < 1e-12);
    const HVec y = f.eval_lift(z);
    // On the cubic f_L agrees with f_0 = [z0(z1^3 - z2^3) : z1(z2^3 - z0^3) : z2(z0^3 - z1^3)].
    auto cube = [](Complex c) { return c * c * c; };
    CHECK(std::abs(y[0] - z[0] * (cube(z[1]) - cube(z[2]))) < 1e-12);
    CHECK(std::abs(y[1] - z[1] * (cube(z[2]) - cube(z[0]))) < 1e-12);
    CHECK(std::abs(y[2] - z[2] * (cube(z[0]) - cube(z[1]))) < 1e-12);
    const HVec yu = normalize(y).coords();
    CHECK(std::abs(phi(yu)) < 1e-10);
  }
}

TEST_CASE("command line entry point") {
  const fs::path out = out_dir("cli_green");
  CHECK(cli("green --config " + (kConfigs / "green_power.ini").string() + " --out " + out.string() + " --seed 4") == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(slurp(out / "summary.json").find("\"seed\": 4") != std::string::npos);

  const fs::path bad = fs::temp_directory_path() / "pluridyn_test_cli" / "no_seed.ini";
  std::ofstream(bad) << "[run]\ncommand = green\n[map]\nfamily = power\nparams = 1 2\n";
  CHECK(cli("green --config " + bad.string() + " --out " + out_dir("cli_bad").string()) == 2);
  CHECK(cli("green --config " + (kConfigs / "invalid" / "desboves_f0.ini").string() + " --out " +
            out_dir("cli_deg").string()) == 1);
  CHECK(cli("green --config /nonexistent.ini") != 0);
  CHECK(cli("fly --config " + bad.string()) != 0);
}
