#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/report.hpp"

using namespace pluridyn;

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for holomorphic dynamics in several variables", "pluridyn"};
  app.set_version_flag("--version", PLURIDYN_VERSION);
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment file (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "overrides [run] seed");
    sub->add_option("--out", out, "overrides [run] out");
    sub->add_option("--workers", workers, "overrides [run] workers")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);

  ConfigOverrides over;
  over.command = app.get_subcommands().front()->get_name();
  over.seed = seed;
  over.out_dir = out;
  over.workers = workers;
  try {
    const ExperimentConfig cfg = load_experiment_config(config, over);
    const RunManifest m = run_experiment(cfg);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& o : m.outputs) std::cout << o.sha256 << "  " << (std::filesystem::path(cfg.out_dir) / o.path).string() << '\n';
    std::cout << "manifest: " << (std::filesystem::path(cfg.out_dir) / "manifest.json").string() << '\n';
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
