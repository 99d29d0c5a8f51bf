#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pluridyn/bifurcation.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/green.hpp"
#include "pluridyn/hash.hpp"
#include "pluridyn/measure.hpp"
#include "pluridyn/polylike.hpp"
#include "pluridyn/report.hpp"
#include "pluridyn/spectra.hpp"

#ifndef PLURIDYN_VERSION
#define PLURIDYN_VERSION "unknown"
#endif

namespace pluridyn {

namespace fs = std::filesystem;

namespace {

/// [params] reader that remembers which keys were consumed, so unknown keys
/// (usually typos) fail loudly instead of silently taking defaults.
class Params {
 public:
  explicit Params(const ExperimentConfig& cfg) : cfg_(cfg), sec_(cfg.params()) {}

  const IniEntry* entry(const std::string& key) {
    used_.insert(key);
    return sec_.find(key);
  }
  double num(const std::string& key, double def) {
    const IniEntry* e = entry(key);
    return e ? parse_double(*e, cfg_.path) : def;
  }
  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo = 1) {
    const IniEntry* e = entry(key);
    if (!e) return def;
    const std::int64_t v = parse_int(*e, cfg_.path);
    if (v < lo) config_error(cfg_.path, e->line, key + " must be at least " + std::to_string(lo));
    return v;
  }
  /// Orbit-like lengths, bounded by max_orbit_len.
  int length(const std::string& key, std::int64_t def) {
    const std::int64_t v = integer(key, def);
    if (v > cfg_.max_orbit_len) {
      const IniEntry* e = sec_.find(key);
      config_error(cfg_.path, e ? e->line : sec_.line,
                   key + (e ? "" : " (default " + std::to_string(def) + ")") + " exceeds max_orbit_len");
    }
    return static_cast<int>(v);
  }
  std::string str(const std::string& key, const std::string& def) {
    const IniEntry* e = entry(key);
    return e ? e->value : def;
  }
  bool flag(const std::string& key, bool def) {
    const IniEntry* e = entry(key);
    if (!e) return def;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    config_error(cfg_.path, e->line, key + " must be true or false");
  }
  std::vector<double> nums(const std::string& key, std::vector<double> def) {
    const IniEntry* e = entry(key);
    return e ? parse_doubles(*e, cfg_.path) : def;
  }
  std::vector<int> ints(const std::string& key, std::vector<int> def) {
    const IniEntry* e = entry(key);
    if (!e) return def;
    std::vector<int> out;
    for (double x : parse_doubles(*e, cfg_.path)) {
      if (std::floor(x) != x || x < 0) config_error(cfg_.path, e->line, key + " expects non-negative integers");
      out.push_back(static_cast<int>(x));
    }
    if (out.empty()) config_error(cfg_.path, e->line, key + " is empty");
    return out;
  }
  Observable observable(const std::string& key, const std::string& def, const HomEndo& f) {
    const IniEntry* e = entry(key);
    try {
      return parse_observable(e ? e->value : def, f);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::ConfigError && e) config_error(cfg_.path, e->line, err.what());
      throw;
    }
  }
  /// Leaf budget check for exact trees of the given size.
  void tree_budget(double leaves, const std::string& what) {
    if (leaves > static_cast<double>(cfg_.max_tree_leaves)) {
      config_error(cfg_.path, sec_.line, what + " needs " + std::to_string(static_cast<long long>(leaves)) +
                                             " tree leaves, above max_tree_leaves");
    }
  }
  void finish() const {
    for (const auto& e : sec_.entries)
      if (!used_.count(e.key)) config_error(cfg_.path, e.line, "unknown parameter '" + e.key + "' for " + cfg_.command);
  }

 private:
  const ExperimentConfig& cfg_;
  const IniSection& sec_;
  std::set<std::string> used_;
};

class Run {
 public:
  explicit Run(const ExperimentConfig& cfg) : cfg(cfg), params(cfg), par{cfg.workers} {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec || !fs::is_directory(cfg.out_dir)) fail(ErrorKind::IoFailure, "cannot create output directory " + cfg.out_dir);
    summary.command = cfg.command;
    summary.seed = cfg.seed;
    manifest.command = cfg.command;
    manifest.config_hash = sha256_hex(cfg.text);
    manifest.version = PLURIDYN_VERSION;
    manifest.seed = cfg.seed;
    manifest.workers = cfg.workers;
    format = parse_table_format(params.str("tables", "csv"));
  }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (fs::path(cfg.out_dir) / name).string();
  }
  void table(const std::string& stem, const Table& t) {
    emit_table(t, format, path(stem + (format == TableFormat::Csv ? ".csv" : ".json")));
  }
  void grid(const std::string& stem, const ChartGrid& g, const RenderOptions& ro) {
    write_grid(g, path(stem + ".grid"));
    render_ppm(g, ro, path(stem + ".ppm"));
  }
  template <class Fn>
  auto timed(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      manifest.timings.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  }
  void warn(const std::string& w) { manifest.warnings.push_back(w); }
  void set(const std::string& name, TableValue v) { summary.values[name] = std::move(v); }

  RunManifest close() {
    {
      const std::string sp = path("summary.json");
      std::ofstream out(sp, std::ios::binary);
      out << summary_to_json(summary);
      if (!out) fail(ErrorKind::IoFailure, "cannot write " + sp);
    }
    for (const auto& name : files_) {
      const std::string p = (fs::path(cfg.out_dir) / name).string();
      manifest.outputs.push_back({name, sha256_file(p), fs::file_size(p)});
    }
    const std::string mp = (fs::path(cfg.out_dir) / "manifest.json").string();
    std::ofstream out(mp, std::ios::binary);
    if (!out) fail(ErrorKind::IoFailure, "cannot write " + mp);
    out << manifest_to_json(manifest);
    if (!out) fail(ErrorKind::IoFailure, "short write on " + mp);
    return manifest;
  }

  const ExperimentConfig& cfg;
  Params params;
  Parallel par;
  TableFormat format = TableFormat::Csv;
  Summary summary;
  RunManifest manifest;

 private:
  std::vector<std::string> files_;
};

std::int64_t as_int(std::size_t n) { return static_cast<std::int64_t>(n); }

HomEndo load_endo(Run& run) {
  const IniSection& sec = *run.cfg.doc.section("map");
  HomEndo f = run.timed("map", [&] {
    if (const IniEntry* e = sec.find("file")) return load_map_file(run.cfg.resolve(e->value));
    return map_from_section(sec, run.cfg.path);
  });
  run.summary.map_hash = f.hash();
  run.set("k", f.k());
  run.set("d", f.d());
  return f;
}

/// 2n numbers as n complex values; `def` fills when the key is absent.
HVec complex_list(Run& run, const std::string& key, int n, Complex def = 0.0) {
  HVec v(n);
  for (int i = 0; i < n; ++i) v[i] = def;
  const IniEntry* e = run.params.entry(key);
  if (!e) return v;
  const auto xs = parse_doubles(*e, run.cfg.path);
  if (static_cast<int>(xs.size()) != 2 * n) config_error(run.cfg.path, e->line, key + " needs " + std::to_string(2 * n) + " numbers");
  for (int i = 0; i < n; ++i) v[i] = {xs[2 * i], xs[2 * i + 1]};
  return v;
}

void add_moments(Run& run, const std::string& stem, int k, const std::function<MeanErr(const Observable&)>& mean) {
  Table t{{"observable", "mean", "stderr"}, {}};
  for (const Observable& phi : smooth_dictionary(k)) {
    const MeanErr m = mean(phi);
    t.add_row({phi.name(), m.mean, m.stderr_});
  }
  run.table(stem, t);
}

void cmd_green(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const int res = static_cast<int>(p.integer("res", 64, 4));
  const int chart = static_cast<int>(p.integer("chart", 0, 0));
  if (chart > f.k()) config_error(run.cfg.path, run.cfg.params().line, "chart index above k");
  const HVec center = complex_list(run, "center", f.k());
  const double half = p.num("half", 1.5);
  const double tol = p.num("tol", 1e-10);
  p.finish();
  const ChartWindow w{chart, center, std::vector<double>(static_cast<std::size_t>(f.k()), half)};
  w.validate();

  ChartGrid g(w, res, res);
  run.timed("green", [&] {
    g.values = parallel_map(g.values.size(), run.par, [&](std::size_t i) {
      HVec z = center;
      z[0] = g.point(static_cast<int>(i % res), static_cast<int>(i / res));
      return green_function(f, chart_inverse(z, chart), tol).value;
    });
  });
  const DensityGrid dens = run.timed("density", [&] { return green_density_grid(f, w, res, tol, run.par); });
  run.timed("write", [&] {
    run.grid("green", g, {Palette::Heat, false});
    run.grid("density", dens.grid, {Palette::Heat, true});
  });
  run.set("res", res);
  run.set("green_terms", green_terms(f, tol));
  run.set("sup_abs_v", f.sup_abs_v());
  run.set("density_mass", dens.mass);
  run.set("negative_score", dens.negative_score);
  run.set("richardson_mass", dens.richardson_mass);
  run.set("richardson_negative_score", dens.richardson_negative_score);
}

void cmd_measure(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const std::string method = p.str("method", "backward");
  EmpiricalMeasure m;
  if (method == "backward" || method == "trajectory") {
    const int samples = static_cast<int>(p.integer("samples", 2000));
    const int burn_in = p.length("burn_in", kDefaultBurnIn);
    const int length = method == "trajectory" ? p.length("length", 100) : 0;
    p.finish();
    m = run.timed("sample", [&] {
      return method == "backward" ? sample_equilibrium(f, samples, burn_in, run.cfg.seed, run.par)
                                  : trajectory_cloud(f, samples, length, burn_in, run.cfg.seed, run.par);
    });
  } else if (method == "tree") {
    const int depth = static_cast<int>(p.integer("depth", 6));
    const IniEntry* ae = p.entry("anchor");
    const HVec raw = complex_list(run, "anchor", f.k() + 1);
    p.finish();
    p.tree_budget(std::pow(static_cast<double>(f.d()), f.k() * depth), "depth");
    const ProjPoint a = ae ? ProjPoint::from_raw(raw) : random_fs_point(f.k(), derive_seed(run.cfg.seed, {1}));
    m = run.timed("tree", [&] {
      return exact_preimage_measure(f, a, depth, static_cast<std::size_t>(run.cfg.max_tree_leaves), run.cfg.seed, run.par);
    });
  } else {
    config_error(run.cfg.path, run.cfg.params().line, "method must be backward, trajectory or tree");
  }
  if (m.provenance.dropped > 0) run.warn(std::to_string(m.provenance.dropped) + " samples dropped on incomplete fibers");
  run.timed("write", [&] {
    std::ofstream(run.path("measure.json"), std::ios::binary) << measure_to_json(m);
    add_moments(run, "moments", f.k(), [&](const Observable& phi) { return m.mean(phi); });
  });
  run.set("method", method);
  run.set("points", as_int(m.points.size()));
  run.set("dropped", m.provenance.dropped);
}

void cmd_pf_rate(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const Observable phi = p.observable("observable", "re 0 1", f);
  const int n_max = static_cast<int>(p.integer("n_max", 6));
  const int probes = static_cast<int>(p.integer("probes", 8));
  p.finish();
  p.tree_budget(std::pow(static_cast<double>(f.d()), f.k() * (n_max + 3)), "n_max");
  const PfRate r = run.timed("pf", [&] { return pf_convergence_rate(f, phi, n_max, probes, run.cfg.seed, run.par); });
  Table t{{"n", "deviation"}, {}};
  for (std::size_t i = 0; i < r.n.size(); ++i) t.add_row({r.n[i], r.deviation[i]});
  run.timed("write", [&] { run.table("pf_rate", t); });
  run.set("observable", phi.name());
  run.set("c_phi", r.c_phi);
  run.set("slope", r.slope);
  run.set("r2", r.r2);
  run.set("fitted_rows", r.fitted_rows);
  run.set("target_slope", -std::log(static_cast<double>(f.d())));
}

void cmd_mixing(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const Observable phi = p.observable("phi", "re 0 1", f);
  const Observable psi = p.observable("psi", "re 0 1", f);
  const int n_max = p.length("n_max", 8);
  const int samples = static_cast<int>(p.integer("samples", 4000));
  p.finish();
  const CorrelationTable c =
      run.timed("correlations", [&] { return correlation_decay(f, phi, psi, n_max, samples, run.cfg.seed, run.par); });
  Table t{{"n", "value", "err"}, {}};
  for (const auto& r : c.rows) t.add_row({r.n, r.value, r.err});
  run.timed("write", [&] { run.table("correlations", t); });
  run.set("slope", c.slope);
  run.set("fitted_rows", c.fitted_rows);
  run.set("slope_bound", -0.5 * std::log(static_cast<double>(f.d())));
}

void cmd_clt(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const Observable phi = p.observable("observable", "re 0 1", f);
  const int N = p.length("N", 1000);
  const int trajectories = static_cast<int>(p.integer("trajectories", 64));
  p.finish();
  const CltReport r = run.timed("clt", [&] { return clt_test(f, phi, N, trajectories, run.cfg.seed, run.par); });
  run.set("observable", phi.name());
  run.set("mean", r.mean);
  run.set("mean_err", r.mean_err);
  run.set("mean_backward", r.mean_backward);
  run.set("mean_backward_err", r.mean_backward_err);
  run.set("means_agree", r.means_agree);
  run.set("sigma2", r.sigma2);
  run.set("sigma", r.sigma);
  run.set("series_terms", r.series_terms);
  run.set("direct_sigma2", r.direct_sigma2);
  run.set("growth_ratio", r.growth_ratio);
  run.set("ks_statistic", r.ks.statistic);
  run.set("ks_p_value", r.ks.p_value);
}

void cmd_ldt(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const Observable phi = p.observable("observable", "re 0 1", f);
  const double eps = p.num("eps", 0.1);
  const std::vector<int> Ns = p.ints("N", {25, 50, 100, 200});
  for (int n : Ns) {
    if (n < 1 || n > run.cfg.max_orbit_len) config_error(run.cfg.path, run.cfg.params().line, "N values must lie in 1..max_orbit_len");
  }
  const int trajectories = static_cast<int>(p.integer("trajectories", 2000));
  std::optional<double> mean;
  if (p.entry("mean")) mean = p.num("mean", 0.0);
  p.finish();
  const LdtReport r = run.timed("ldt", [&] {
    return large_deviation_profile(f, phi, eps, Ns, trajectories, run.cfg.seed, mean, run.par);
  });
  Table t{{"N", "rate", "events", "estimable"}, {}};
  for (const auto& row : r.rows) t.add_row({row.N, row.rate, row.events, row.estimable});
  run.timed("write", [&] { run.table("ldt", t); });
  run.set("mean", r.mean);
  run.set("eps", eps);
  run.set("slope", r.slope);
  run.set("r2", r.r2);
  run.set("fitted_rows", r.fitted_rows);
}

LyapunovReport lyapunov_of(Run& run, const HomEndo& f) {
  auto& p = run.params;
  LyapunovOptions o;
  o.orbit_len = p.length("orbit_len", 10000);
  o.reorth_period = static_cast<int>(p.integer("reorth", 1));
  o.burn_in = p.length("burn_in", kDefaultBurnIn);
  p.finish();
  return run.timed("lyapunov", [&] { return lyapunov_spectrum(f, derive_seed(run.cfg.seed, {2}), o); });
}

void cmd_lyapunov(Run& run) {
  const HomEndo f = load_endo(run);
  const LyapunovReport r = lyapunov_of(run, f);
  Table t{{"index", "exponent", "stderr"}, {}};
  for (std::size_t i = 0; i < r.exponents.size(); ++i) t.add_row({as_int(i + 1), r.exponents[i], r.stderrs[i]});
  run.timed("write", [&] { run.table("lyapunov", t); });
  if (!r.sum_consistent) run.warn("exponent sum and Jacobian average disagree beyond 3 stderr");
  run.set("sum", r.sum);
  run.set("sum_stderr", r.sum_stderr);
  run.set("jac_average", r.jac_average);
  run.set("jac_stderr", r.jac_stderr);
  run.set("sum_consistent", r.sum_consistent);
  run.set("bound_ok", r.bound_ok);
  run.set("restarts", r.restarts);
  run.set("half_log_d", 0.5 * std::log(static_cast<double>(f.d())));
}

std::string complex_text(Complex c) { return format_double(c.real()) + (c.imag() < 0 ? "" : "+") + format_double(c.imag()) + "i"; }

void cmd_periodic(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const int n = static_cast<int>(p.integer("n", 1));
  const auto cap = static_cast<std::size_t>(p.integer("cap", 10000));
  p.finish();
  const PeriodicSet s = run.timed("periodic", [&] { return periodic_points(f, n, cap, run.cfg.seed, run.par); });
  Table t;
  t.columns.push_back("period");
  for (int i = 0; i <= f.k(); ++i) {
    t.columns.push_back("re" + std::to_string(i));
    t.columns.push_back("im" + std::to_string(i));
  }
  for (const char* c : {"multipliers", "repelling", "residual"}) t.columns.push_back(c);
  for (const auto& pp : s.points) {
    std::vector<TableValue> row{n};
    for (int i = 0; i <= f.k(); ++i) {
      row.push_back(pp.point[i].real());
      row.push_back(pp.point[i].imag());
    }
    std::string mult;
    for (std::size_t j = 0; j < pp.multipliers.size(); ++j) mult += (j ? ";" : "") + complex_text(pp.multipliers[j]);
    row.push_back(mult);
    row.push_back(pp.repelling);
    row.push_back(pp.residual);
    t.add_row(std::move(row));
  }
  run.timed("write", [&] { run.table("periodic", t); });
  run.set("n", n);
  run.set("found", as_int(s.points.size()));
  run.set("expected_count", s.expected_count > static_cast<std::uint64_t>(INT64_MAX) ? TableValue(std::string("saturated"))
                                                                                        : TableValue(static_cast<std::int64_t>(s.expected_count)));
  run.set("exhaustive", s.exhaustive);
}

void cmd_entropy(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const int n_max = static_cast<int>(p.integer("n_max", 6));
  const std::vector<double> eps = p.nums("eps", {0.3, 0.2});
  const int cloud_size = static_cast<int>(p.integer("cloud", 2000));
  const int length = p.length("length", 20);
  const int burn_in = p.length("burn_in", kDefaultBurnIn);
  p.finish();
  const EmpiricalMeasure cloud =
      run.timed("cloud", [&] { return trajectory_cloud(f, cloud_size, length, burn_in, run.cfg.seed, run.par); });
  const EntropyReport r = run.timed("entropy", [&] { return entropy_estimate(f, n_max, eps, cloud, run.par); });
  Table t{{"eps", "n", "count"}, {}};
  for (const auto& row : r.rows) {
    if (!row.defined) run.warn("entropy undefined at eps " + format_double(row.eps));
    for (std::size_t n = 0; n < row.counts.size(); ++n) t.add_row({row.eps, as_int(n), as_int(row.counts[n])});
  }
  run.timed("write", [&] { run.table("entropy", t); });
  run.set("estimate", r.estimate);
  run.set("cloud_size", as_int(r.cloud_size));
  run.set("k_log_d", f.k() * std::log(static_cast<double>(f.d())));
}

void cmd_dimension(Run& run) {
  const HomEndo f = load_endo(run);
  auto& p = run.params;
  const int samples = static_cast<int>(p.integer("samples", 20000));
  const int length = p.length("length", 50);
  const int burn_in = p.length("sample_burn_in", kDefaultBurnIn);
  const int chart = static_cast<int>(p.integer("chart", 0, 0));
  if (chart > f.k()) config_error(run.cfg.path, run.cfg.params().line, "chart index above k");
  LyapunovOptions lo;
  lo.orbit_len = p.length("lyapunov_orbit_len", 5000);
  lo.burn_in = p.length("lyapunov_burn_in", kDefaultBurnIn);
  p.finish();
  const EmpiricalMeasure cloud =
      run.timed("cloud", [&] { return trajectory_cloud(f, samples, length, burn_in, run.cfg.seed, run.par); });
  const LyapunovReport lyap = run.timed("lyapunov", [&] { return lyapunov_spectrum(f, derive_seed(run.cfg.seed, {2}), lo); });
  const DimensionReport r = run.timed("dimension", [&] { return dimension_bounds_report(f, cloud, lyap, chart); });
  Table t{{"scale", "count"}, {}};
  for (std::size_t i = 0; i < r.scales.size(); ++i) t.add_row({r.scales[i], as_int(r.counts[i])});
  run.timed("write", [&] { run.table("dimension", t); });
  run.set("box_dim", r.box_dim);
  run.set("r2", r.r2);
  run.set("lower", r.lower);
  run.set("upper", r.upper);
  run.set("within", r.within);
  run.set("points_used", as_int(r.points_used));
}

PolyLikeMap load_polylike(Run& run) {
  const IniSection& sec = *run.cfg.doc.section("polylike");
  PolyLikeMap f = run.timed("map", [&] { return polylike_from_section(sec, run.cfg.path, derive_seed(run.cfg.seed, {3})); });
  run.summary.map_hash = f.hash();
  run.set("k", f.k());
  run.set("topological_degree", f.topological_degree());
  run.set("properness_margin", f.properness_margin());
  return f;
}

void cmd_polylike_measure(Run& run) {
  const PolyLikeMap f = load_polylike(run);
  auto& p = run.params;
  const int samples = static_cast<int>(p.integer("samples", 2000));
  const int burn_in = p.length("burn_in", 30);
  const double radius = p.num("probe_radius", 0.05);
  p.finish();
  const AffineMeasure m = run.timed("sample", [&] { return sample_equilibrium_pl(f, samples, burn_in, run.cfg.seed, std::nullopt, run.par); });
  const LogJacobian lj = run.timed("log_jacobian", [&] { return log_jacobian_check(f, m); });
  const double nb = run.timed("near_boundary", [&] { return near_boundary_fraction(f, m, radius); });
  Table t;
  for (int i = 0; i < f.k(); ++i) {
    t.columns.push_back("re" + std::to_string(i + 1));
    t.columns.push_back("im" + std::to_string(i + 1));
  }
  t.columns.push_back("weight");
  for (std::size_t s = 0; s < m.points.size(); ++s) {
    std::vector<TableValue> row;
    for (int i = 0; i < f.k(); ++i) {
      row.push_back(m.points[s][i].real());
      row.push_back(m.points[s][i].imag());
    }
    row.push_back(m.weights[s]);
    t.add_row(std::move(row));
  }
  run.timed("write", [&] { run.table("mu", t); });
  if (m.provenance.dropped > 0) run.warn(std::to_string(m.provenance.dropped) + " orbits dropped on incomplete fibers");
  if (!lj.ok) run.warn("log Jacobian below log d_t - 3 stderr");
  run.set("samples", as_int(m.points.size()));
  run.set("dropped", m.provenance.dropped);
  run.set("log_jacobian", lj.value);
  run.set("log_jacobian_stderr", lj.stderr_);
  run.set("log_jacobian_bound", lj.bound);
  run.set("log_jacobian_ok", lj.ok);
  run.set("near_boundary_fraction", nb);
}

void cmd_polylike_degree(Run& run) {
  const PolyLikeMap f = load_polylike(run);
  auto& p = run.params;
  std::vector<int> all;
  for (int q = 0; q <= f.k(); ++q) all.push_back(q);
  const std::vector<int> ps = p.ints("p", all);
  for (int q : ps)
    if (q > f.k()) config_error(run.cfg.path, run.cfg.params().line, "p must lie in 0..k");
  const int n_max = static_cast<int>(p.integer("n_max", 5));
  const int mc = static_cast<int>(p.integer("mc_samples", 500));
  const int mu_samples = static_cast<int>(p.integer("mu_samples", 500));
  const int burn_in = p.length("burn_in", 20);
  p.finish();
  const AffineMeasure mu =
      run.timed("sample", [&] { return sample_equilibrium_pl(f, mu_samples, burn_in, derive_seed(run.cfg.seed, {4}), std::nullopt, run.par); });
  const ConvexDomain W = default_degree_window(f, mu);
  Table t{{"p", "n", "mass", "stderr"}, {}};
  for (int q : ps) {
    const DegreeEstimate e = run.timed("degree_p" + std::to_string(q), [&] {
      return dynamical_degree_estimate(f, q, n_max, mc, derive_seed(run.cfg.seed, {5, static_cast<std::uint64_t>(q)}), W,
                                       static_cast<std::size_t>(run.cfg.max_tree_leaves), run.par);
    });
    for (std::size_t n = 0; n < e.masses.size(); ++n) t.add_row({q, as_int(n + 1), e.masses[n], e.stderrs[n]});
    run.set("d_" + std::to_string(q), e.estimate);
    run.set("r2_" + std::to_string(q), e.r2);
  }
  run.timed("write", [&] { run.table("degrees", t); });
}

ParamFamily load_family(Run& run) {
  const IniSection& sec = *run.cfg.doc.section("family");
  const std::string& src = run.cfg.path;
  std::set<std::string> known{"name", "fixed", "center", "half"};
  for (const auto& e : sec.entries)
    if (!known.count(e.key)) config_error(src, e.line, "unknown [family] key '" + e.key + "'");
  const IniEntry* ne = sec.find("name");
  const std::string name = ne ? ne->value : "quadratic_plus_c";
  std::vector<double> fixed;
  if (const IniEntry* e = sec.find("fixed")) fixed = parse_doubles(*e, src);
  const IniEntry* ce = sec.find("center");
  const IniEntry* he = sec.find("half");
  if (!ce || !he) config_error(src, sec.line, "family needs center and half");
  const auto c = parse_doubles(*ce, src);
  if (c.empty() || c.size() % 2 || c.size() > 4) config_error(src, ce->line, "center needs 2 or 4 numbers");
  ChartWindow w;
  w.center = HVec(static_cast<int>(c.size() / 2));
  for (int i = 0; i < w.center.size(); ++i) w.center[i] = {c[2 * i], c[2 * i + 1]};
  const double half = parse_double(*he, src);
  if (!(half > 0.0)) config_error(src, he->line, "half must be positive");
  w.half_widths.assign(static_cast<std::size_t>(w.center.size()), half);
  if (name == "quadratic_plus_c" && !fixed.empty()) config_error(src, sec.line, "quadratic_plus_c takes no fixed parameters");
  std::ostringstream key;
  key << name << ';';
  for (double x : fixed) key << format_double(x) << ' ';
  for (double x : c) key << format_double(x) << ' ';
  key << format_double(half);
  run.summary.map_hash = sha256_hex(key.str());
  return name == "quadratic_plus_c" ? quadratic_family(w) : endo_family(name, fixed, w);
}

void cmd_bifurcation(Run& run) {
  const ParamFamily fam = load_family(run);
  auto& p = run.params;
  const int res = static_cast<int>(p.integer("res", 128, 16));
  const std::string method = p.str("method", "preimage");
  FieldOptions o;
  o.par = run.par;
  int orbit_len = 0;
  if (method == "preimage") {
    o.method = LyapunovMethod::Preimage;
    o.depth = static_cast<int>(p.integer("depth", 8));
    const HVec a = complex_list(run, "anchor", 1, o.anchor);
    o.anchor = a[0];
  } else if (method == "orbit") {
    orbit_len = p.length("orbit_len", 2000);
    o.burn_in = p.length("burn_in", 40);
  } else {
    config_error(run.cfg.path, run.cfg.params().line, "method must be orbit or preimage");
  }
  const int trials = static_cast<int>(p.integer("submean_trials", 1000));
  const int boundary_iter = static_cast<int>(p.integer("boundary_iter", 2000));
  p.finish();

  const LyapunovField field = run.timed("field", [&] { return family_lyapunov_grid(fam, res, orbit_len, run.cfg.seed, o); });
  for (const auto& w : field.warnings) run.warn(w);
  const int masked = res * res - field.included();
  if (masked > 0) run.warn(std::to_string(masked) + " masked cells");
  Table t{{"ix", "iy", "re", "im", "L", "stderr", "masked"}, {}};
  for (int iy = 0; iy < res; ++iy)
    for (int ix = 0; ix < res; ++ix) {
      const Complex s = field.grid.point(ix, iy);
      const std::size_t i = field.index(ix, iy);
      t.add_row({ix, iy, s.real(), s.imag(), field.grid.values[i], field.stderrs[i], field.masked[i] != 0});
    }
  run.timed("write", [&] {
    run.grid("lyapunov", field.grid, {Palette::Heat, false});
    run.table("field", t);
  });
  run.set("name", fam.name);
  run.set("res", res);
  run.set("method", field.method);
  run.set("included", field.included());
  run.set("lower_bound", field.lower_bound);
  run.set("bound_violations", field.bound_violations);
  if (fam.is_quadratic()) {
    const OracleCheck oc = escape_oracle_check(field);
    run.set("oracle_cells", oc.cells);
    run.set("oracle_flagged", oc.flagged);
    run.set("oracle_max_abs", oc.max_abs);
  }
  if (o.method == LyapunovMethod::Orbit && fam.params() == 1) {
    const SubmeanReport sr = run.timed("submean", [&] { return psh_submean_check(field, trials, derive_seed(run.cfg.seed, {6})); });
    run.set("submean_rate", sr.rate);
  }
  if (fam.params() != 1) {
    run.warn("bifurcation measure needs a one-parameter window; density skipped");
    return;
  }
  const BifurcationDensity b = run.timed("density", [&] { return bifurcation_measure(field); });
  run.timed("write_density", [&] { run.grid("density", b.grid, {Palette::Heat, true}); });
  run.set("positive_mass", b.positive_mass);
  run.set("negative_mass", b.negative_mass);
  run.set("negative_score", b.negative_score);
  if (fam.is_quadratic()) {
    run.set("mass_near_boundary", run.timed("boundary", [&] { return mass_near_boundary(b, 3, boundary_iter); }));
  }
}

void cmd_render(Run& run) {
  auto& p = run.params;
  const std::string input = run.cfg.resolve(p.str("input", ""));
  RenderOptions ro;
  ro.palette = parse_palette(p.str("palette", "heat"));
  ro.log_scale = p.flag("log_scale", false);
  std::string name = p.str("output", fs::path(input).stem().string() + ".ppm");
  p.finish();
  run.summary.map_hash = sha256_file(input);
  run.timed("render", [&] { render_field(input, ro, run.path(name)); });
  const ChartGrid g = read_grid(input);
  run.set("nx", g.nx);
  run.set("ny", g.ny);
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
  Run run(cfg);
  const std::string& c = cfg.command;
  if (c == "green") cmd_green(run);
  else if (c == "measure") cmd_measure(run);
  else if (c == "pf-rate") cmd_pf_rate(run);
  else if (c == "mixing") cmd_mixing(run);
  else if (c == "clt") cmd_clt(run);
  else if (c == "ldt") cmd_ldt(run);
  else if (c == "lyapunov") cmd_lyapunov(run);
  else if (c == "periodic") cmd_periodic(run);
  else if (c == "entropy") cmd_entropy(run);
  else if (c == "dimension") cmd_dimension(run);
  else if (c == "polylike-degree") cmd_polylike_degree(run);
  else if (c == "polylike-measure") cmd_polylike_measure(run);
  else if (c == "bifurcation") cmd_bifurcation(run);
  else if (c == "render") cmd_render(run);
  else fail(ErrorKind::ConfigError, "unknown command '" + c + "'");
  return run.close();
}

RunManifest run_experiment(const std::string& config_path, const ConfigOverrides& over) {
  return run_experiment(load_experiment_config(config_path, over));
}

}  // namespace pluridyn
