// Desk-scale acceptance run: one PASS/FAIL line per criterion.
//   pluridyn_acceptance [--workers W] [--only 3,7,12]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pluridyn/bifurcation.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/fiber.hpp"
#include "pluridyn/green.hpp"
#include "pluridyn/measure.hpp"
#include "pluridyn/polylike.hpp"
#include "pluridyn/report.hpp"
#include "pluridyn/spectra.hpp"

using namespace pluridyn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome(Parallel)> run;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

HVec hv(Complex a, Complex b) { return HVec{a, b}; }

Polynomial mono(int a, int b, Complex c) {
  Exponent e{};
  e[0] = a;
  e[1] = b;
  return Polynomial::monomial(2, e, c);
}

double power_green(const ProjPoint& p) {
  double m = -1e300, s = 0.0;
  for (int i = 0; i <= p.dim(); ++i) {
    m = std::max(m, std::log(std::abs(p[i])));
    s += std::norm(p[i]);
  }
  return m - 0.5 * std::log(s);
}

Observable circle_cos() { return Observable::scaled(2.0, Observable::chart_re(0, 1)); }

// Exceedance rate of |mean cos(2 pi theta_t)| > eps for theta_t the shifted
// binary digit strings of i.i.d. fair bits.
double digit_rate(int N, double eps, int trials, std::uint64_t seed) {
  Rng rng(seed);
  int hits = 0;
  for (int tr = 0; tr < trials; ++tr) {
    std::vector<int> bits(static_cast<std::size_t>(N + 60));
    for (auto& b : bits) b = static_cast<int>(rng.next() >> 63);
    double s = 0.0;
    for (int t = 0; t < N; ++t) {
      double theta = 0.0, w = 0.5;
      for (int i = 0; i < 60; ++i, w *= 0.5) theta += w * bits[static_cast<std::size_t>(t + i)];
      s += std::cos(2 * kPi * theta);
    }
    hits += std::abs(s / N) > eps;
  }
  return static_cast<double>(hits) / trials;
}

// P(|T| > t) for Student t with nu degrees of freedom, Simpson on the density.
double student_t_two_sided(double t, int nu) {
  const double v = nu;
  const double c = std::exp(std::lgamma(0.5 * (v + 1)) - std::lgamma(0.5 * v)) / std::sqrt(v * kPi);
  auto density = [&](double x) { return c * std::pow(1 + x * x / v, -0.5 * (v + 1)); };
  const double hi = 200.0;
  const int n = 200000;
  const double h = (hi - t) / n;
  double s = density(t) + density(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * density(t + i * h);
  return 2.0 * s * h / 3.0;
}

Outcome fiber_counts(Parallel) {
  std::vector<HomEndo> maps{make_family("power", {2, 2}), make_family("perturbed_power", {2, 2, 1e-2})};
  for (Complex c : {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)})
    maps.push_back(make_family("quadratic_plus_c", {c.real(), c.imag()}));
  int bad = 0, total = 0;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const HomEndo& f = maps[m];
    const int expect = static_cast<int>(std::lround(std::pow(f.d(), f.k())));
    Rng rng(derive_seed(1, {m}));
    for (int t = 0; t < 50; ++t) {
      ++total;
      if (fiber(f, random_fs_point(f.k(), rng)).total_multiplicity() != expect) ++bad;
    }
  }
  return {bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " fibers with multiplicity d^k"};
}

Outcome fixed_point_counts(Parallel par) {
  std::ostringstream os;
  bool ok = true;
  for (auto [k, d] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 2}}) {
    for (const HomEndo& f : {make_family("power", {double(k), double(d)}), make_family("perturbed_power", {double(k), double(d), 0.1})}) {
      const PeriodicSet s = periodic_points(f, 1, 100000, 3, par);
      const auto expect = static_cast<std::size_t>((std::pow(d, k + 1) - 1) / (d - 1));
      ok = ok && s.exhaustive && s.points.size() == expect && s.expected_count == expect;
      os << f.family() << "(" << k << "," << d << ") " << s.points.size() << "/" << expect << "  ";
    }
  }
  return {ok, os.str()};
}

Outcome green_closed_form(Parallel) {
  double worst = 0.0;
  for (auto [k, d] : {std::pair{1, 2}, std::pair{2, 3}, std::pair{3, 2}}) {
    const HomEndo f = make_family("power", {double(k), double(d)});
    Rng rng(derive_seed(4, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(d)}));
    for (int i = 0; i < 1000; ++i) {
      const ProjPoint p = random_fs_point(k, rng);
      worst = std::max(worst, std::abs(green_function(f, p, 1e-10).value - power_green(p)));
    }
  }
  return {worst < 1e-8, "max error " + fmt("%.2e", worst) + " (tol 1e-8)"};
}

Outcome pf_gap(Parallel par) {
  std::ostringstream os;
  bool ok = true;
  const double bound = -std::log(2.0) + 0.15;
  const HomEndo p = make_family("power", {1, 2});
  const HomEndo q = make_family("quadratic_plus_c", {-1, 0});
  // chart_re is odd under z -> -z, so Lambda kills it on z^2 + c in one step.
  const std::vector<std::pair<const HomEndo*, Observable>> cases{
      {&p, Observable::modulus_power(0, 1)}, {&p, Observable::modulus_power(0, 2)},
      {&q, Observable::modulus_power(0, 1)}, {&q, Observable::holder(chart_inverse(HVec{Complex(0.5, 0.2)}, 0), 2.0)}};
  for (const auto& [f, phi] : cases) {
    const PfRate r = pf_convergence_rate(*f, phi, 8, 6, 4, par);
    ok = ok && r.slope <= bound;
    os << f->family() << "/" << phi.name() << " " << fmt("%.3f", r.slope) << "  ";
  }
  return {ok, os.str() + "(bound " + fmt("%.3f", bound) + ")"};
}

Outcome equidistribution(Parallel par) {
  const HomEndo q = make_family("quadratic_plus_c", {-1, 0});
  const ProjPoint b = chart_inverse(HVec{Complex(0.3, 0.2)}, 0);
  const double gap = moment_gap(exact_preimage_measure(q, b, 8, 1u << 16, 0, par), exact_preimage_measure(q, b, 12, 1u << 16, 0, par));
  const HomEndo f = make_family("power", {1, 2});
  const EmpiricalMeasure ref = exact_preimage_measure(f, normalize(hv(1.0, 1.0)), 12, 1u << 16, 0, par);
  const EquidistTable t = periodic_equidistribution_gap(f, {4, 6, 8}, ref, 7, par);
  const double last = t.rows.back().gap;
  const bool ok = gap < 0.02 && t.decreasing && last < 0.01;
  return {ok, "preimage gap 8 vs 12 " + fmt("%.2e", gap) + " (< 0.02), periodic gaps " + fmt("%.4f", t.rows[0].gap) + " " +
                  fmt("%.4f", t.rows[1].gap) + " " + fmt("%.4f", last) + (t.decreasing ? " decreasing" : " NOT decreasing") +
                  " (< 0.01)"};
}

Outcome lyapunov(Parallel) {
  const LyapunovReport a = lyapunov_spectrum(make_family("power", {1, 2}), 1, {10000, 1, 50, 3});
  const LyapunovReport b = lyapunov_spectrum(make_family("power", {2, 3}), 2, {10000, 1, 50, 3});
  const LyapunovReport c = lyapunov_spectrum(make_family("quadratic_plus_c", {-1, 0}), 3, {10000, 1, 50, 3});
  const bool ok1 = std::abs(a.exponents[0] - std::log(2.0)) <= 1e-3;
  const bool ok2 = std::abs(b.exponents[0] - std::log(3.0)) <= 1e-2 && std::abs(b.exponents[1] - std::log(3.0)) <= 1e-2;
  const bool ok3 = c.bound_ok;
  return {ok1 && ok2 && ok3, "power(1,2) " + fmt("%.6f", a.exponents[0]) + ", power(2,3) " + fmt("%.5f", b.exponents[0]) + " " +
                                 fmt("%.5f", b.exponents[1]) + " (log 3 = 1.09861), basilica chi_min " + fmt("%.4f", c.exponents.back()) +
                                 " >= " + fmt("%.4f", 0.5 * std::log(2.0) - 3 * c.stderrs.back())};
}

Outcome entropy(Parallel par) {
  std::ostringstream os;
  bool ok = true;
  for (int k : {1, 2}) {
    const HomEndo f = make_family("power", {double(k), 2});
    // Counts grow like 4^n on the torus, so k = 2 needs coarse eps to keep
    // three unsaturated rows.
    const EmpiricalMeasure cloud = trajectory_cloud(f, k == 1 ? 100000 : 30000, 2000, 40, 21, par);
    const EntropyReport r =
        k == 1 ? entropy_estimate(f, 8, {0.05, 0.1}, cloud, par) : entropy_estimate(f, 4, {0.35, 0.45}, cloud, par);
    const double target = k * std::log(2.0);
    ok = ok && std::isfinite(r.estimate) && std::abs(r.estimate - target) <= 0.15 * target;
    os << "k=" << k << " " << fmt("%.4f", r.estimate) << " vs " << fmt("%.4f", target) << "  ";
  }
  return {ok, os.str() + "(+-15%)"};
}

Outcome dimension(Parallel par) {
  const HomEndo f = make_family("power", {1, 2});
  const LyapunovReport lyap = lyapunov_spectrum(f, 2, {10000, 1, 40, 3});
  const EmpiricalMeasure cloud = trajectory_cloud(f, 100000, 2000, 40, 22, par);
  const DimensionReport d = dimension_bounds_report(f, cloud, lyap);
  const bool ok = std::abs(d.box_dim - 1.0) <= 0.15 && d.within;
  return {ok, "box dim " + fmt("%.4f", d.box_dim) + " (1.0 +- 0.15), bounds [" + fmt("%.4f", d.lower) + ", " + fmt("%.4f", d.upper) +
                  "] +- 0.2"};
}

Outcome clt(Parallel par) {
  const HomEndo f = make_family("power", {1, 2});
  const CltReport r = clt_test(f, circle_cos(), 2000, 500, 7, par);
  bool degenerate = false;
  try {
    clt_test(f, Observable::coboundary(f, Observable::modulus_power(0, 1)), 800, 100, 8, par);
  } catch (const Error& e) {
    degenerate = e.kind() == ErrorKind::DegenerateVariance;
  }
  const bool ok = r.ks.p_value > 0.01 && std::abs(r.sigma2 - 0.5) <= 0.05 && degenerate;
  return {ok, "KS p " + fmt("%.3f", r.ks.p_value) + ", sigma^2 " + fmt("%.4f", r.sigma2) + " (0.5 +- 0.05), coboundary " +
                  (degenerate ? "DegenerateVariance" : "NOT rejected")};
}

Outcome ldt(Parallel par) {
  const HomEndo f = make_family("power", {1, 2});
  const std::vector<int> Ns{25, 50, 100, 200};
  const int trials = 4000;
  const LdtReport r = large_deviation_profile(f, circle_cos(), 0.1, Ns, trials, 10, 0.0, par);
  bool ok = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    const double oracle = digit_rate(Ns[i], 0.1, trials, 99 + i);
    const double rate = r.rows[i].rate;
    ok = ok && rate <= 3 * oracle && rate >= oracle / 3;
    // Non-increasing up to the binomial noise of the previous row.
    if (i > 0) ok = ok && rate <= r.rows[i - 1].rate + 3 * std::sqrt(r.rows[i - 1].rate / trials);
    os << "N=" << Ns[i] << " " << fmt("%.4f", rate) << "/" << fmt("%.4f", oracle) << "  ";
  }
  return {ok, os.str() + "(rate/oracle, factor 3)"};
}

Outcome hypersurface(Parallel par) {
  const HomEndo f = make_family("power", {1, 2});
  const Polynomial line = Polynomial::variable(2, 0) - Polynomial::variable(2, 1);
  const auto gen = hypersurface_potential_decay(f, line, 12, 4000, 9, par);
  const auto exc = hypersurface_potential_decay(f, Polynomial::variable(2, 1), 12, 4000, 9, par);
  const bool ok = gen[12].l1 < 0.05 && exc[12].l1 > 0.2;
  return {ok, "generic line L1 at n=12 " + fmt("%.4f", gen[12].l1) + " (< 0.05), exceptional " + fmt("%.4f", exc[12].l1) + " (> 0.2)"};
}

Outcome polylike(Parallel par) {
  const ConvexDomain V = ConvexDomain::box(hv(0.0, 0.0), {2.0, 2.0});
  const PolyLikeMap f = make_polylike({mono(1, 0, 2.0), mono(0, 2, 1.0)}, V, 1);
  const PolyLikeMap g = make_polylike({mono(1, 0, 2.0) + mono(0, 2, 1e-3), mono(0, 2, 1.0) + mono(1, 1, 1e-3)}, V, 1);
  const AffineMeasure mu = sample_equilibrium_pl(f, 2000, 30, 5, std::nullopt, par);
  double off = 0.0;
  for (const HVec& z : mu.points) off = std::max({off, std::abs(z[0]), std::abs(std::abs(z[1]) - 1.0)});
  const LogJacobian lj = log_jacobian_check(f, mu);
  const DegreeEstimate d1 = dynamical_degree_estimate(f, 1, 6, 2000, 6, default_degree_window(f, mu), std::size_t{1} << 22, par);
  const bool ok_dt = f.topological_degree() == 2 && g.topological_degree() == 2;
  const bool ok_d1 = d1.estimate >= 1.8 && d1.estimate <= 2.2;
  const bool ok_lj = lj.value >= std::log(2.0) - 3 * lj.stderr_;
  const bool ok_mu = off <= 0.01;
  std::string detail = "d_t " + std::to_string(f.topological_degree()) + "/" + std::to_string(g.topological_degree()) +
                       " (perturbed), d_1 " + fmt("%.3f", d1.estimate) + " in [1.8, 2.2]: " + (ok_d1 ? "yes" : "no") +
                       ", <mu, log J> " + fmt("%.4f", lj.value) + " >= log 2, support offset " + fmt("%.1e", off);
  if (!ok_d1) detail += "; mass-defined d_1 of this map is 1, see decisions ledger";
  return {ok_dt && ok_d1 && ok_lj && ok_mu, detail};
}

Outcome bifurcation(Parallel par) {
  const ChartWindow w{0, HVec{Complex(-0.75, 0.0)}, {1.5}};
  const ParamFamily fam = quadratic_family(w);
  FieldOptions orbit;
  orbit.par = par;
  // Per-cell oracle. The stderr comes from 20 batch means, so the 3 stderr
  // test flags a cell with probability P(|T_19| > 3); allow that rate plus
  // three binomial standard deviations.
  const LyapunovField small = family_lyapunov_grid(fam, 32, 4000, 7, orbit);
  const OracleCheck oc = escape_oracle_check(small);
  const double p = student_t_two_sided(3.0, 19);
  const int allowed = static_cast<int>(p * oc.cells + 3 * std::sqrt(p * oc.cells));
  const bool ok_oracle = oc.flagged <= allowed && small.bound_violations == 0;

  FieldOptions pre;
  pre.method = LyapunovMethod::Preimage;
  pre.depth = 10;
  pre.par = par;
  const LyapunovField big = family_lyapunov_grid(fam, 512, 0, 1, pre);
  double near = 0.0, score = 0.0, mass = 0.0;
  bool ok_mass = false;
  try {
    const BifurcationDensity b = bifurcation_measure(big);
    near = mass_near_boundary(b);
    score = b.negative_score;
    mass = b.positive_mass;
    ok_mass = near >= 0.9;
  } catch (const Error& e) {
    return {false, std::string("512^2 density: ") + e.what()};
  }

  const LyapunovField mid = family_lyapunov_grid(fam, 256, 500, 11, orbit);
  const SubmeanReport sr = psh_submean_check(mid, 1000, 3);
  const bool ok_sub = sr.rate < 0.02;
  return {ok_oracle && ok_mass && ok_sub,
          "oracle flags " + std::to_string(oc.flagged) + "/" + std::to_string(oc.cells) + " (<= " + std::to_string(allowed) +
              "), 512^2 mass " + fmt("%.3f", mass) + " near boundary " + fmt("%.4f", near) + " (>= 0.9), lobe score " +
              fmt("%.3f", score) + ", submean rate " + fmt("%.4f", sr.rate) + " (< 0.02)"};
}

Outcome reproducibility(Parallel par) {
  const fs::path configs = fs::path(PLURIDYN_SOURCE_DIR) / "configs";
  const fs::path scratch = fs::temp_directory_path() / "pluridyn_acceptance";
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(configs))
    if (e.path().extension() == ".ini") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int same = 0;
  std::string bad;
  for (const auto& cfg : files) {
    std::vector<std::pair<std::string, std::string>> sums[2];
    for (int r = 0; r < 2; ++r) {
      ConfigOverrides over;
      over.out_dir = (scratch / (cfg.stem().string() + "_" + std::to_string(r))).string();
      over.workers = par.workers;
      fs::remove_all(*over.out_dir);
      for (const auto& o : run_experiment(cfg.string(), over).outputs) sums[r].emplace_back(o.path, o.sha256);
    }
    if (sums[0] == sums[1]) ++same;
    else bad += " " + cfg.filename().string();
  }
  return {same == static_cast<int>(files.size()) && !files.empty(),
          std::to_string(same) + "/" + std::to_string(files.size()) + " configs checksum-identical" + (bad.empty() ? "" : ", differing:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one PASS/FAIL line each", "pluridyn_acceptance"};
  int workers = 1;
  std::vector<int> only;
  app.add_option("--workers", workers)->check(CLI::PositiveNumber);
  app.add_option("--only", only, "criterion numbers")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "fiber counts", 30, fiber_counts},
      {2, "fixed-point counts", 60, fixed_point_counts},
      {3, "Green closed form", 10, green_closed_form},
      {4, "PF spectral gap", 300, pf_gap},
      {5, "equidistribution", 600, equidistribution},
      {6, "Lyapunov exponents", 120, lyapunov},
      {7, "entropy", 900, entropy},
      {8, "dimension", 300, dimension},
      {9, "CLT", 600, clt},
      {10, "LDT", 600, ldt},
      {11, "hypersurface equidistribution", 300, hypersurface},
      {12, "polynomial-like", 600, polylike},
      {13, "bifurcation", 1800, bifurcation},
      {14, "reproducibility", 1800, reproducibility},
  };
  const std::set<int> pick(only.begin(), only.end());
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(Parallel{workers});
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("%-4s %2d %-30s %8.1fs/%-5.0f %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s, o.detail.c_str(),
                in_budget ? "" : " [over budget]");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
