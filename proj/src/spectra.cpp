#include "pluridyn/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pluridyn/errors.hpp"
#include "pluridyn/fiber.hpp"
#include "pluridyn/stats.hpp"

namespace pluridyn {

namespace {

constexpr double kSingularDet = 1e-12;

// Differential of f from y to the next orbit point, in the frames of both.
// F(y) = lambda * next with complex lambda, so the phases chain consistently.
CMat cocycle_step(const HomEndo& f, const HVec& y, const HVec& next) {
  const HVec fy = f.eval_lift(y);
  Complex lambda = 0.0;
  for (int i = 0; i < next.size(); ++i) lambda += std::conj(next[i]) * fy[i];
  return tangent_frame(next).adjoint() * f.lift_jacobian(y) * tangent_frame(y) / lambda;
}

struct LyapRun {
  std::vector<std::vector<double>> per_step;  // [exponent index][step]
  std::vector<double> jac;
};

std::optional<LyapRun> lyapunov_run(const HomEndo& f, std::uint64_t seed, const LyapunovOptions& opts) {
  const int k = f.k();
  const int len = opts.orbit_len;
  const auto orbit = forward_trajectory(f, len + 1, opts.burn_in, seed);
  LyapRun run;
  run.per_step.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(len), 0.0));
  run.jac.resize(static_cast<std::size_t>(len));
  CMat acc = CMat::Identity(k, k);
  int group_start = 0;
  for (int t = 0; t < len; ++t) {
    const CMat step = cocycle_step(f, orbit[t].coords(), orbit[t + 1].coords());
    if (std::abs(step.determinant()) < kSingularDet) return std::nullopt;
    acc = step * acc;
    run.jac[static_cast<std::size_t>(t)] = std::log(std::abs(differential_chart(f, orbit[t]).matrix.determinant()));
    if ((t + 1 - group_start) < opts.reorth_period && t + 1 < len) continue;
    Eigen::HouseholderQR<CMat> qr(acc);
    const CMat r = qr.matrixQR();
    const int span = t + 1 - group_start;
    for (int i = 0; i < k; ++i) {
      const double l = std::log(std::abs(r(i, i)));
      if (!std::isfinite(l)) return std::nullopt;
      for (int s = group_start; s <= t; ++s) run.per_step[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] = l / span;
    }
    acc = qr.householderQ() * CMat::Identity(k, k);
    group_start = t + 1;
  }
  return run;
}

}  // namespace

LyapunovReport lyapunov_spectrum(const HomEndo& f, std::uint64_t seed, const LyapunovOptions& opts) {
  require(opts.orbit_len >= 100, "orbit_len must be at least 100");
  require(opts.reorth_period >= 1 && opts.reorth_period <= 64, "reorth_period must lie in [1, 64]");
  const int k = f.k();
  std::optional<LyapRun> run;
  int restarts = 0;
  for (; restarts <= opts.max_restarts; ++restarts) {
    run = lyapunov_run(f, derive_seed(seed, {static_cast<std::uint64_t>(restarts)}), opts);
    if (run) break;
  }
  if (!run) fail(ErrorKind::SingularCocycle, "every restart met a singular differential");

  constexpr std::size_t blocks = 20;
  LyapunovReport rep;
  rep.orbit_len = opts.orbit_len;
  rep.reorth_period = opts.reorth_period;
  rep.restarts = restarts;
  std::vector<std::pair<double, double>> ex;
  std::vector<double> total(static_cast<std::size_t>(opts.orbit_len), 0.0);
  for (int i = 0; i < k; ++i) {
    const auto& xs = run->per_step[static_cast<std::size_t>(i)];
    const MeanErr m = batch_means(xs, blocks);
    ex.emplace_back(m.mean, m.stderr_);
    for (std::size_t s = 0; s < xs.size(); ++s) total[s] += xs[s];
  }
  std::sort(ex.begin(), ex.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [v, e] : ex) {
    rep.exponents.push_back(v);
    rep.stderrs.push_back(e);
  }
  const MeanErr sum = batch_means(total, blocks);
  const MeanErr jac = batch_means(run->jac, blocks);
  rep.sum = sum.mean;
  rep.sum_stderr = sum.stderr_;
  rep.jac_average = jac.mean;
  rep.jac_stderr = jac.stderr_;
  const double combined = std::hypot(sum.stderr_, jac.stderr_);
  rep.sum_consistent = std::abs(rep.sum - rep.jac_average) <= 3.0 * combined + 1e-12;
  rep.bound_ok = rep.exponents.back() >= 0.5 * std::log(static_cast<double>(f.d())) - 3.0 * rep.stderrs.back();
  return rep;
}

std::uint64_t periodic_count(int k, int d, int n) {
  require(k >= 1 && d >= 2 && n >= 1, "periodic_count needs k >= 1, d >= 2, n >= 1");
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  // 1 + D + ... + D^k.
  std::uint64_t big_d = 1;
  for (int i = 0; i < n; ++i) {
    if (big_d > kMax / static_cast<std::uint64_t>(d)) return kMax;
    big_d *= static_cast<std::uint64_t>(d);
  }
  std::uint64_t term = 1, sum = 1;
  for (int i = 0; i < k; ++i) {
    if (term > kMax / big_d) return kMax;
    term *= big_d;
    if (sum > kMax - term) return kMax;
    sum += term;
  }
  return sum;
}

namespace {

struct NewtonResult {
  ProjPoint point;
  double residual = 0.0;
};

double periodic_residual(const HomEndo& f, const HVec& z, int n) {
  const auto [y, jac] = lift_orbit_jacobian(f, z, n);
  (void)jac;
  return fs_distance(normalize(y), normalize(z));
}

std::optional<NewtonResult> newton_periodic(const HomEndo& f, int n, const ProjPoint& start) {
  const int k = f.k();
  HVec z = start.coords();
  int polish = 0;
  for (int it = 0; it < 80; ++it) {
    const ProjPoint p = normalize(z);
    const int c = p.coords().argmax_abs();
    const HVec w = chart_map(p, c);
    z = chart_lift(w, c);
    const auto [y, jac] = lift_orbit_jacobian(f, z, n);
    if (std::abs(y[c]) <= kChartInfinity * y.norm()) return std::nullopt;
    const double res = fs_distance(normalize(y), p);
    if (res < kPeriodicTol && ++polish >= 2) return NewtonResult{p, res};
    CVecX g(k);
    int r = 0;
    for (int l = 0; l <= k; ++l) {
      if (l == c) continue;
      g(r) = y[l] / y[c] - w[r];
      ++r;
    }
    const CMat a = chart_jacobian_from_lift(y, jac, c, c) - CMat::Identity(k, k);
    CVecX step = a.fullPivLu().solve(-g);
    if (!step.allFinite()) return std::nullopt;
    const double cap = 0.5 * (1.0 + w.norm());
    if (step.norm() > cap) step *= cap / step.norm();
    HVec w2 = w;
    for (int i = 0; i < k; ++i) w2[i] += step(i);
    z = chart_lift(w2, c);
  }
  const double res = periodic_residual(f, z, n);
  if (res < kPeriodicTol) return NewtonResult{normalize(z), res};
  return std::nullopt;
}

std::vector<Complex> periodic_multipliers(const HomEndo& f, const ProjPoint& p, int n) {
  const int c = p.coords().argmax_abs();
  const HVec z = chart_lift(chart_map(p, c), c);
  const auto [y, jac] = lift_orbit_jacobian(f, z, n);
  const CMat m = chart_jacobian_from_lift(y, jac, c, c);
  Eigen::ComplexEigenSolver<CMat> es(m, false);
  std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end(), [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });
  return out;
}

std::vector<ProjPoint> periodic_seeds(const HomEndo& f, int n, int round, std::uint64_t seed) {
  const int k = f.k();
  std::vector<ProjPoint> seeds;
  if (round == 0) {
    for (int i = 0; i <= k; ++i) {
      HVec e(k + 1);
      e[i] = 1.0;
      seeds.push_back(normalize(e));
      for (int j = i + 1; j <= k; ++j) {
        HVec s(k + 1);
        s[i] = 1.0;
        s[j] = Complex(0.6, 0.3);
        seeds.push_back(normalize(s));
      }
    }
  }
  const auto r = static_cast<std::uint64_t>(round);
  for (std::uint64_t j = 0; j < 2; ++j) {
    TreeOptions opts;
    opts.cap = 4096;
    opts.seed = derive_seed(seed, {r, 0, j, 1});
    opts.fiber.allow_incomplete = true;
    try {
      const BackwardTree t = backward_tree(f, random_fs_point(k, derive_seed(seed, {r, 0, j})), n, opts);
      for (const auto& leaf : t.leaves()) seeds.push_back(leaf.point);
    } catch (const Error&) {
    }
  }
  // Forward iterates land on attracting cycles, which backward trees avoid.
  for (std::uint64_t j = 0; j < 8; ++j) {
    ProjPoint x = random_fs_point(k, derive_seed(seed, {r, 1, j}));
    for (int s = 0; s < 60 * n; ++s) x = f.eval(x);
    seeds.push_back(x);
  }
  for (std::uint64_t j = 0; j < 16; ++j) seeds.push_back(random_fs_point(k, derive_seed(seed, {r, 2, j})));
  return seeds;
}

}  // namespace

PeriodicSet periodic_points(const HomEndo& f, int n, std::size_t cap, std::uint64_t seed, Parallel par) {
  require(n >= 1, "period must be at least 1");
  require(cap >= 1, "cap must be positive");
  PeriodicSet set;
  set.n = n;
  set.expected_count = periodic_count(f.k(), f.d(), n);
  set.exhaustive = set.expected_count <= cap;
  const std::size_t target = set.exhaustive ? static_cast<std::size_t>(set.expected_count) : cap;
  const int max_rounds = set.exhaustive ? 24 : 4;
  for (int round = 0; round < max_rounds && set.points.size() < target; ++round) {
    const auto seeds = periodic_seeds(f, n, round, seed);
    const auto found = parallel_map(seeds.size(), par, [&](std::size_t i) -> std::optional<NewtonResult> {
      try {
        return newton_periodic(f, n, seeds[i]);
      } catch (const Error&) {
        return std::nullopt;
      }
    });
    for (const auto& r : found) {
      if (!r || set.points.size() >= target) continue;
      const bool seen = std::any_of(set.points.begin(), set.points.end(),
                                    [&](const PeriodicPoint& q) { return fs_distance(q.point, r->point) <= kPeriodicDedup; });
      if (seen) continue;
      PeriodicPoint pp;
      pp.point = r->point;
      pp.residual = r->residual;
      set.points.push_back(pp);
    }
  }
  for (auto& pp : set.points) {
    pp.multipliers = periodic_multipliers(f, pp.point, n);
    pp.repelling = std::all_of(pp.multipliers.begin(), pp.multipliers.end(),
                               [](Complex m) { return std::abs(m) > 1.0 + 1e-9; });
  }
  if (set.exhaustive && set.points.size() < target) {
    throw CountShortfall(ErrorKind::IncompleteEnumeration,
                         "found " + std::to_string(set.points.size()) + " of " + std::to_string(target) +
                             " periodic points of period " + std::to_string(n),
                         static_cast<int>(set.points.size()), static_cast<int>(target));
  }
  return set;
}

std::string periodic_to_csv(const PeriodicSet& set) {
  std::ostringstream os;
  os.precision(17);
  const int k = set.points.empty() ? 0 : set.points.front().point.dim();
  os << "period";
  for (int i = 0; i <= k; ++i) os << ",re" << i << ",im" << i;
  os << ",multipliers,repelling,residual\n";
  for (const auto& pp : set.points) {
    os << set.n;
    for (int i = 0; i <= k; ++i) os << ',' << pp.point[i].real() << ',' << pp.point[i].imag();
    os << ',';
    for (std::size_t j = 0; j < pp.multipliers.size(); ++j)
      os << (j ? ";" : "") << pp.multipliers[j].real() << (pp.multipliers[j].imag() < 0 ? "" : "+")
         << pp.multipliers[j].imag() << 'i';
    os << ',' << (pp.repelling ? 1 : 0) << ',' << pp.residual << '\n';
  }
  return os.str();
}

std::vector<Observable> smooth_dictionary(int k) {
  require(k >= 1 && k < kMaxCoords, "dimension out of range");
  using B = Observable::BiTerm;
  auto ex = [](std::initializer_list<int> v) {
    Exponent e{};
    std::copy(v.begin(), v.end(), e.begin());
    return e;
  };
  const Complex one(1.0, 0.0), minus_i(0.0, -1.0);
  std::vector<Observable> out;
  out.push_back(Observable::chart_re(0, 1));
  out.push_back(Observable::chart_im(0, 1));
  out.push_back(Observable::modulus_power(0, 1));
  out.push_back(Observable::modulus_power(0, 2));
  out.push_back(Observable::modulus_power(1, 2));
  out.push_back(Observable::bihomogeneous({B{ex({0, 2}), ex({2, 0}), one}}));
  out.push_back(Observable::bihomogeneous({B{ex({0, 2}), ex({2, 0}), minus_i}}));
  out.push_back(Observable::bihomogeneous({B{ex({1, 1}), ex({2, 0}), one}}));
  out.push_back(Observable::bihomogeneous({B{ex({1, 1}), ex({2, 0}), minus_i}}));
  if (k >= 2) {
    out.push_back(Observable::chart_re(0, 2));
    out.push_back(Observable::chart_im(0, 2));
    out.push_back(Observable::chart_re(1, 2));
  } else {
    out.push_back(Observable::bihomogeneous({B{ex({0, 3}), ex({3, 0}), one}}));
    out.push_back(Observable::bihomogeneous({B{ex({0, 3}), ex({3, 0}), minus_i}}));
    out.push_back(Observable::bihomogeneous({B{ex({0, 2}), ex({1, 1}), one}}));
  }
  return out;
}

double moment_gap(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  require(!a.points.empty() && !b.points.empty(), "moment_gap needs non-empty measures");
  const int k = a.points.front().dim();
  require(b.points.front().dim() == k, "measures live in different dimensions");
  double gap = 0.0;
  for (const auto& phi : smooth_dictionary(k)) gap = std::max(gap, std::abs(a.integrate(phi) - b.integrate(phi)));
  return gap;
}

EquidistTable periodic_equidistribution_gap(const HomEndo& f, const std::vector<int>& n_list,
                                            const EmpiricalMeasure& reference, std::uint64_t seed, Parallel par) {
  require(!n_list.empty(), "n_list must not be empty");
  EquidistTable table;
  for (const int n : n_list) {
    const std::uint64_t expected = periodic_count(f.k(), f.d(), n);
    require(expected <= (1u << 20), "periodic set too large for an exhaustive search");
    const PeriodicSet set = periodic_points(f, n, static_cast<std::size_t>(expected), derive_seed(seed, {static_cast<std::uint64_t>(n)}), par);
    EmpiricalMeasure mu_n;
    const double w = std::pow(static_cast<double>(f.d()), -static_cast<double>(f.k() * n));
    for (const auto& pp : set.points) mu_n.points.push_back(pp.point);
    mu_n.weights.assign(mu_n.points.size(), w);
    table.rows.push_back({n, set.points.size(), moment_gap(mu_n, reference)});
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (table.rows[i].gap > 1.2 * table.rows[i - 1].gap) table.decreasing = false;
  return table;
}

namespace {

// Cell key on Re/Im of conj(z_0) z_j, entries of p p^* that move by at most
// sqrt(2) sin(dist) between points at FS distance dist. Bowen-close points
// are close at every time, so any set of times gives a valid key; one
// keyed time keeps the 3^dims neighbor scan small in higher dimension.
using Cell = std::array<int, 8>;

std::uint64_t pack_cell(const Cell& c, int dims) {
  std::uint64_t key = 0;
  for (int i = 0; i < dims; ++i) key = (key << 10) | static_cast<std::uint64_t>((c[static_cast<std::size_t>(i)] + 512) & 1023);
  return key;
}

Cell cell_of(const HVec* orbit, const std::vector<int>& times, int k, double h) {
  Cell c{};
  std::size_t at = 0;
  for (const int t : times)
    for (int j = 1; j <= k; ++j) {
      const Complex v = std::conj(orbit[t][0]) * orbit[t][j];
      c[at++] = static_cast<int>(std::floor(v.real() / h));
      c[at++] = static_cast<int>(std::floor(v.imag() / h));
    }
  return c;
}

std::size_t separated_count(const std::vector<HVec>& tapes, std::size_t m, int stride, int n, int k, double eps) {
  const std::vector<int> times = (k == 1 && n > 0) ? std::vector<int>{0, n} : std::vector<int>{n};
  const int dims = 2 * k * static_cast<int>(times.size());
  const double h = std::sqrt(2.0) * eps * (1.0 + 1e-9);
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
  std::size_t accepted = 0;
  int offsets = 1;
  for (int i = 0; i < dims; ++i) offsets *= 3;
  for (std::size_t i = 0; i < m; ++i) {
    const HVec* a = &tapes[i * static_cast<std::size_t>(stride)];
    const Cell base = cell_of(a, times, k, h);
    bool separated = true;
    for (int o = 0; o < offsets && separated; ++o) {
      Cell c = base;
      int code = o;
      for (int dmn = 0; dmn < dims; ++dmn) {
        c[static_cast<std::size_t>(dmn)] += code % 3 - 1;
        code /= 3;
      }
      const auto it = cells.find(pack_cell(c, dims));
      if (it == cells.end()) continue;
      for (const std::size_t j : it->second) {
        const HVec* b = &tapes[j * static_cast<std::size_t>(stride)];
        bool apart = false;
        for (int t = n; t >= 0 && !apart; --t) apart = fs_distance_unit(a[t], b[t]) > eps;
        if (!apart) {
          separated = false;
          break;
        }
      }
    }
    if (!separated) continue;
    cells[pack_cell(base, dims)].push_back(i);
    ++accepted;
  }
  return accepted;
}

}  // namespace

EntropyReport entropy_estimate(const HomEndo& f, int n_max, const std::vector<double>& eps_list,
                               const EmpiricalMeasure& cloud, Parallel par) {
  require(n_max >= 0, "n must be non-negative");
  require(!eps_list.empty(), "eps_list must not be empty");
  for (const double e : eps_list) require(e > 0.0 && e < 0.5, "eps must lie in (0, 0.5)");
  require(!cloud.points.empty(), "cloud must not be empty");
  const int k = f.k();
  const std::size_t m = cloud.points.size();
  const int stride = n_max + 1;
  const auto orbits = parallel_map(m, par, [&](std::size_t i) {
    std::vector<HVec> o;
    o.reserve(static_cast<std::size_t>(stride));
    ProjPoint x = cloud.points[i];
    o.push_back(x.coords());
    for (int t = 0; t < n_max; ++t) {
      x = f.eval(x);
      o.push_back(x.coords());
    }
    return o;
  });
  std::vector<HVec> tapes;
  tapes.reserve(m * static_cast<std::size_t>(stride));
  for (const auto& o : orbits) tapes.insert(tapes.end(), o.begin(), o.end());

  EntropyReport rep;
  rep.cloud_size = m;
  rep.n_max = n_max;
  rep.estimate = std::numeric_limits<double>::quiet_NaN();
  const auto saturation = static_cast<std::size_t>(kEntropySaturation * static_cast<double>(m));
  for (const double eps : eps_list) {
    EntropyRow row;
    row.eps = eps;
    std::vector<double> xs, ys;
    bool saturated = false;
    for (int n = 0; n <= n_max; ++n) {
      const std::size_t c = saturated ? m : separated_count(tapes, m, stride, n, k, eps);
      row.counts.push_back(c);
      if (c > saturation) saturated = true;
      if (n >= 1 && !saturated) {
        xs.push_back(n);
        ys.push_back(std::log(static_cast<double>(c)));
      }
    }
    row.fitted_rows = static_cast<int>(xs.size());
    if (xs.size() >= 3) {
      const LinearFit fit = linear_fit(xs, ys);
      row.defined = true;
      row.slope = fit.slope;
      row.r2 = fit.r2;
      if (std::isnan(rep.estimate) || fit.slope > rep.estimate) rep.estimate = fit.slope;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

namespace {

struct BoxHash {
  std::size_t operator()(const std::array<std::int64_t, 6>& a) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto v : a) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

DimensionReport dimension_bounds_report(const HomEndo& f, const EmpiricalMeasure& sample, const LyapunovReport& lyap,
                                        int chart) {
  const int k = f.k();
  require(chart >= 0 && chart <= k, "chart index out of range");
  require(static_cast<int>(lyap.exponents.size()) == k, "Lyapunov report does not match the map");
  require(lyap.exponents.front() > 0.0, "chi_1 must be positive");
  const int dims = 2 * k;
  std::vector<std::array<double, 6>> pts;
  for (const auto& p : sample.points) {
    if (std::abs(p[chart]) <= kChartInfinity) continue;
    const HVec w = chart_map(p, chart);
    if (w.norm() > 1e6) continue;
    std::array<double, 6> x{};
    for (int i = 0; i < k; ++i) {
      x[static_cast<std::size_t>(2 * i)] = w[i].real();
      x[static_cast<std::size_t>(2 * i + 1)] = w[i].imag();
    }
    pts.push_back(x);
  }
  require(pts.size() >= 100, "too few sample points inside the chart");
  std::array<double, 6> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& x : pts)
    for (int i = 0; i < dims; ++i) {
      lo[static_cast<std::size_t>(i)] = std::min(lo[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)]);
      hi[static_cast<std::size_t>(i)] = std::max(hi[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)]);
    }
  double extent = 0.0;
  for (int i = 0; i < dims; ++i) extent = std::max(extent, hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]);
  if (!(extent > 0.0)) fail(ErrorKind::Degenerate, "sample has zero extent in the chart");

  const std::size_t limit = pts.size() / 10;
  std::vector<double> scales;
  std::vector<std::size_t> counts;
  for (int j = 1; j <= 30; ++j) {
    const double s = extent * std::ldexp(1.0, -j);
    std::unordered_set<std::array<std::int64_t, 6>, BoxHash> boxes;
    for (const auto& x : pts) {
      std::array<std::int64_t, 6> b{};
      for (int i = 0; i < dims; ++i)
        b[static_cast<std::size_t>(i)] =
            static_cast<std::int64_t>(std::floor((x[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)]) / s));
      boxes.insert(b);
    }
    if (boxes.size() > limit) break;
    scales.push_back(s);
    counts.push_back(boxes.size());
  }
  require(scales.size() >= 4, "sample too small for four box-counting scales");

  DimensionReport rep;
  rep.points_used = pts.size();
  rep.scales.assign(scales.end() - 4, scales.end());
  rep.counts.assign(counts.end() - 4, counts.end());
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < 4; ++i) {
    xs.push_back(-std::log(rep.scales[i]));
    ys.push_back(std::log(static_cast<double>(rep.counts[i])));
  }
  const LinearFit fit = linear_fit(xs, ys);
  rep.box_dim = fit.slope;
  rep.r2 = fit.r2;
  const double klogd = k * std::log(static_cast<double>(f.d()));
  const double chi1 = lyap.exponents.front();
  rep.lower = klogd / chi1;
  rep.upper = 2.0 * k - (2.0 * lyap.sum - klogd) / chi1;
  rep.within = rep.box_dim >= rep.lower - 0.2 && rep.box_dim <= rep.upper + 0.2;
  return rep;
}

}  // namespace pluridyn
