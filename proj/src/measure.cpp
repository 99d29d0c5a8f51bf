#include "pluridyn/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "pluridyn/errors.hpp"
#include "pluridyn/ini.hpp"

namespace pluridyn {

Observable::Observable(ObservableKind kind, std::string name, Fn fn, double nu)
    : kind_(kind), name_(std::move(name)), fn_(std::move(fn)), nu_(nu) {
  require(nu_ > 0.0 && nu_ <= 2.0, "Hoelder exponent must lie in (0, 2]");
}

Observable Observable::chart_re(int i, int j) {
  require(i >= 0 && j >= 0 && i < kMaxCoords && j < kMaxCoords, "coordinate index out of range");
  return {ObservableKind::ChartPolynomial, "re " + std::to_string(i) + " " + std::to_string(j),
          [i, j](const ProjPoint& p) { return (std::conj(p[i]) * p[j]).real(); }};
}

Observable Observable::chart_im(int i, int j) {
  require(i >= 0 && j >= 0 && i < kMaxCoords && j < kMaxCoords, "coordinate index out of range");
  return {ObservableKind::ChartPolynomial, "im " + std::to_string(i) + " " + std::to_string(j),
          [i, j](const ProjPoint& p) { return (std::conj(p[i]) * p[j]).imag(); }};
}

Observable Observable::modulus_power(int i, int pw) {
  require(i >= 0 && i < kMaxCoords && pw >= 1, "modpow needs a valid index and power >= 1");
  return {ObservableKind::ChartPolynomial, "modpow " + std::to_string(i) + " " + std::to_string(pw),
          [i, pw](const ProjPoint& p) { return std::pow(std::norm(p[i]), pw); }};
}

Observable Observable::bihomogeneous(std::vector<BiTerm> terms) {
  require(!terms.empty(), "bihomogeneous observable needs terms");
  const int m = std::accumulate(terms[0].a.begin(), terms[0].a.end(), 0);
  for (const auto& t : terms) {
    require(std::accumulate(t.a.begin(), t.a.end(), 0) == m && std::accumulate(t.b.begin(), t.b.end(), 0) == m,
            "bihomogeneous terms need |a| = |b| = m");
  }
  return {ObservableKind::ChartPolynomial, "bihomogeneous", [terms = std::move(terms)](const ProjPoint& p) {
            Complex s = 0.0;
            for (const auto& t : terms) {
              Complex za = t.c, zb = 1.0;
              for (int i = 0; i <= p.dim(); ++i) {
                za *= ipow(p[i], t.a[static_cast<std::size_t>(i)]);
                zb *= ipow(p[i], t.b[static_cast<std::size_t>(i)]);
              }
              s += za * std::conj(zb);
            }
            return s.real();
          }};
}

Observable Observable::coordinate_modulus(int i) {
  require(i >= 0 && i < kMaxCoords, "coordinate index out of range");
  return {ObservableKind::CoordinateModulus, "modulus " + std::to_string(i),
          [i](const ProjPoint& p) { return std::abs(p[i]); }, 1.0};
}

Observable Observable::holder(const ProjPoint& center, double nu) {
  require(nu > 0.0 && nu <= 2.0, "Hoelder exponent must lie in (0, 2]");
  std::ostringstream name;
  name << "holder " << nu;
  return {ObservableKind::Holder, name.str(),
          [center, nu](const ProjPoint& p) { return std::pow(fs_distance(p, center), nu); }, nu};
}

Observable Observable::constant(double c) {
  std::ostringstream name;
  name << "const " << c;
  return {ObservableKind::ChartPolynomial, name.str(), [c](const ProjPoint&) { return c; }};
}

Observable Observable::grid(std::shared_ptr<const ChartGrid> g) {
  require(g && g->nx >= 2 && g->ny >= 2, "grid observable needs at least 2x2 samples");
  return {ObservableKind::Holder, "grid",
          [g](const ProjPoint& p) {
            if (std::abs(p[g->window.chart_index]) <= kChartInfinity) return 0.0;
            const Complex w = chart_map(p, g->window.chart_index)[0];
            const double fx = (w.real() - g->xmin()) / g->dx() - 0.5;
            const double fy = (w.imag() - g->ymin()) / g->dy() - 0.5;
            if (fx < -0.5 || fy < -0.5 || fx > g->nx - 0.5 || fy > g->ny - 0.5) return 0.0;
            const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, g->nx - 2);
            const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, g->ny - 2);
            const double tx = std::clamp(fx - ix, 0.0, 1.0), ty = std::clamp(fy - iy, 0.0, 1.0);
            return (1 - tx) * (1 - ty) * g->at(ix, iy) + tx * (1 - ty) * g->at(ix + 1, iy) +
                   (1 - tx) * ty * g->at(ix, iy + 1) + tx * ty * g->at(ix + 1, iy + 1);
          },
          1.0};
}

Observable Observable::scaled(double c, const Observable& phi) {
  std::ostringstream name;
  name << "scale " << c << " " << phi.name();
  return {phi.kind(), name.str(), [c, phi](const ProjPoint& p) { return c * phi(p); }, phi.nu()};
}

Observable Observable::after(const HomEndo& f, const Observable& phi) {
  return {phi.kind(), "(" + phi.name() + ") o f", [f, phi](const ProjPoint& p) { return phi(f.eval(p)); }, phi.nu()};
}

Observable Observable::coboundary(const HomEndo& f, const Observable& psi) {
  return {psi.kind(), "cob " + psi.name(), [f, psi](const ProjPoint& p) { return psi(f.eval(p)) - psi(p); },
          psi.nu()};
}

Observable parse_observable(const std::string& text, const HomEndo& f) {
  std::istringstream in(text);
  std::string head;
  in >> head;
  std::string rest;
  std::getline(in, rest);
  rest = trim(rest);
  auto ints = [&](std::size_t count) {
    const auto v = split_doubles(rest, "observable", 0);
    if (v.size() != count) fail(ErrorKind::ConfigError, "observable '" + text + "' expects " + std::to_string(count) + " numbers");
    std::vector<int> out;
    for (double x : v) {
      if (std::floor(x) != x) fail(ErrorKind::ConfigError, "observable '" + text + "' expects integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  };
  auto index_ok = [&](int i) {
    if (i < 0 || i > f.k()) fail(ErrorKind::ConfigError, "observable '" + text + "' has an index outside 0.." + std::to_string(f.k()));
    return i;
  };
  if (head == "re" || head == "im") {
    const auto v = ints(2);
    return head == "re" ? Observable::chart_re(index_ok(v[0]), index_ok(v[1])) : Observable::chart_im(index_ok(v[0]), index_ok(v[1]));
  }
  if (head == "modpow") {
    const auto v = ints(2);
    return Observable::modulus_power(index_ok(v[0]), v[1]);
  }
  if (head == "modulus") return Observable::coordinate_modulus(index_ok(ints(1)[0]));
  if (head == "const") {
    const auto v = split_doubles(rest, "observable", 0);
    if (v.size() != 1) fail(ErrorKind::ConfigError, "observable '" + text + "' expects one number");
    return Observable::constant(v[0]);
  }
  if (head == "holder") {
    const auto v = split_doubles(rest, "observable", 0);
    if (v.size() != static_cast<std::size_t>(1 + 2 * (f.k() + 1))) {
      fail(ErrorKind::ConfigError, "holder observable expects nu and k+1 complex center coordinates");
    }
    HVec c(f.k() + 1);
    for (int i = 0; i <= f.k(); ++i) c[i] = Complex(v[static_cast<std::size_t>(1 + 2 * i)], v[static_cast<std::size_t>(2 + 2 * i)]);
    if (!(v[0] > 0.0 && v[0] <= 2.0)) fail(ErrorKind::ConfigError, "holder exponent must lie in (0, 2]");
    return Observable::holder(normalize(c), v[0]);
  }
  if (head == "scale") {
    std::istringstream rs(rest);
    std::string c;
    rs >> c;
    std::string inner;
    std::getline(rs, inner);
    const auto v = split_doubles(c, "observable", 0);
    if (v.size() != 1) fail(ErrorKind::ConfigError, "scale expects a factor");
    return Observable::scaled(v[0], parse_observable(trim(inner), f));
  }
  if (head == "cob") return Observable::coboundary(f, parse_observable(rest, f));
  fail(ErrorKind::ConfigError, "unknown observable '" + text + "'");
}

double EmpiricalMeasure::integrate(const Observable& phi) const {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * phi(points[i]);
  return s;
}

MeanErr EmpiricalMeasure::mean(const Observable& phi) const {
  MeanErr out;
  out.n = points.size();
  if (points.empty()) return out;
  std::vector<double> v(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) v[i] = phi(points[i]);
  double m = 0.0, w2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m += weights[i] * v[i];
    w2 += weights[i] * weights[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) var += weights[i] * (v[i] - m) * (v[i] - m);
  out.mean = m;
  // Effective sample size 1 / sum w^2.
  out.stderr_ = std::sqrt(var * w2);
  return out;
}

void EmpiricalMeasure::validate() const {
  require(points.size() == weights.size(), "measure needs one weight per point");
  double s = 0.0;
  for (double w : weights) {
    require(w > 0.0, "measure weights must be positive");
    s += w;
  }
  require(std::abs(s - 1.0) <= 1e-9, "measure weights must sum to 1");
}

std::string measure_to_json(const EmpiricalMeasure& m) {
  using nlohmann::json;
  json j;
  j["map_hash"] = m.provenance.map_hash;
  j["method"] = m.provenance.method;
  j["burn_in"] = m.provenance.burn_in;
  j["seed"] = m.provenance.seed;
  j["dropped"] = m.provenance.dropped;
  json pts = json::array();
  for (const auto& p : m.points) {
    json c = json::array();
    for (int i = 0; i <= p.dim(); ++i) c.push_back({p[i].real(), p[i].imag()});
    pts.push_back(c);
  }
  j["points"] = pts;
  j["weights"] = m.weights;
  return j.dump();
}

EmpiricalMeasure measure_from_json(const std::string& text) {
  using nlohmann::json;
  EmpiricalMeasure m;
  try {
    const json j = json::parse(text);
    m.provenance.map_hash = j.value("map_hash", "");
    m.provenance.method = j.value("method", "");
    m.provenance.burn_in = j.value("burn_in", 0);
    m.provenance.seed = j.value("seed", std::uint64_t{0});
    m.provenance.dropped = j.value("dropped", 0);
    for (const auto& c : j.at("points")) {
      HVec z(static_cast<int>(c.size()));
      require(z.size() >= 2 && z.size() <= kMaxCoords, "measure point has an unsupported dimension");
      for (int i = 0; i < z.size(); ++i) z[i] = Complex(c[static_cast<std::size_t>(i)][0].get<double>(), c[static_cast<std::size_t>(i)][1].get<double>());
      m.points.push_back(normalize(z));
    }
    m.weights = j.at("weights").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("bad measure JSON: ") + e.what());
  }
  m.validate();
  return m;
}

bool exceptional_suspect(const HomEndo& f, const ProjPoint& a, int depth) {
  const int full = static_cast<int>(std::lround(std::pow(f.d(), f.k())));
  FiberOptions fo;
  fo.allow_incomplete = true;
  std::vector<ProjPoint> level{a};
  for (int j = 0; j < depth; ++j) {
    std::vector<ProjPoint> next;
    for (const auto& x : level) {
      const Fiber fib = fiber(f, x, fo);
      if (fib.points.size() == 1 && fib.multiplicities[0] == full) return true;
      next.insert(next.end(), fib.points.begin(), fib.points.end());
    }
    level = std::move(next);
  }
  return false;
}

namespace {

ProjPoint generic_start(const HomEndo& f, std::uint64_t seed) {
  Rng rng(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    const ProjPoint a = random_fs_point(f.k(), rng);
    if (!exceptional_suspect(f, a)) return a;
  }
  fail(ErrorKind::InvalidArgument, "every FS-random start looks totally invariant");
}

}  // namespace

EmpiricalMeasure sample_equilibrium(const HomEndo& f, int n_samples, int burn_in, std::uint64_t seed, Parallel par) {
  require(n_samples >= 1, "need at least one sample");
  require(burn_in >= 20, "burn_in must be at least 20");
  const auto draws = parallel_map(static_cast<std::size_t>(n_samples), par, [&](std::size_t i) -> std::optional<ProjPoint> {
    const std::uint64_t s = derive_seed(seed, {i});
    try {
      ProjPoint x = generic_start(f, derive_seed(s, {0}));
      for (int step = 0; step < burn_in; ++step) x = random_preimage(f, x, derive_seed(s, {1, static_cast<std::uint64_t>(step)}));
      return x;
    } catch (const CountShortfall&) {
      return std::nullopt;
    }
  });
  EmpiricalMeasure m;
  for (const auto& d : draws)
    if (d) m.points.push_back(*d);
  m.provenance = {f.hash(), "backward_orbit", burn_in, seed, n_samples - static_cast<int>(m.points.size())};
  if (m.points.empty()) fail(ErrorKind::IncompleteFiber, "every backward orbit met an incomplete fiber");
  m.weights.assign(m.points.size(), 1.0 / static_cast<double>(m.points.size()));
  return m;
}

EmpiricalMeasure exact_preimage_measure(const HomEndo& f, const ProjPoint& a, int n, std::size_t cap, std::uint64_t seed,
                                        Parallel par) {
  TreeOptions opts;
  opts.cap = cap;
  opts.seed = seed;
  opts.par = par;
  const BackwardTree t = backward_tree(f, a, n, opts);
  EmpiricalMeasure m;
  for (const auto& node : t.leaves()) {
    m.points.push_back(node.point);
    m.weights.push_back(node.weight);
  }
  m.provenance = {f.hash(), t.exact ? "exact_preimage" : "sampled_preimage", n, seed, t.incomplete_fibers};
  return m;
}

std::vector<ProjPoint> forward_trajectory(const HomEndo& f, int length, int burn_in, std::uint64_t seed) {
  require(length >= 1 && burn_in >= 0, "trajectory needs length >= 1 and burn_in >= 0");
  const int steps = burn_in + length - 1;
  std::vector<ProjPoint> back;
  back.reserve(static_cast<std::size_t>(steps) + 1);
  back.push_back(generic_start(f, derive_seed(seed, {0})));
  for (int s = 0; s < steps; ++s) back.push_back(random_preimage(f, back.back(), derive_seed(seed, {1, static_cast<std::uint64_t>(s)})));
  std::vector<ProjPoint> out(back.rbegin(), back.rbegin() + length);
  return out;
}

EmpiricalMeasure trajectory_cloud(const HomEndo& f, int n_points, int length, int burn_in, std::uint64_t seed,
                                  Parallel par) {
  require(n_points >= 1 && length >= 1, "cloud needs points and a positive segment length");
  const std::size_t segments = (static_cast<std::size_t>(n_points) + length - 1) / length;
  const auto parts = parallel_map(segments, par, [&](std::size_t i) {
    return forward_trajectory(f, length, burn_in, derive_seed(seed, {i}));
  });
  EmpiricalMeasure m;
  for (const auto& seg : parts)
    for (const auto& p : seg)
      if (m.points.size() < static_cast<std::size_t>(n_points)) m.points.push_back(p);
  m.weights.assign(m.points.size(), 1.0 / static_cast<double>(m.points.size()));
  m.provenance = {f.hash(), "reversed_orbits", burn_in, seed, 0};
  return m;
}

double perron_frobenius_apply(const HomEndo& f, const Observable& phi, const ProjPoint& a, int n, const TreeOptions& opts) {
  const BackwardTree t = backward_tree(f, a, n, opts);
  double s = 0.0;
  for (const auto& node : t.leaves()) s += node.weight * phi(node.point);
  return s;
}

PfRate pf_convergence_rate(const HomEndo& f, const Observable& phi, int n_max, int probe_points, std::uint64_t seed,
                           Parallel par) {
  require(n_max >= 2 && probe_points >= 1, "pf rate needs n_max >= 2 and at least one probe");
  const int depth = n_max + 3;
  // Lambda^n phi at every probe for n = 0..depth, read off the tree levels.
  const auto per_probe = parallel_map(static_cast<std::size_t>(probe_points), par, [&](std::size_t i) {
    const ProjPoint a = random_fs_point(f.k(), derive_seed(seed, {i}));
    TreeOptions opts;
    opts.seed = derive_seed(seed, {i, 1});
    const BackwardTree t = backward_tree(f, a, depth, opts);
    std::vector<double> vals;
    for (const auto& level : t.levels) {
      double s = 0.0;
      for (const auto& node : level) s += node.weight * phi(node.point);
      vals.push_back(s);
    }
    return vals;
  });
  PfRate out;
  for (const auto& v : per_probe) out.c_phi += v.back() / probe_points;
  const double floor = 1e-12 * (1.0 + std::abs(out.c_phi));
  std::vector<double> xs, ys;
  for (int n = 0; n <= n_max; ++n) {
    double dev = 0.0;
    for (const auto& v : per_probe) dev = std::max(dev, std::abs(v[static_cast<std::size_t>(n)] - out.c_phi));
    out.n.push_back(n);
    out.deviation.push_back(dev);
    if (n >= 1 && dev > floor) {
      xs.push_back(n);
      ys.push_back(std::log(dev));
    }
  }
  out.fitted_rows = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    const LinearFit fit = linear_fit(xs, ys);
    out.slope = fit.slope;
    out.r2 = fit.r2;
  } else {
    out.slope = -std::numeric_limits<double>::infinity();
    out.r2 = 1.0;
  }
  return out;
}

namespace {

std::vector<std::vector<double>> trajectory_values(const HomEndo& f, const std::vector<const Observable*>& obs, int length,
                                                   int trajectories, std::uint64_t seed, Parallel par) {
  const auto per = parallel_map(static_cast<std::size_t>(trajectories), par, [&](std::size_t j) {
    const auto path = forward_trajectory(f, length, kDefaultBurnIn, derive_seed(seed, {j}));
    std::vector<double> v;
    v.reserve(path.size() * obs.size());
    for (const Observable* o : obs)
      for (const auto& p : path) v.push_back((*o)(p));
    return v;
  });
  return per;
}

double bootstrap_se(const std::vector<double>& xs, Rng& rng, int resamples = 200) {
  if (xs.size() < 2) return 0.0;
  std::vector<double> means;
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += xs[rng.index(xs.size())];
    means.push_back(s / static_cast<double>(xs.size()));
  }
  return std::sqrt(variance(means));
}

}  // namespace

CorrelationTable correlation_decay(const HomEndo& f, const Observable& phi, const Observable& psi, int n_max, int mc_samples,
                                   std::uint64_t seed, Parallel par) {
  require(n_max >= 0 && mc_samples >= kCorrelationTrajectories * 8, "correlation_decay needs more samples");
  const int T = kCorrelationTrajectories;
  const int M = std::max(mc_samples / T, 4 * std::max(n_max, 1));
  const int L = M + n_max;
  const auto vals = trajectory_values(f, {&phi, &psi}, L, T, seed, par);
  std::vector<std::vector<double>> cov(static_cast<std::size_t>(n_max) + 1);
  for (const auto& v : vals) {
    const double* a = v.data();
    const double* b = v.data() + L;
    double mb = 0.0;
    for (int t = 0; t < M; ++t) mb += b[t];
    mb /= M;
    for (int n = 0; n <= n_max; ++n) {
      double sp = 0.0, ma = 0.0;
      for (int t = 0; t < M; ++t) {
        sp += a[t + n] * b[t];
        ma += a[t + n];
      }
      cov[static_cast<std::size_t>(n)].push_back(sp / M - (ma / M) * mb);
    }
  }
  CorrelationTable out;
  Rng rng(derive_seed(seed, {0x626f6f74}));
  std::vector<double> xs, ys;
  for (int n = 0; n <= n_max; ++n) {
    const auto& c = cov[static_cast<std::size_t>(n)];
    const double m = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    CorrelationRow row{n, std::abs(m), bootstrap_se(c, rng)};
    if (row.value > 2.0 * row.err) {
      xs.push_back(n);
      ys.push_back(std::log(row.value));
    }
    out.rows.push_back(row);
  }
  out.fitted_rows = static_cast<int>(xs.size());
  out.slope = xs.size() >= 2 ? linear_fit(xs, ys).slope : std::numeric_limits<double>::quiet_NaN();
  return out;
}

CltReport clt_test(const HomEndo& f, const Observable& phi, int N, int trajectories, std::uint64_t seed, Parallel par) {
  require(N >= 16 && trajectories >= 20, "clt_test needs N >= 16 and at least 20 trajectories");
  const auto vals = trajectory_values(f, {&phi}, N, trajectories, seed, par);
  CltReport r;
  std::vector<double> traj_means, starts;
  for (const auto& v : vals) {
    traj_means.push_back(std::accumulate(v.begin(), v.end(), 0.0) / N);
    starts.push_back(v.front());
  }
  const MeanErr birk = mean_stderr(traj_means);
  const MeanErr back = mean_stderr(starts);
  r.mean = birk.mean;
  r.mean_err = birk.stderr_;
  r.mean_backward = back.mean;
  r.mean_backward_err = back.stderr_;
  r.means_agree = std::abs(birk.mean - back.mean) <= 3.0 * std::hypot(birk.stderr_, back.stderr_);
  const double m = r.mean;

  // Truncated covariance series.
  r.sigma2 = 0.0;
  for (int n = 0; n <= N / 4; ++n) {
    std::vector<double> c;
    for (const auto& v : vals) {
      double s = 0.0;
      for (int t = 0; t + n < N; ++t) s += (v[static_cast<std::size_t>(t + n)] - m) * (v[static_cast<std::size_t>(t)] - m);
      c.push_back(s / (N - n));
    }
    const MeanErr cn = mean_stderr(c);
    if (n > 0 && std::abs(cn.mean) < 2.0 * cn.stderr_) break;
    r.sigma2 += (n == 0 ? 1.0 : 2.0) * cn.mean;
    r.series_terms = n + 1;
  }
  r.sigma = std::sqrt(std::max(r.sigma2, 0.0));

  std::vector<double> sN, s8;
  for (const auto& v : vals) {
    double a = 0.0, b = 0.0;
    for (int t = 0; t < N; ++t) {
      a += v[static_cast<std::size_t>(t)] - m;
      if (t < N / 8) b += v[static_cast<std::size_t>(t)] - m;
    }
    sN.push_back(a);
    s8.push_back(b);
  }
  const double vN = variance(sN), v8 = variance(s8);
  r.direct_sigma2 = vN / N;
  r.growth_ratio = v8 > 0.0 ? vN / v8 : 0.0;
  if (r.sigma < 1e-4 || r.growth_ratio < std::sqrt(8.0)) {
    std::ostringstream msg;
    msg << "sigma = " << r.sigma << ", Var(S_N)/Var(S_N/8) = " << r.growth_ratio << "; phi looks like a coboundary";
    fail(ErrorKind::DegenerateVariance, msg.str());
  }
  std::vector<double> z;
  for (double s : sN) z.push_back(s / (std::sqrt(static_cast<double>(N)) * r.sigma));
  r.ks = ks_test(z, normal_cdf);
  return r;
}

LdtReport large_deviation_profile(const HomEndo& f, const Observable& phi, double eps, const std::vector<int>& N_list,
                                  int trajectories, std::uint64_t seed, std::optional<double> mean, Parallel par) {
  require(!N_list.empty() && eps > 0.0 && trajectories >= 1, "large_deviation_profile needs N values, eps > 0 and trajectories");
  for (int n : N_list) require(n >= 2, "every N must be at least 2");
  const int nmax = *std::max_element(N_list.begin(), N_list.end());
  const auto vals = trajectory_values(f, {&phi}, nmax, trajectories, seed, par);
  LdtReport r;
  if (mean) {
    r.mean = *mean;
  } else {
    double s = 0.0;
    for (const auto& v : vals) s += std::accumulate(v.begin(), v.end(), 0.0);
    r.mean = s / (static_cast<double>(nmax) * trajectories);
  }
  std::vector<std::vector<double>> prefix;
  for (const auto& v : vals) {
    std::vector<double> p(v.size() + 1, 0.0);
    std::partial_sum(v.begin(), v.end(), p.begin() + 1);
    prefix.push_back(std::move(p));
  }
  std::vector<double> xs, ys;
  for (int n : N_list) {
    LdtRow row{n, 0.0, 0, false};
    for (const auto& p : prefix)
      if (std::abs(p[static_cast<std::size_t>(n)] / n - r.mean) > eps) ++row.events;
    row.rate = static_cast<double>(row.events) / trajectories;
    row.estimable = row.events > 5;
    if (row.estimable) {
      const double ln = std::log(static_cast<double>(n));
      xs.push_back(n / (ln * ln));
      ys.push_back(std::log(row.rate));
    }
    r.rows.push_back(row);
  }
  r.fitted_rows = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    const LinearFit fit = linear_fit(xs, ys);
    r.slope = fit.slope;
    r.r2 = fit.r2;
  }
  return r;
}

}  // namespace pluridyn
