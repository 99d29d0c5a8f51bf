#include "pluridyn/polylike.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "pluridyn/errors.hpp"
#include "pluridyn/hash.hpp"
#include "pluridyn/stats.hpp"

namespace pluridyn {

ConvexDomain ConvexDomain::box(HVec center, std::vector<double> half_widths) {
  ConvexDomain d;
  d.kind = Kind::Box;
  d.center = center;
  d.extents = std::move(half_widths);
  d.validate();
  return d;
}

ConvexDomain ConvexDomain::ball(HVec center, double radius) {
  ConvexDomain d;
  d.kind = Kind::Ball;
  d.center = center;
  d.extents = {radius};
  d.validate();
  return d;
}

void ConvexDomain::validate() const {
  require(dim() >= 1 && dim() < kMaxCoords, "domain dimension must be in 1..3");
  if (kind == Kind::Box) {
    require(static_cast<int>(extents.size()) == dim(), "box needs one half-width per coordinate");
  } else {
    require(extents.size() == 1, "ball needs one radius");
  }
  for (const double e : extents) require(e > 0.0 && std::isfinite(e), "domain extents must be positive");
}

bool ConvexDomain::contains(const HVec& z) const { return signed_distance(z) >= 0.0; }

double ConvexDomain::signed_distance(const HVec& z) const {
  if (kind == Kind::Ball) return extents[0] - (z - center).norm();
  double inside = std::numeric_limits<double>::infinity();
  double outside2 = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const Complex u = z[i] - center[i];
    const double r = extents[static_cast<std::size_t>(i)];
    for (const double x : {std::abs(u.real()), std::abs(u.imag())}) {
      inside = std::min(inside, r - x);
      if (x > r) outside2 += (x - r) * (x - r);
    }
  }
  return outside2 > 0.0 ? -std::sqrt(outside2) : inside;
}

double ConvexDomain::volume() const {
  if (kind == Kind::Ball) return std::pow(M_PI * extents[0] * extents[0], dim()) / std::tgamma(dim() + 1.0);
  double v = 1.0;
  for (const double r : extents) v *= 4.0 * r * r;
  return v;
}

HVec ConvexDomain::sample_interior(Rng& rng) const {
  HVec z(dim());
  if (kind == Kind::Box) {
    for (int i = 0; i < dim(); ++i) {
      const double r = extents[static_cast<std::size_t>(i)];
      z[i] = center[i] + Complex(rng.uniform(-r, r), rng.uniform(-r, r));
    }
    return z;
  }
  for (int i = 0; i < dim(); ++i) z[i] = rng.complex_normal();
  const double scale = extents[0] * std::pow(rng.uniform(), 1.0 / (2.0 * dim())) / z.norm();
  return center + Complex(scale, 0.0) * z;
}

HVec ConvexDomain::sample_boundary(Rng& rng) const {
  if (kind == Kind::Ball) {
    HVec z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = rng.complex_normal();
    return center + Complex(extents[0] / z.norm(), 0.0) * z;
  }
  // The face with real coordinate j pinned has area proportional to 1 / r_j.
  double total = 0.0;
  for (const double r : extents) total += 2.0 / r;
  double pick = rng.uniform(0.0, total);
  int axis = 0;
  for (; axis < 2 * dim() - 1; ++axis) {
    pick -= 1.0 / extents[static_cast<std::size_t>(axis / 2)];
    if (pick <= 0.0) break;
  }
  HVec z = sample_interior(rng);
  const int i = axis / 2;
  const double r = extents[static_cast<std::size_t>(i)];
  const double side = rng.uniform() < 0.5 ? -r : r;
  const Complex u = z[i] - center[i];
  z[i] = center[i] + (axis % 2 == 0 ? Complex(side, u.imag()) : Complex(u.real(), side));
  return z;
}

int PolyLikeMap::bezout_bound() const {
  int b = 1;
  for (const auto& c : comps_) b *= std::max(1, c.degree());
  return b;
}

HVec PolyLikeMap::eval(const HVec& z) const {
  HVec out(k());
  for (int i = 0; i < k(); ++i) out[i] = comps_[static_cast<std::size_t>(i)].eval(z);
  return out;
}

CMat PolyLikeMap::jacobian(const HVec& z) const {
  const int n = k();
  CMat j(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) j(r, c) = partials_[static_cast<std::size_t>(r * n + c)].eval(z);
  return j;
}

std::string PolyLikeMap::canonical_text() const {
  std::string s = "polylike k=" + std::to_string(k()) + (domain_.kind == ConvexDomain::Kind::Box ? " box" : " ball");
  char buf[96];
  for (int i = 0; i < domain_.dim(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g %.17g", domain_.center[i].real(), domain_.center[i].imag());
    s += buf;
  }
  for (const double e : domain_.extents) {
    std::snprintf(buf, sizeof buf, " %.17g", e);
    s += buf;
  }
  for (const auto& c : comps_) s += "\n" + c.to_string();
  return s;
}

std::string PolyLikeMap::hash() const { return sha256_hex(canonical_text()); }

namespace {

constexpr double kRootDedup = 1e-7;

double domain_scale(const ConvexDomain& d) {
  return *std::max_element(d.extents.begin(), d.extents.end());
}

// Newton for f(z) = w from z0; converged roots must lie in V up to 1e-9.
std::optional<HVec> newton_root(const PolyLikeMap& f, const HVec& w, HVec z) {
  const int k = f.k();
  const double scale = domain_scale(f.domain());
  const double tol = 1e-12 * (1.0 + w.norm());
  int polish = 0;
  for (int it = 0; it < 60; ++it) {
    const HVec r = f.eval(z) - w;
    if (r.norm() <= tol && ++polish >= 2) break;
    CVecX step = f.jacobian(z).fullPivLu().solve(-r.to_eigen());
    if (!step.allFinite()) return std::nullopt;
    const double cap = 0.5 * scale;
    if (step.norm() > cap) step *= cap / step.norm();
    for (int i = 0; i < k; ++i) z[i] += step(i);
    if ((z - f.domain().center).norm() > 20.0 * scale) return std::nullopt;
  }
  if ((f.eval(z) - w).norm() > 1e-9 * (1.0 + w.norm())) return std::nullopt;
  if (f.domain().signed_distance(z) < -1e-9) return std::nullopt;
  return z;
}

bool add_distinct(std::vector<HVec>& roots, const HVec& z) {
  for (const auto& r : roots)
    if ((r - z).norm() <= kRootDedup * (1.0 + z.norm())) return false;
  roots.push_back(z);
  return true;
}

MeanErr weighted_mean(const std::vector<double>& v, const std::vector<double>& w) {
  MeanErr out;
  out.n = v.size();
  if (v.empty()) return out;
  double sw = 0.0;
  for (const double x : w) sw += x;
  double m = 0.0, w2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m += w[i] / sw * v[i];
    w2 += (w[i] / sw) * (w[i] / sw);
  }
  double var = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) var += w[i] / sw * (v[i] - m) * (v[i] - m);
  out.mean = m;
  out.stderr_ = std::sqrt(var * w2);
  return out;
}

}  // namespace

std::vector<HVec> pl_fiber(const PolyLikeMap& f, const HVec& w, std::uint64_t seed, int expected) {
  require(w.size() == f.k(), "target dimension does not match the map");
  const int starts = 16 * f.bezout_bound();
  std::vector<HVec> roots;
  int quiet_rounds = 0;
  for (int round = 0; round < 8; ++round) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(round)}));
    bool grew = false;
    for (int s = 0; s < starts; ++s) {
      const auto z = newton_root(f, w, f.domain().sample_interior(rng));
      if (z && add_distinct(roots, *z)) grew = true;
      if (expected > 0 && static_cast<int>(roots.size()) >= expected) return roots;
    }
    quiet_rounds = grew ? 0 : quiet_rounds + 1;
    if (expected <= 0 && round >= 1 && quiet_rounds >= 1) break;
  }
  return roots;
}

PolyLikeMap make_polylike(std::vector<Polynomial> ambient, ConvexDomain V, std::uint64_t seed,
                          const PolyLikeOptions& opts) {
  V.validate();
  const int k = V.dim();
  require(static_cast<int>(ambient.size()) == k, "ambient map needs k components");
  for (const auto& c : ambient) require(c.nvars() == k, "ambient components need k variables");
  require(opts.boundary_samples >= 1 && opts.targets >= 1, "certificate needs samples and targets");
  PolyLikeMap f;
  f.comps_ = std::move(ambient);
  f.domain_ = V;
  for (const auto& c : f.comps_)
    for (int j = 0; j < k; ++j) f.partials_.push_back(c.derivative(j));

  Rng rng(derive_seed(seed, {0}));
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opts.boundary_samples; ++i) {
    const HVec z = V.sample_boundary(rng);
    const double m = -V.signed_distance(f.eval(z));
    if (m < opts.min_margin)
      fail(ErrorKind::NotProper, "boundary point maps within " + std::to_string(m) + " of V");
    margin = std::min(margin, m);
  }
  f.margin_ = margin;

  std::map<int, int> votes;
  for (int t = 0; t < opts.targets; ++t) {
    const HVec w = V.sample_interior(rng);
    const int c = static_cast<int>(pl_fiber(f, w, derive_seed(seed, {1, static_cast<std::uint64_t>(t)})).size());
    f.target_counts_.push_back(c);
    ++votes[c];
  }
  const auto mode = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  if (mode->second < opts.agreement * opts.targets)
    fail(ErrorKind::DegreeAmbiguous, "fiber counts disagree across targets");
  f.d_t_ = mode->first;
  if (f.d_t_ < 2) fail(ErrorKind::DegreeTooLow, "topological degree " + std::to_string(f.d_t_) + " is below 2");
  return f;
}

PolyLikeMap polylike_from_section(const IniSection& sec, const std::string& source, std::uint64_t seed,
                                  const PolyLikeOptions& opts) {
  const IniEntry* ke = sec.find("k");
  if (!ke) config_error(source, sec.line, "polylike map needs k");
  const auto k = parse_int(*ke, source);
  if (k < 1 || k > kMaxCoords - 1) config_error(source, ke->line, "k must be in 1..3");
  std::vector<Polynomial> comps(static_cast<std::size_t>(k), Polynomial(static_cast<int>(k)));
  for (const IniEntry* t : sec.find_all("term")) {
    const ParsedTerm pt = parse_term_line(*t, source, static_cast<int>(k), true);
    if (pt.component < 0 || pt.component >= k) config_error(source, t->line, "component index out of range");
    comps[static_cast<std::size_t>(pt.component)].add_term(pt.exps, pt.coeff);
  }
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (comps[i].is_zero()) config_error(source, sec.line, "component " + std::to_string(i) + " has no terms");

  const IniEntry* de = sec.find("domain");
  const IniEntry* ce = sec.find("center");
  const IniEntry* ee = sec.find("extents");
  if (!de || !ee) config_error(source, sec.line, "polylike map needs domain and extents");
  HVec center(static_cast<int>(k));
  if (ce) {
    const auto c = parse_doubles(*ce, source);
    if (static_cast<int>(c.size()) != 2 * k) config_error(source, ce->line, "center needs 2k numbers");
    for (int i = 0; i < k; ++i) center[i] = Complex(c[static_cast<std::size_t>(2 * i)], c[static_cast<std::size_t>(2 * i + 1)]);
  }
  const auto ext = parse_doubles(*ee, source);
  ConvexDomain V;
  try {
    if (de->value == "box") {
      V = ConvexDomain::box(center, ext.size() == 1 ? std::vector<double>(static_cast<std::size_t>(k), ext[0]) : ext);
    } else if (de->value == "ball") {
      if (ext.size() != 1) config_error(source, ee->line, "ball needs one radius");
      V = ConvexDomain::ball(center, ext[0]);
    } else {
      config_error(source, de->line, "domain must be box or ball");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument) config_error(source, ee->line, e.what());
    throw;
  }
  return make_polylike(std::move(comps), V, seed, opts);
}

std::string to_polylike_text(const PolyLikeMap& f) {
  std::string s = "[polylike]\nk = " + std::to_string(f.k()) + "\n";
  char buf[160];
  for (int i = 0; i < f.k(); ++i)
    for (const auto& t : f.components()[static_cast<std::size_t>(i)].terms()) {
      s += "term = " + std::to_string(i) + " :";
      for (int j = 0; j < f.k(); ++j) s += " " + std::to_string(t.exps[static_cast<std::size_t>(j)]);
      std::snprintf(buf, sizeof buf, " : %.17g %.17g\n", t.coeff.real(), t.coeff.imag());
      s += buf;
    }
  const auto& d = f.domain();
  s += std::string("domain = ") + (d.kind == ConvexDomain::Kind::Box ? "box" : "ball") + "\ncenter =";
  for (int i = 0; i < d.dim(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g %.17g", d.center[i].real(), d.center[i].imag());
    s += buf;
  }
  s += "\nextents =";
  for (const double e : d.extents) {
    std::snprintf(buf, sizeof buf, " %.17g", e);
    s += buf;
  }
  return s + "\n";
}

Membership filled_julia_membership(const PolyLikeMap& f, const HVec& z0, int n_max) {
  require(n_max >= 0, "n_max must be non-negative");
  if (!f.domain().contains(z0)) return {false, 0};
  HVec z = z0;
  for (int m = 1; m <= n_max; ++m) {
    z = f.eval(z);
    if (!f.domain().contains(z)) return {false, m};
  }
  return {true, n_max};
}

MeanErr AffineMeasure::mean(const std::function<double(const HVec&)>& phi) const {
  std::vector<double> v(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) v[i] = phi(points[i]);
  return weighted_mean(v, weights);
}

AffineMeasure sample_equilibrium_pl(const PolyLikeMap& f, int n_samples, int burn_in, std::uint64_t seed,
                                    std::optional<HVec> start, Parallel par) {
  require(n_samples >= 1 && burn_in >= 0, "sampling needs samples and a non-negative burn_in");
  if (start) require(start->size() == f.k() && f.domain().contains(*start), "start must be a point of V");
  const int dt = f.topological_degree();
  const auto draws = parallel_map(static_cast<std::size_t>(n_samples), par, [&](std::size_t i) -> std::optional<HVec> {
    const std::uint64_t s = derive_seed(seed, {i});
    Rng rng(derive_seed(s, {0}));
    HVec x = start ? *start : f.domain().sample_interior(rng);
    for (int step = 0; step < burn_in; ++step) {
      const auto st = static_cast<std::uint64_t>(step);
      auto fib = pl_fiber(f, x, derive_seed(s, {1, st}), dt);
      if (static_cast<int>(fib.size()) < dt) fib = pl_fiber(f, x, derive_seed(s, {2, st}), dt);
      if (static_cast<int>(fib.size()) < dt) return std::nullopt;
      x = fib[rng.index(fib.size())];
    }
    return x;
  });
  AffineMeasure m;
  for (const auto& d : draws)
    if (d) m.points.push_back(*d);
  m.provenance = {f.hash(), "backward_orbit_pl", burn_in, seed, n_samples - static_cast<int>(m.points.size())};
  if (m.points.empty()) fail(ErrorKind::IncompleteFiber, "every backward orbit met an incomplete fiber");
  m.weights.assign(m.points.size(), 1.0 / static_cast<double>(m.points.size()));
  return m;
}

double near_boundary_fraction(const PolyLikeMap& f, const AffineMeasure& m, double radius, int n_probe) {
  require(radius > 0.0 && n_probe >= 1, "stencil needs a positive radius and depth");
  require(!m.points.empty(), "measure must not be empty");
  int near = 0;
  for (const auto& z : m.points) {
    if (!filled_julia_membership(f, z, n_probe).inside) continue;
    bool escapes = false;
    for (int i = 0; i < f.k() && !escapes; ++i)
      for (const Complex dir : {Complex(radius, 0), Complex(-radius, 0), Complex(0, radius), Complex(0, -radius)}) {
        HVec q = z;
        q[i] += dir;
        if (!filled_julia_membership(f, q, n_probe).inside) {
          escapes = true;
          break;
        }
      }
    near += escapes ? 1 : 0;
  }
  return static_cast<double>(near) / static_cast<double>(m.points.size());
}

LogJacobian log_jacobian_check(const PolyLikeMap& f, const AffineMeasure& m) {
  require(!m.points.empty() && m.points.size() == m.weights.size(), "measure needs points with weights");
  std::vector<double> v, w;
  LogJacobian out;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const double l = 2.0 * std::log(std::abs(f.jacobian(m.points[i]).determinant()));
    if (!std::isfinite(l)) {
      ++out.dropped;
      continue;
    }
    v.push_back(l);
    w.push_back(m.weights[i]);
  }
  require(!v.empty(), "every sample sits on the critical set");
  const MeanErr me = weighted_mean(v, w);
  out.value = me.mean;
  out.stderr_ = me.stderr_;
  out.bound = std::log(static_cast<double>(f.topological_degree()));
  out.ok = out.value >= out.bound - 3.0 * out.stderr_;
  return out;
}

ConvexDomain default_degree_window(const PolyLikeMap& f, const AffineMeasure& mu) {
  require(!mu.points.empty(), "measure must not be empty");
  const int k = f.k();
  const auto& V = f.domain();
  HVec center(k);
  std::vector<double> half(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double xl = 1e300, xh = -1e300, yl = 1e300, yh = -1e300;
    for (const auto& z : mu.points) {
      xl = std::min(xl, z[i].real());
      xh = std::max(xh, z[i].real());
      yl = std::min(yl, z[i].imag());
      yh = std::max(yh, z[i].imag());
    }
    center[i] = Complex(0.5 * (xl + xh), 0.5 * (yl + yh));
    const double vr = V.kind == ConvexDomain::Kind::Box ? V.extents[static_cast<std::size_t>(i)] : V.extents[0];
    half[static_cast<std::size_t>(i)] = 1.1 * 0.5 * std::max(xh - xl, yh - yl) + 0.05 * vr;
  }
  // Shrink until every corner sits strictly inside V.
  for (int attempt = 0; attempt < 200; ++attempt) {
    bool inside = true;
    for (int mask = 0; mask < (1 << (2 * k)) && inside; ++mask) {
      HVec c = center;
      for (int i = 0; i < k; ++i) {
        const double r = half[static_cast<std::size_t>(i)];
        c[i] += Complex((mask >> (2 * i)) & 1 ? r : -r, (mask >> (2 * i + 1)) & 1 ? r : -r);
      }
      inside = V.signed_distance(c) > 0.01 * domain_scale(V);
    }
    if (inside) return ConvexDomain::box(center, half);
    for (auto& h : half) h *= 0.95;
  }
  fail(ErrorKind::InvalidArgument, "sampled K does not fit inside V");
}

double kappa_calibration(int k, int p) {
  CMat id = CMat::Identity(k, k);
  return kappa(id, p);
}

double kappa(const CMat& a, int p) {
  require(p >= 0 && p <= a.cols(), "p must lie in 0..k");
  const Eigen::JacobiSVD<CMat> svd(a);
  const auto& s = svd.singularValues();
  // Elementary symmetric polynomial e_p of the squared singular values.
  std::vector<double> e(static_cast<std::size_t>(p) + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < s.size(); ++i) {
    const double x = s(i) * s(i);
    for (int j = p; j >= 1; --j) e[static_cast<std::size_t>(j)] += x * e[static_cast<std::size_t>(j - 1)];
  }
  return e[static_cast<std::size_t>(p)];
}

DegreeEstimate dynamical_degree_estimate(const PolyLikeMap& f, int p, int n_max, int mc_samples, std::uint64_t seed,
                                         const ConvexDomain& window, std::size_t cap, Parallel par) {
  const int k = f.k();
  require(p >= 0 && p <= k, "p must lie in 0..k");
  require(n_max >= 1 && n_max <= 6, "n_max must lie in 1..6");
  require(mc_samples >= 2, "need at least two Monte Carlo samples");
  require(window.dim() == k, "window dimension does not match the map");
  const int dt = f.topological_degree();
  const double leaves = std::pow(static_cast<double>(dt), n_max) * mc_samples;
  if (leaves > static_cast<double>(cap))
    fail(ErrorKind::TreeBudgetExceeded, "d_t^n_max x mc_samples exceeds the tree budget");
  const double calib = kappa_calibration(k, p);

  struct Node {
    HVec x;
    CMat a;
  };
  const auto per_sample = parallel_map(static_cast<std::size_t>(mc_samples), par, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    std::vector<Node> level{{window.sample_interior(rng), CMat::Identity(k, k)}};
    std::vector<double> mass;
    for (int n = 1; n <= n_max; ++n) {
      std::vector<Node> next;
      for (std::size_t j = 0; j < level.size(); ++j) {
        const auto fib = pl_fiber(f, level[j].x, derive_seed(seed, {i, static_cast<std::uint64_t>(n), j}), dt);
        for (const auto& c : fib) next.push_back({c, level[j].a * f.jacobian(c)});
      }
      double s = 0.0;
      for (const auto& node : next) s += kappa(node.a, p) / calib / std::norm(node.a.determinant());
      mass.push_back(s);
      level = std::move(next);
    }
    return mass;
  });

  DegreeEstimate out;
  out.p = p;
  out.window = window;
  std::vector<double> xs, ys;
  for (int n = 1; n <= n_max; ++n) {
    std::vector<double> col;
    for (const auto& v : per_sample) col.push_back(v[static_cast<std::size_t>(n - 1)]);
    const MeanErr me = mean_stderr(col);
    out.masses.push_back(me.mean);
    out.stderrs.push_back(me.stderr_);
    xs.push_back(n);
    ys.push_back(std::log(me.mean));
  }
  if (n_max >= 2) {
    const LinearFit fit = linear_fit(xs, ys);
    out.estimate = std::exp(fit.slope);
    out.r2 = fit.r2;
  } else {
    out.estimate = out.masses[0];
    out.r2 = 1.0;
  }
  return out;
}

double AffineLog::operator()(const HVec& z) const {
  Complex h = a0;
  for (int i = 0; i < z.size() && i < static_cast<int>(a.size()); ++i) h += a[static_cast<std::size_t>(i)] * z[i];
  return std::log(std::abs(h));
}

PlPfRate pf_rate_pl(const PolyLikeMap& f, const AffineLog& phi, int n_max, int probes, std::uint64_t seed,
                    Parallel par) {
  require(n_max >= 2 && probes >= 1, "pf rate needs n_max >= 2 and at least one probe");
  require(static_cast<int>(phi.a.size()) == f.k(), "test function needs k linear coefficients");
  const AffineMeasure k_sample = sample_equilibrium_pl(f, 256, 30, derive_seed(seed, {0}), std::nullopt, par);
  double amax = std::abs(phi.a0);
  for (const auto& c : phi.a) amax += std::abs(c);
  for (const auto& z : k_sample.points)
    if (!(std::exp(phi(z)) > 1e-3 * amax)) fail(ErrorKind::InvalidArgument, "h vanishes near the sampled K");

  const int dt = f.topological_degree();
  const int depth = n_max + 2;
  const auto per_probe = parallel_map(static_cast<std::size_t>(probes), par, [&](std::size_t i) {
    std::vector<HVec> level{k_sample.points[i % k_sample.points.size()]};
    std::vector<double> vals{phi(level[0])};
    for (int n = 1; n <= depth; ++n) {
      std::vector<HVec> next;
      for (std::size_t j = 0; j < level.size(); ++j)
        for (const auto& c : pl_fiber(f, level[j], derive_seed(seed, {1, i, static_cast<std::uint64_t>(n), j}), dt))
          next.push_back(c);
      double s = 0.0;
      for (const auto& z : next) s += phi(z);
      vals.push_back(s / static_cast<double>(next.size()));
      level = std::move(next);
    }
    return vals;
  });
  PlPfRate out;
  for (const auto& v : per_probe) out.c_phi += v.back() / probes;
  const double floor = 1e-12 * (1.0 + std::abs(out.c_phi));
  std::vector<double> xs, ys;
  for (int n = 0; n <= n_max; ++n) {
    double dev = 0.0;
    for (const auto& v : per_probe) dev = std::max(dev, std::abs(v[static_cast<std::size_t>(n)] - out.c_phi));
    if (n >= 1 && dev > 1.2 * out.deviation.back() && dev > floor) out.monotone = false;
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
  out.lambda = std::exp(out.slope);
  return out;
}

std::vector<HVec> pl_periodic_points(const PolyLikeMap& f, int n, std::uint64_t seed, int rounds) {
  require(n >= 1 && rounds >= 1, "period and rounds must be positive");
  const int k = f.k();
  const auto& V = f.domain();
  const double scale = domain_scale(V);
  auto solve = [&](HVec z) -> std::optional<HVec> {
    int polish = 0;
    for (int it = 0; it < 80; ++it) {
      HVec y = z;
      CMat a = CMat::Identity(k, k);
      for (int s = 0; s < n; ++s) {
        a = f.jacobian(y) * a;
        y = f.eval(y);
        if (!std::isfinite(y.norm()) || y.norm() > 1e12) return std::nullopt;
      }
      const HVec r = y - z;
      if (r.norm() <= 1e-12 * (1.0 + z.norm()) && ++polish >= 2) break;
      CVecX step = (a - CMat::Identity(k, k)).fullPivLu().solve(-r.to_eigen());
      if (!step.allFinite()) return std::nullopt;
      if (step.norm() > 0.5 * scale) step *= 0.5 * scale / step.norm();
      for (int i = 0; i < k; ++i) z[i] += step(i);
    }
    HVec y = z;
    for (int s = 0; s < n; ++s) {
      if (V.signed_distance(y) < -1e-9) return std::nullopt;
      y = f.eval(y);
    }
    if ((y - z).norm() > 1e-9 * (1.0 + z.norm())) return std::nullopt;
    return z;
  };
  std::vector<HVec> found;
  const int starts = 32 * f.bezout_bound();
  for (int round = 0; round < rounds; ++round) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(round)}));
    for (int s = 0; s < starts; ++s)
      if (const auto z = solve(V.sample_interior(rng))) add_distinct(found, *z);
  }
  return found;
}

}  // namespace pluridyn
