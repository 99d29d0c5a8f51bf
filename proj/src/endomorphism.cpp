#include "pluridyn/endomorphism.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pluridyn/errors.hpp"
#include "pluridyn/hash.hpp"
#include "pluridyn/rng.hpp"

namespace pluridyn {

namespace {

HVec unit(HVec z) {
  z *= Complex(1.0 / z.norm(), 0.0);
  return z;
}

// Damped Gauss-Newton descent of ||F|| over the unit sphere, stepping in the
// tangent frame and renormalizing.
double local_min_norm(const HomEndo& f, HVec z) {
  double cur = f.eval_lift(z).norm();
  double lambda = 1e-3;
  for (int it = 0; it < 60 && cur > 1e-300; ++it) {
    const CMat t = tangent_frame(z);
    const CMat a = f.lift_jacobian(z) * t;
    const CVecX r = f.eval_lift(z).to_eigen();
    const CMat n = a.adjoint() * a;
    const CVecX g = a.adjoint() * r;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      CMat m = n;
      for (int i = 0; i < m.rows(); ++i) m(i, i) += lambda * (1.0 + std::real(n(i, i)));
      const CVecX delta = m.ldlt().solve(-g);
      HVec cand = z + HVec::from_eigen(t * delta);
      cand = unit(cand);
      const double val = f.eval_lift(cand).norm();
      if (val < cur) {
        z = cand;
        cur = val;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return cur;
}

void check_family_params(const std::string& name, const std::vector<double>& p, std::size_t lo, std::size_t hi) {
  if (p.size() < lo || p.size() > hi) {
    fail(ErrorKind::InvalidArgument, "family '" + name + "' expects " + std::to_string(lo) +
                                         (hi != lo ? ".." + std::to_string(hi) : std::string()) + " parameters");
  }
}

int as_int(double v, const std::string& what) {
  require(std::floor(v) == v && std::abs(v) < 1e6, what + " must be an integer");
  return static_cast<int>(v);
}

double binom(int n, int r) {
  double b = 1.0;
  for (int i = 1; i <= r; ++i) b = b * (n - r + i) / i;
  return b;
}

}  // namespace

HomEndo::HomEndo(std::vector<Polynomial> components, const CertifyOptions& opts, std::string family,
                 std::vector<double> params)
    : comps_(std::move(components)), family_(std::move(family)), params_(std::move(params)) {
  require(comps_.size() >= 2 && comps_.size() <= static_cast<std::size_t>(kMaxCoords),
          "an endomorphism needs between 2 and 4 components");
  k_ = static_cast<int>(comps_.size()) - 1;
  d_ = 0;
  for (const auto& c : comps_) {
    require(c.nvars() == k_ + 1, "component variable count must be k+1");
    d_ = std::max(d_, c.degree());
  }
  require(d_ >= 2, "algebraic degree must be at least 2");
  for (const auto& c : comps_) require(c.is_homogeneous(d_), "components must be homogeneous of a common degree");
  partials_.reserve(static_cast<std::size_t>((k_ + 1) * (k_ + 1)));
  for (const auto& c : comps_)
    for (int j = 0; j <= k_; ++j) partials_.push_back(c.derivative(j));

  // Sphere sampling keeps the smallest values as local-descent starts.
  Rng rng(opts.seed);
  std::vector<std::pair<double, HVec>> best;
  min_norm_ = std::numeric_limits<double>::infinity();
  max_norm_ = 0.0;
  const std::size_t keep = static_cast<std::size_t>(std::max(1, opts.local_starts));
  for (int s = 0; s < opts.samples; ++s) {
    const HVec z = random_fs_point(k_, rng).coords();
    const double n = eval_lift(z).norm();
    min_norm_ = std::min(min_norm_, n);
    max_norm_ = std::max(max_norm_, n);
    best.emplace_back(n, z);
    if (best.size() > 4 * keep) {
      std::nth_element(best.begin(), best.begin() + static_cast<long>(keep), best.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      best.resize(keep);
    }
  }
  std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (best.size() > keep) best.resize(keep);
  for (const auto& [n, z] : best) min_norm_ = std::min(min_norm_, local_min_norm(*this, z));
  if (!(min_norm_ >= opts.threshold)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "min ||F|| on the unit sphere is %.3e", min_norm_);
    fail(ErrorKind::Degenerate, buf);
  }
}

double HomEndo::sup_abs_v() const {
  return std::max(std::abs(std::log(min_norm_)), std::abs(std::log(max_norm_))) / d_;
}

HVec HomEndo::eval_lift(const HVec& z) const {
  HVec out(k_ + 1);
  for (int i = 0; i <= k_; ++i) out[i] = comps_[static_cast<std::size_t>(i)].eval(z);
  return out;
}

void HomEndo::eval_lift_wide(const WideComplex* z, WideComplex* out) const {
  for (int i = 0; i <= k_; ++i) out[i] = comps_[static_cast<std::size_t>(i)].eval(z);
}

ProjPoint HomEndo::eval(const ProjPoint& p) const { return normalize(eval_lift(p.coords())); }

Complex HomEndo::partial(int i, int j, const HVec& z) const {
  return partials_[static_cast<std::size_t>(i * (k_ + 1) + j)].eval(z);
}

CMat HomEndo::lift_jacobian(const HVec& z) const {
  CMat j(k_ + 1, k_ + 1);
  for (int r = 0; r <= k_; ++r)
    for (int c = 0; c <= k_; ++c) j(r, c) = partial(r, c, z);
  return j;
}

std::string HomEndo::canonical_text() const {
  std::string s = "k=" + std::to_string(k_) + ";d=" + std::to_string(d_) + "\n";
  for (const auto& c : comps_) s += c.to_string() + "\n";
  return s;
}

std::string HomEndo::hash() const { return sha256_hex(canonical_text()); }

HomEndo make_family(const std::string& name, const std::vector<double>& params, const CertifyOptions& opts) {
  std::vector<Polynomial> comps;
  if (name == "power" || name == "perturbed_power") {
    if (name == "power") {
      check_family_params(name, params, 2, 2);
    } else {
      check_family_params(name, params, 3, 6);
    }
    const int k = as_int(params[0], "k");
    const int d = as_int(params[1], "d");
    require(k >= 1 && k <= kMaxCoords - 1, "k must be in 1..3");
    require(d >= 2, "d must be at least 2");
    std::vector<double> eps(static_cast<std::size_t>(k + 1), 0.0);
    if (name == "perturbed_power") {
      const std::size_t ne = params.size() - 2;
      require(ne == 1 || ne == static_cast<std::size_t>(k + 1), "perturbed_power takes 1 or k+1 epsilons");
      for (int i = 0; i <= k; ++i) eps[static_cast<std::size_t>(i)] = params[ne == 1 ? 2 : 2 + static_cast<std::size_t>(i)];
    }
    for (int i = 0; i <= k; ++i) {
      Polynomial p(k + 1);
      Exponent e{};
      e[static_cast<std::size_t>(i)] = d;
      p.add_term(e, 1.0);
      if (eps[static_cast<std::size_t>(i)] != 0.0) {
        Exponent e2{};
        e2[static_cast<std::size_t>((i + 1) % (k + 1))] = d;
        p.add_term(e2, eps[static_cast<std::size_t>(i)]);
      }
      comps.push_back(p);
    }
  } else if (name == "quadratic_plus_c") {
    check_family_params(name, params, 1, 2);
    const Complex c(params[0], params.size() > 1 ? params[1] : 0.0);
    Polynomial f0(2), f1(2);
    f0.add_term({2, 0}, 1.0);
    f1.add_term({0, 2}, 1.0);
    f1.add_term({2, 0}, c);
    comps = {f0, f1};
  } else if (name == "ueda_product") {
    check_family_params(name, params, 2, 3);
    const int k = as_int(params[0], "k");
    require(k >= 1 && k <= kMaxCoords - 1, "k must be in 1..3");
    const Complex c(params[1], params.size() > 2 ? params[2] : 0.0);
    // A point of P^k is the unordered k-tuple of roots of Q = sum z_i X^{k-i} Y^i.
    // Each root [a:b] moves to [a^2 : b^2 + c a^2]; the new form is
    // R(X, Y - cX) where R(s^2, t^2) = Q(s,t) Q(s,-t).
    std::vector<Polynomial> z;
    for (int i = 0; i <= k; ++i) z.push_back(Polynomial::variable(k + 1, i));
    std::vector<Polynomial> r(static_cast<std::size_t>(k + 1), Polynomial(k + 1));
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) {
        if ((i + j) % 2) continue;
        const double sign = (j % 2) ? -1.0 : 1.0;
        r[static_cast<std::size_t>((i + j) / 2)] += Complex(sign, 0.0) * (z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(j)]);
      }
    for (int l = 0; l <= k; ++l) {
      Polynomial p(k + 1);
      for (int m = l; m <= k; ++m) {
        const Complex coef = binom(m, l) * ipow(-c, m - l);
        p += coef * r[static_cast<std::size_t>(m)];
      }
      comps.push_back(p);
    }
  } else {
    fail(ErrorKind::InvalidArgument, "unknown map family '" + name + "'");
  }
  return HomEndo(std::move(comps), opts, name, params);
}

HomEndo compose(const HomEndo& f, const HomEndo& g, const CertifyOptions& opts) {
  require(f.k() == g.k(), "compose needs maps on the same P^k");
  std::vector<Polynomial> comps;
  for (const auto& c : f.components()) comps.push_back(c.compose(g.components()));
  return HomEndo(std::move(comps), opts, "custom");
}

CMat chart_jacobian_from_lift(const HVec& y, const CMat& jac, int src, int dst) {
  const int n = y.size();
  const Complex yd = y[dst];
  if (std::abs(yd) <= kChartInfinity * y.norm()) fail(ErrorKind::AtInfinity, "image at infinity of target chart");
  CMat m(n - 1, n - 1);
  int r = 0;
  for (int l = 0; l < n; ++l) {
    if (l == dst) continue;
    int c = 0;
    for (int mm = 0; mm < n; ++mm) {
      if (mm == src) continue;
      m(r, c) = (jac(l, mm) * yd - y[l] * jac(dst, mm)) / (yd * yd);
      ++c;
    }
    ++r;
  }
  return m;
}

ChartDifferential differential_chart(const HomEndo& f, const ProjPoint& p, int src, int dst) {
  const HVec z = chart_lift(chart_map(p, src), src);
  const HVec y = f.eval_lift(z);
  ChartDifferential out;
  out.matrix = chart_jacobian_from_lift(y, f.lift_jacobian(z), src, dst);
  out.base = p;
  out.image = normalize(y);
  out.src_chart = src;
  out.dst_chart = dst;
  return out;
}

ChartDifferential differential_chart(const HomEndo& f, const ProjPoint& p) {
  const int src = p.coords().argmax_abs();
  const ProjPoint q = f.eval(p);
  try {
    return differential_chart(f, p, src, q.coords().argmax_abs());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::AtInfinity) fail(ErrorKind::ChartFailure, "no chart pair avoids infinity");
    throw;
  }
}

CMat differential_fs(const HomEndo& f, const HVec& z) {
  HVec y = f.eval_lift(z);
  const double ny = y.norm();
  y *= Complex(1.0 / ny, 0.0);
  const CMat tz = tangent_frame(z);
  const CMat ty = tangent_frame(y);
  return ty.adjoint() * f.lift_jacobian(z) * tz / ny;
}

Orbit iterate_orbit(const HomEndo& f, const ProjPoint& p, int n, bool with_tape) {
  require(n >= 0, "orbit length must be non-negative");
  Orbit o;
  o.points.reserve(static_cast<std::size_t>(n) + 1);
  o.points.push_back(p);
  for (int j = 0; j < n; ++j) {
    const ProjPoint& cur = o.points.back();
    ProjPoint next = f.eval(cur);
    if (with_tape) {
      o.tape.push_back(differential_chart(f, cur, cur.coords().argmax_abs(), next.coords().argmax_abs()));
    }
    o.points.push_back(next);
  }
  return o;
}

std::pair<HVec, CMat> lift_orbit_jacobian(const HomEndo& f, const HVec& z, int n) {
  HVec y = z;
  CMat j = CMat::Identity(z.size(), z.size());
  for (int s = 0; s < n; ++s) {
    j = f.lift_jacobian(y) * j;
    y = f.eval_lift(y);
    const double scale = y.max_abs();
    y *= Complex(1.0 / scale, 0.0);
    j /= scale;
  }
  return {y, j};
}

int critical_degree(const HomEndo& f) { return (f.k() + 1) * (f.d() - 1); }

double jac_lift_log(const HomEndo& f, const HVec& z) {
  const Complex det = f.lift_jacobian(z).determinant();
  const double a = std::abs(det);
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(a);
}

ParsedTerm parse_term_line(const IniEntry& e, const std::string& source, int nvars, bool with_component) {
  std::vector<std::string> parts;
  std::stringstream ss(e.value);
  std::string piece;
  while (std::getline(ss, piece, ':')) parts.push_back(trim(piece));
  const std::size_t want = with_component ? 3 : 2;
  if (parts.size() != want) {
    config_error(source, e.line, with_component ? "term expects 'component : exponents : re im'"
                                                : "term expects 'exponents : re im'");
  }
  ParsedTerm t;
  std::size_t idx = 0;
  if (with_component) {
    const auto c = split_doubles(parts[idx++], source, e.line);
    if (c.size() != 1 || std::floor(c[0]) != c[0]) config_error(source, e.line, "component must be one integer");
    t.component = static_cast<int>(c[0]);
  }
  const auto ex = split_doubles(parts[idx++], source, e.line);
  if (static_cast<int>(ex.size()) != nvars) {
    config_error(source, e.line, "expected " + std::to_string(nvars) + " exponents");
  }
  for (int i = 0; i < nvars; ++i) {
    const double v = ex[static_cast<std::size_t>(i)];
    if (v < 0 || std::floor(v) != v) config_error(source, e.line, "exponents must be non-negative integers");
    t.exps[static_cast<std::size_t>(i)] = static_cast<int>(v);
  }
  const auto co = split_doubles(parts[idx], source, e.line);
  if (co.empty() || co.size() > 2) config_error(source, e.line, "coefficient expects 're' or 're im'");
  t.coeff = Complex(co[0], co.size() > 1 ? co[1] : 0.0);
  return t;
}

HomEndo map_from_section(const IniSection& sec, const std::string& source, const CertifyOptions& opts) {
  const IniEntry* fam = sec.find("family");
  const std::string family = fam ? fam->value : std::string("custom");
  if (family != "custom") {
    const IniEntry* par = sec.find("params");
    if (!par) config_error(source, sec.line, "family '" + family + "' needs a params line");
    try {
      return make_family(family, parse_doubles(*par, source), opts);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::InvalidArgument) config_error(source, par->line, err.what());
      throw;
    }
  }
  const IniEntry* ke = sec.find("k");
  const IniEntry* de = sec.find("d");
  if (!ke || !de) config_error(source, sec.line, "custom map needs k and d");
  const auto k = parse_int(*ke, source);
  const auto d = parse_int(*de, source);
  if (k < 1 || k > kMaxCoords - 1) config_error(source, ke->line, "k must be in 1..3");
  if (d < 2) config_error(source, de->line, "d must be at least 2");
  std::vector<Polynomial> comps(static_cast<std::size_t>(k + 1), Polynomial(static_cast<int>(k + 1)));
  for (const IniEntry* t : sec.find_all("term")) {
    const ParsedTerm pt = parse_term_line(*t, source, static_cast<int>(k + 1), true);
    if (pt.component < 0 || pt.component > k) config_error(source, t->line, "component index out of range");
    int s = 0;
    for (int i = 0; i <= k; ++i) s += pt.exps[static_cast<std::size_t>(i)];
    if (s != d) config_error(source, t->line, "exponents must sum to d = " + std::to_string(d));
    comps[static_cast<std::size_t>(pt.component)].add_term(pt.exps, pt.coeff);
  }
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].is_zero()) config_error(source, sec.line, "component " + std::to_string(i) + " has no terms");
  }
  return HomEndo(std::move(comps), opts, "custom");
}

HomEndo load_map_file(const std::string& path, const CertifyOptions& opts) {
  const IniDocument doc = load_ini(path);
  const IniSection* sec = doc.section("map");
  if (!sec) config_error(path, 1, "missing [map] section");
  return map_from_section(*sec, path, opts);
}

std::string to_map_text(const HomEndo& f) {
  std::string s = "[map]\nfamily = custom\nk = " + std::to_string(f.k()) + "\nd = " + std::to_string(f.d()) + "\n";
  char buf[160];
  for (int i = 0; i <= f.k(); ++i) {
    for (const auto& t : f.components()[static_cast<std::size_t>(i)].terms()) {
      s += "term = " + std::to_string(i) + " :";
      for (int j = 0; j <= f.k(); ++j) s += " " + std::to_string(t.exps[static_cast<std::size_t>(j)]);
      std::snprintf(buf, sizeof buf, " : %.17g %.17g\n", t.coeff.real(), t.coeff.imag());
      s += buf;
    }
  }
  return s;
}

}  // namespace pluridyn
