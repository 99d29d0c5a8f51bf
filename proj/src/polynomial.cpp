#include "pluridyn/polynomial.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>

#include "pluridyn/errors.hpp"

namespace pluridyn {

namespace {

WideComplex make_wide(Complex m, std::int64_t e) {
  WideComplex w;
  const double a = std::max(std::abs(m.real()), std::abs(m.imag()));
  if (a == 0.0 || !std::isfinite(a)) {
    w.mant = (a == 0.0) ? Complex(0.0, 0.0) : m;
    w.exp = 0;
    return w;
  }
  int shift = 0;
  std::frexp(a, &shift);
  w.mant = Complex(std::ldexp(m.real(), -shift), std::ldexp(m.imag(), -shift));
  w.exp = e + shift;
  return w;
}

WideComplex wide_pow(WideComplex z, int e) {
  WideComplex r(Complex(1.0, 0.0));
  while (e > 0) {
    if (e & 1) r = r * z;
    z = z * z;
    e >>= 1;
  }
  return r;
}

}  // namespace

WideComplex::WideComplex(Complex z) { *this = make_wide(z, 0); }

double WideComplex::log_abs() const {
  if (is_zero()) return -std::numeric_limits<double>::infinity();
  return std::log(std::abs(mant)) + static_cast<double>(exp) * std::log(2.0);
}

Complex WideComplex::to_complex() const {
  if (exp > 4000) return {std::numeric_limits<double>::infinity(), 0.0};
  if (exp < -4000) return {0.0, 0.0};
  const int e = static_cast<int>(exp);
  return {std::ldexp(mant.real(), e), std::ldexp(mant.imag(), e)};
}

WideComplex operator*(const WideComplex& a, const WideComplex& b) {
  if (a.is_zero() || b.is_zero()) return {};
  return make_wide(a.mant * b.mant, a.exp + b.exp);
}

WideComplex operator+(const WideComplex& a, const WideComplex& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const WideComplex& hi = (a.exp >= b.exp) ? a : b;
  const WideComplex& lo = (a.exp >= b.exp) ? b : a;
  const std::int64_t gap = hi.exp - lo.exp;
  if (gap > 120) return hi;
  const int g = static_cast<int>(gap);
  const Complex low(std::ldexp(lo.mant.real(), -g), std::ldexp(lo.mant.imag(), -g));
  return make_wide(hi.mant + low, hi.exp);
}

WideComplex operator-(const WideComplex& a, const WideComplex& b) {
  WideComplex nb = b;
  nb.mant = -nb.mant;
  return a + nb;
}

Complex ipow(Complex z, int e) {
  Complex r(1.0, 0.0);
  while (e > 0) {
    if (e & 1) r *= z;
    z *= z;
    e >>= 1;
  }
  return r;
}

Polynomial Polynomial::constant(int nvars, Complex c) {
  Polynomial p(nvars);
  p.add_term(Exponent{}, c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
  require(index >= 0 && index < nvars, "variable index out of range");
  Exponent e{};
  e[static_cast<std::size_t>(index)] = 1;
  return monomial(nvars, e, Complex(1.0, 0.0));
}

Polynomial Polynomial::monomial(int nvars, const Exponent& exps, Complex c) {
  Polynomial p(nvars);
  p.add_term(exps, c);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int i = 0; i < nvars_; ++i) s += t.exps[static_cast<std::size_t>(i)];
    d = std::max(d, s);
  }
  return d;
}

int Polynomial::max_exponent() const {
  int m = 0;
  for (const auto& t : terms_)
    for (int i = 0; i < nvars_; ++i) m = std::max(m, t.exps[static_cast<std::size_t>(i)]);
  return m;
}

bool Polynomial::is_homogeneous(int d) const {
  for (const auto& t : terms_) {
    int s = 0;
    for (int i = 0; i < nvars_; ++i) s += t.exps[static_cast<std::size_t>(i)];
    if (s != d) return false;
  }
  return true;
}

void Polynomial::add_term(const Exponent& exps, Complex c) {
  require(nvars_ >= 1 && nvars_ <= kMaxCoords, "polynomial variable count out of range");
  for (int i = 0; i < kMaxCoords; ++i) {
    const int e = exps[static_cast<std::size_t>(i)];
    require(e >= 0, "negative exponent");
    require(i < nvars_ || e == 0, "exponent on a variable beyond nvars");
  }
  auto it = std::lower_bound(terms_.begin(), terms_.end(), exps,
                             [](const Term& t, const Exponent& e) { return t.exps < e; });
  if (it != terms_.end() && it->exps == exps) {
    it->coeff += c;
    if (it->coeff == Complex(0.0, 0.0)) terms_.erase(it);
  } else if (c != Complex(0.0, 0.0)) {
    terms_.insert(it, Term{exps, c});
  }
}

Complex Polynomial::coefficient(const Exponent& exps) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), exps,
                             [](const Term& t, const Exponent& e) { return t.exps < e; });
  if (it != terms_.end() && it->exps == exps) return it->coeff;
  return {0.0, 0.0};
}

void Polynomial::canonicalize() {
  std::map<Exponent, Complex> acc;
  for (const auto& t : terms_) acc[t.exps] += t.coeff;
  terms_.clear();
  for (const auto& [e, c] : acc)
    if (c != Complex(0.0, 0.0)) terms_.push_back(Term{e, c});
}

Polynomial Polynomial::derivative(int var) const {
  require(var >= 0 && var < nvars_, "derivative variable out of range");
  Polynomial r(nvars_);
  for (const auto& t : terms_) {
    const int e = t.exps[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    Term nt = t;
    nt.exps[static_cast<std::size_t>(var)] = e - 1;
    nt.coeff *= static_cast<double>(e);
    r.terms_.push_back(nt);
  }
  r.canonicalize();
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (nvars_ == 0) nvars_ = o.nvars_;
  require(o.nvars_ == nvars_ || o.terms_.empty(), "polynomial variable counts differ");
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  canonicalize();
  return *this;
}

Polynomial& Polynomial::operator*=(Complex s) {
  for (auto& t : terms_) t.coeff *= s;
  canonicalize();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  require(a.nvars_ == b.nvars_, "polynomial variable counts differ");
  Polynomial r(a.nvars_);
  std::map<Exponent, Complex> acc;
  for (const auto& x : a.terms_)
    for (const auto& y : b.terms_) {
      Exponent e{};
      for (int i = 0; i < kMaxCoords; ++i) e[static_cast<std::size_t>(i)] = x.exps[static_cast<std::size_t>(i)] + y.exps[static_cast<std::size_t>(i)];
      acc[e] += x.coeff * y.coeff;
    }
  for (const auto& [e, c] : acc)
    if (c != Complex(0.0, 0.0)) r.terms_.push_back(Term{e, c});
  return r;
}

Polynomial Polynomial::pow(int e) const {
  require(e >= 0, "negative polynomial power");
  Polynomial r = constant(nvars_, Complex(1.0, 0.0));
  Polynomial b = *this;
  while (e > 0) {
    if (e & 1) r = r * b;
    e >>= 1;
    if (e > 0) b = b * b;
  }
  return r;
}

Polynomial Polynomial::compose(const std::vector<Polynomial>& subs) const {
  require(static_cast<int>(subs.size()) == nvars_, "compose needs one substitute per variable");
  const int nv = subs.empty() ? 0 : subs[0].nvars();
  for (const auto& s : subs) require(s.nvars() == nv, "substitutes must share a variable count");
  // Powers of each substitute are cached to avoid recomputation across terms.
  std::vector<std::vector<Polynomial>> powers(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    int emax = 0;
    for (const auto& t : terms_) emax = std::max(emax, t.exps[i]);
    powers[i].push_back(constant(nv, Complex(1.0, 0.0)));
    for (int e = 1; e <= emax; ++e) powers[i].push_back(powers[i].back() * subs[i]);
  }
  Polynomial r(nv);
  for (const auto& t : terms_) {
    Polynomial prod = constant(nv, t.coeff);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (t.exps[i] > 0) prod = prod * powers[i][static_cast<std::size_t>(t.exps[i])];
    r += prod;
  }
  return r;
}

Complex Polynomial::eval(const Complex* x) const {
  Complex s(0.0, 0.0);
  for (const auto& t : terms_) {
    Complex m = t.coeff;
    for (int i = 0; i < nvars_; ++i) {
      const int e = t.exps[static_cast<std::size_t>(i)];
      if (e == 1) {
        m *= x[i];
      } else if (e > 1) {
        m *= ipow(x[i], e);
      }
    }
    s += m;
  }
  return s;
}

WideComplex Polynomial::eval(const WideComplex* x) const {
  WideComplex s;
  for (const auto& t : terms_) {
    WideComplex m(t.coeff);
    for (int i = 0; i < nvars_; ++i) {
      const int e = t.exps[static_cast<std::size_t>(i)];
      if (e > 0) m = m * wide_pow(x[i], e);
    }
    s = s + m;
  }
  return s;
}

std::string Polynomial::to_string() const {
  std::string out;
  char buf[128];
  for (const auto& t : terms_) {
    out += "[";
    for (int i = 0; i < nvars_; ++i) {
      std::snprintf(buf, sizeof buf, i ? " %d" : "%d", t.exps[static_cast<std::size_t>(i)]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "] %.17g %.17g;", t.coeff.real(), t.coeff.imag());
    out += buf;
  }
  return out;
}

}  // namespace pluridyn
