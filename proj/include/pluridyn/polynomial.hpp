#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pluridyn/core.hpp"

namespace pluridyn {

using Exponent = std::array<int, kMaxCoords>;

struct Term {
  Exponent exps{};
  Complex coeff;
};

/// Complex number with an extended binary exponent: value = mant * 2^exp.
/// Lets long iterations of polynomial maps run without overflow or underflow.
struct WideComplex {
  Complex mant{0.0, 0.0};
  std::int64_t exp = 0;

  WideComplex() = default;
  WideComplex(Complex z);  // NOLINT(google-explicit-constructor)

  bool is_zero() const { return mant == Complex(0.0, 0.0); }
  /// log|value|; -inf for zero.
  double log_abs() const;
  /// Closest double-precision value (may under/overflow).
  Complex to_complex() const;
  WideComplex scaled_pow2(std::int64_t e) const {
    WideComplex r = *this;
    if (!r.is_zero()) r.exp += e;
    return r;
  }

  friend WideComplex operator*(const WideComplex& a, const WideComplex& b);
  friend WideComplex operator+(const WideComplex& a, const WideComplex& b);
  friend WideComplex operator-(const WideComplex& a, const WideComplex& b);
};

/// Sparse polynomial in nvars complex variables. Terms are kept sorted by
/// exponent with zero coefficients dropped.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  static Polynomial constant(int nvars, Complex c);
  static Polynomial variable(int nvars, int index);
  static Polynomial monomial(int nvars, const Exponent& exps, Complex c);

  int nvars() const { return nvars_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// Largest total degree of a term (0 for the zero polynomial).
  int degree() const;
  /// Largest exponent of a single variable.
  int max_exponent() const;
  bool is_homogeneous(int d) const;

  void add_term(const Exponent& exps, Complex c);
  Complex coefficient(const Exponent& exps) const;

  Polynomial derivative(int var) const;
  /// Substitutes subs[i] for variable i; all subs share one variable count.
  Polynomial compose(const std::vector<Polynomial>& subs) const;
  Polynomial pow(int e) const;

  Complex eval(const Complex* x) const;
  Complex eval(const HVec& x) const { return eval(x.begin()); }
  WideComplex eval(const WideComplex* x) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator*=(Complex s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Complex s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a += Complex(-1.0, 0.0) * b; }

  /// Canonical text form; equal polynomials give equal strings.
  std::string to_string() const;

 private:
  void canonicalize();

  int nvars_ = 0;
  std::vector<Term> terms_;
};

Complex ipow(Complex z, int e);

}  // namespace pluridyn
