#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pluridyn/core.hpp"
#include "pluridyn/ini.hpp"
#include "pluridyn/polynomial.hpp"
#include "pluridyn/projective.hpp"

namespace pluridyn {

/// Knobs for the numeric nondegeneracy certificate.
struct CertifyOptions {
  int samples = 10000;
  int local_starts = 20;
  std::uint64_t seed = 0x6e6f6e64ULL;
  double threshold = 1e-8;
};

/// Homogeneous lift as an array of wide values (see WideComplex).
using WideVec = std::array<WideComplex, kMaxCoords>;

/// Endomorphism of P^k given by k+1 homogeneous polynomials of degree d.
/// Immutable once built; construction certifies F^{-1}(0) = {0} numerically.
class HomEndo {
 public:
  HomEndo() = default;
  HomEndo(std::vector<Polynomial> components, const CertifyOptions& opts = {}, std::string family = "custom",
          std::vector<double> params = {});

  int k() const { return k_; }
  int d() const { return d_; }
  const std::vector<Polynomial>& components() const { return comps_; }
  const std::string& family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

  /// Minimum of ||F|| on the unit sphere found by the certificate.
  double nondeg_margin() const { return min_norm_; }
  /// Maximum of ||F|| on the unit sphere seen by the certificate.
  double max_norm() const { return max_norm_; }
  /// Sup of |v| with v = d^{-1} log ||F|| on unit representatives.
  double sup_abs_v() const;

  HVec eval_lift(const HVec& z) const;
  void eval_lift_wide(const WideComplex* z, WideComplex* out) const;
  ProjPoint eval(const ProjPoint& p) const;
  /// (k+1)x(k+1) matrix of partials dF_i/dz_j.
  CMat lift_jacobian(const HVec& z) const;
  /// Partials dF_i/dz_j at z without allocating.
  Complex partial(int i, int j, const HVec& z) const;

  /// Canonical text of the coefficients; the map hash is its SHA-256.
  std::string canonical_text() const;
  std::string hash() const;

 private:
  int k_ = 0;
  int d_ = 0;
  std::vector<Polynomial> comps_;
  std::vector<Polynomial> partials_;  // row-major (k+1)x(k+1)
  double min_norm_ = 0.0;
  double max_norm_ = 0.0;
  std::string family_;
  std::vector<double> params_;
};

/// Built-in families:
///   power: k d
///   perturbed_power: k d eps (one value or k+1 values); F_i = z_i^d + eps_i z_{i+1}^d
///   quadratic_plus_c: re im; F = (z0^2, z1^2 + c z0^2)
///   ueda_product: k re im; symmetric product of k copies of z^2 + c
HomEndo make_family(const std::string& name, const std::vector<double>& params, const CertifyOptions& opts = {});

/// Lift of f o g by coefficient composition (degree d_f * d_g).
HomEndo compose(const HomEndo& f, const HomEndo& g, const CertifyOptions& opts = {});

/// Jacobian of the chart expression of f between the given charts.
struct ChartDifferential {
  CMat matrix;
  ProjPoint base;
  ProjPoint image;
  int src_chart = 0;
  int dst_chart = 0;
};

/// Charts default to the largest coordinate of base and image.
ChartDifferential differential_chart(const HomEndo& f, const ProjPoint& p);
ChartDifferential differential_chart(const HomEndo& f, const ProjPoint& p, int src_chart, int dst_chart);

/// Chart Jacobian d(chi_dst o F)/d(chi_src) built from a lift value Y = F(z)
/// and its lift Jacobian J at z with z_src = 1.
CMat chart_jacobian_from_lift(const HVec& y, const CMat& jac, int src_chart, int dst_chart);

/// Differential of f at unit z in unitary Fubini-Study frames of T_z and
/// T_f(z) (see tangent_frame). Its singular values are the FS stretch factors.
CMat differential_fs(const HomEndo& f, const HVec& z_unit);

struct Orbit {
  std::vector<ProjPoint> points;
  std::vector<ChartDifferential> tape;  // tape[j] maps orbit[j] to orbit[j+1]
};

/// Orbit of length n+1. Tape entries use the argmax chart of each point, so
/// tape[j].dst_chart == tape[j+1].src_chart and the matrices chain.
Orbit iterate_orbit(const HomEndo& f, const ProjPoint& p, int n, bool with_tape = false);

/// (F^n(z), DF^n(z)) up to a common positive scale, for any representative z.
std::pair<HVec, CMat> lift_orbit_jacobian(const HomEndo& f, const HVec& z, int n);

int critical_degree(const HomEndo& f);

/// log|det DF(z)| at a unit representative; -inf when the determinant is 0.
double jac_lift_log(const HomEndo& f, const HVec& z_unit);

/// Map description: `family = ...` + `params = ...`, or explicit
/// `k`, `d` and repeated `term = component : exponents : re im` lines.
HomEndo map_from_section(const IniSection& section, const std::string& source, const CertifyOptions& opts = {});
HomEndo load_map_file(const std::string& path, const CertifyOptions& opts = {});
std::string to_map_text(const HomEndo& f);

struct ParsedTerm {
  int component = -1;
  Exponent exps{};
  Complex coeff;
};

/// Parses `[component :] e_0 e_1 ... : re [im]`.
ParsedTerm parse_term_line(const IniEntry& e, const std::string& source, int nvars, bool with_component);

}  // namespace pluridyn
