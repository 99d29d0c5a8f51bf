#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pluridyn/core.hpp"
#include "pluridyn/endomorphism.hpp"
#include "pluridyn/ini.hpp"
#include "pluridyn/measure.hpp"
#include "pluridyn/parallel.hpp"
#include "pluridyn/polynomial.hpp"
#include "pluridyn/rng.hpp"

namespace pluridyn {

/// Box (per coordinate |Re|, |Im| <= r_i around the center) or Euclidean ball.
struct ConvexDomain {
  enum class Kind { Box, Ball };
  Kind kind = Kind::Box;
  HVec center;
  std::vector<double> extents;  // one per coordinate for a box, one radius for a ball

  static ConvexDomain box(HVec center, std::vector<double> half_widths);
  static ConvexDomain ball(HVec center, double radius);

  int dim() const { return center.size(); }
  void validate() const;
  bool contains(const HVec& z) const;
  /// Euclidean distance to the boundary: positive inside, negative outside.
  double signed_distance(const HVec& z) const;
  double volume() const;
  HVec sample_interior(Rng& rng) const;
  HVec sample_boundary(Rng& rng) const;
};

struct PolyLikeOptions {
  int boundary_samples = 10000;
  int targets = 50;
  double min_margin = 1e-6;
  /// Share of targets that must agree on the fiber count.
  double agreement = 0.9;
};

/// Polynomial self-map of C^k restricted to U = f^{-1}(V) inside V. Built
/// only by make_polylike, which certifies properness and the degree.
class PolyLikeMap {
 public:
  int k() const { return static_cast<int>(comps_.size()); }
  const std::vector<Polynomial>& components() const { return comps_; }
  const ConvexDomain& domain() const { return domain_; }
  int topological_degree() const { return d_t_; }
  /// min over sampled boundary points of V of the distance from f(z) to V.
  double properness_margin() const { return margin_; }
  /// Fiber counts over the generic targets used for the degree vote.
  const std::vector<int>& target_counts() const { return target_counts_; }
  /// Product of component degrees; bounds every fiber.
  int bezout_bound() const;

  HVec eval(const HVec& z) const;
  CMat jacobian(const HVec& z) const;
  std::string canonical_text() const;
  std::string hash() const;

 private:
  friend PolyLikeMap make_polylike(std::vector<Polynomial>, ConvexDomain, std::uint64_t, const PolyLikeOptions&);
  std::vector<Polynomial> comps_;
  std::vector<Polynomial> partials_;  // row-major k x k
  ConvexDomain domain_;
  int d_t_ = 0;
  double margin_ = 0.0;
  std::vector<int> target_counts_;
};

/// Throws NotProper when some sampled boundary image lands within
/// min_margin of V, DegreeAmbiguous when fiber counts disagree and
/// DegreeTooLow when the certified degree is below 2.
PolyLikeMap make_polylike(std::vector<Polynomial> ambient, ConvexDomain V, std::uint64_t seed,
                          const PolyLikeOptions& opts = {});

/// `k`, repeated `term = component : e_1 .. e_k : re [im]`, `domain = box|ball`,
/// `center = re im ...` and `extents = r ...`.
PolyLikeMap polylike_from_section(const IniSection& section, const std::string& source, std::uint64_t seed,
                                  const PolyLikeOptions& opts = {});
std::string to_polylike_text(const PolyLikeMap& f);

/// Distinct solutions of f(z) = w inside V by multistart Newton. With
/// expected > 0 the search stops as soon as that many roots are found.
std::vector<HVec> pl_fiber(const PolyLikeMap& f, const HVec& w, std::uint64_t seed, int expected = 0);

struct Membership {
  bool inside = false;  // provisional at depth n_max
  int escape_time = 0;  // first m with f^m(z) outside V; n_max when inside
};

Membership filled_julia_membership(const PolyLikeMap& f, const HVec& z, int n_max);

/// Weighted cloud in C^k coordinates.
struct AffineMeasure {
  std::vector<HVec> points;
  std::vector<double> weights;
  Provenance provenance;

  MeanErr mean(const std::function<double(const HVec&)>& phi) const;
};

/// Backward random orbits with complete fibers in U. Each orbit starts at
/// `start` when given, else at a uniform point of V.
AffineMeasure sample_equilibrium_pl(const PolyLikeMap& f, int n_samples, int burn_in, std::uint64_t seed,
                                    std::optional<HVec> start = std::nullopt, Parallel par = {});

/// Share of samples that stay in V for n_probe steps while some point of
/// the +-radius stencil along every real axis escapes.
double near_boundary_fraction(const PolyLikeMap& f, const AffineMeasure& m, double radius = 0.05, int n_probe = 30);

struct LogJacobian {
  double value = 0.0;  // <mu, log |det Df|^2>
  double stderr_ = 0.0;
  double bound = 0.0;  // log d_t
  int dropped = 0;     // samples on the critical set
  bool ok = false;     // value >= bound - 3 stderr
};

LogJacobian log_jacobian_check(const PolyLikeMap& f, const AffineMeasure& m);

/// 1.1x inflation of the bounding box of the sample plus 5% of the extent of
/// V, clipped to stay inside V.
ConvexDomain default_degree_window(const PolyLikeMap& f, const AffineMeasure& mu);

/// e_p of the squared singular values of the identity, i.e. binom(k, p);
/// kappa_p(A) / kappa_p(I) is the density of A^* omega^p wedge omega^{k-p}.
double kappa_calibration(int k, int p);
double kappa(const CMat& a, int p);

struct DegreeEstimate {
  int p = 0;
  double estimate = 0.0;        // exp of the fitted slope of log mass
  std::vector<double> masses;   // n = 1..n_max, normalized by vol(W)
  std::vector<double> stderrs;
  double r2 = 0.0;
  ConvexDomain window;
};

/// Monte Carlo mass of (f^n)^* omega^p on f^{-n}(W): targets uniform in W
/// and, for every preimage x in the backward tree, kappa_p(Df^n(x)) / kappa_p(I)
/// / |det Df^n(x)|^2. Throws TreeBudgetExceeded when d_t^n_max * mc_samples
/// exceeds cap.
DegreeEstimate dynamical_degree_estimate(const PolyLikeMap& f, int p, int n_max, int mc_samples, std::uint64_t seed,
                                         const ConvexDomain& window, std::size_t cap = std::size_t{1} << 22,
                                         Parallel par = {});

/// log |a0 + sum a_i z_i|.
struct AffineLog {
  Complex a0;
  std::vector<Complex> a;

  double operator()(const HVec& z) const;
};

struct PlPfRate {
  std::vector<int> n;
  std::vector<double> deviation;
  double c_phi = 0.0;
  double slope = 0.0;  // -inf when every row sits at the rounding floor
  double lambda = 0.0;
  double r2 = 0.0;
  int fitted_rows = 0;
  bool monotone = true;  // each deviation <= 1.2 x the previous one
};

/// Lambda^n phi(w) = d_t^{-n} sum over f^{-n}(w) of phi at probes drawn from
/// mu; c_phi from depth n_max + 2. Throws InvalidArgument when h vanishes
/// near the sampled K.
PlPfRate pf_rate_pl(const PolyLikeMap& f, const AffineLog& phi, int n_max, int probes, std::uint64_t seed,
                    Parallel par = {});

/// Distinct fixed points of f^n whose orbit stays in V.
std::vector<HVec> pl_periodic_points(const PolyLikeMap& f, int n, std::uint64_t seed, int rounds = 6);

}  // namespace pluridyn
