#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pluridyn/endomorphism.hpp"
#include "pluridyn/fiber.hpp"
#include "pluridyn/grid.hpp"
#include "pluridyn/parallel.hpp"
#include "pluridyn/stats.hpp"

namespace pluridyn {

enum class ObservableKind { ChartPolynomial, CoordinateModulus, Holder };

/// Bounded real test function on P^k.
class Observable {
 public:
  using Fn = std::function<double(const ProjPoint&)>;

  Observable(ObservableKind kind, std::string name, Fn fn, double nu = 2.0);

  double operator()(const ProjPoint& p) const { return fn_(p); }
  ObservableKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  /// Hoelder exponent; 2 for smooth observables.
  double nu() const { return nu_; }

  /// Re(conj(z_i) z_j) / ||z||^2; in chart i this is Re w_j / (1 + |w|^2).
  static Observable chart_re(int i, int j);
  static Observable chart_im(int i, int j);
  /// |z_i|^{2p} / ||z||^{2p}.
  static Observable modulus_power(int i, int p);
  /// Re of sum c z^a conj(z^b) / ||z||^{2m} with |a| = |b| = m for every term.
  struct BiTerm {
    Exponent a{};
    Exponent b{};
    Complex c;
  };
  static Observable bihomogeneous(std::vector<BiTerm> terms);
  static Observable coordinate_modulus(int i);
  /// fs_distance(p, center)^nu with 0 < nu <= 2.
  static Observable holder(const ProjPoint& center, double nu);
  static Observable constant(double c);
  /// Bilinear interpolation of a grid over chart axis 0; zero outside the window.
  static Observable grid(std::shared_ptr<const ChartGrid> g);
  static Observable scaled(double c, const Observable& phi);
  /// phi o f.
  static Observable after(const HomEndo& f, const Observable& phi);
  /// psi o f - psi.
  static Observable coboundary(const HomEndo& f, const Observable& psi);

 private:
  ObservableKind kind_;
  std::string name_;
  Fn fn_;
  double nu_;
};

/// Text form used in configs: `re i j`, `im i j`, `modpow i p`, `modulus i`,
/// `const c`, `holder nu re0 im0 re1 im1 ...`, `scale c <observable>`,
/// `cob <observable>`.
Observable parse_observable(const std::string& text, const HomEndo& f);

struct Provenance {
  std::string map_hash;
  std::string method;
  int burn_in = 0;
  std::uint64_t seed = 0;
  int dropped = 0;
};

struct EmpiricalMeasure {
  std::vector<ProjPoint> points;
  std::vector<double> weights;
  Provenance provenance;

  double integrate(const Observable& phi) const;
  /// Weighted mean with a standard error from the effective sample size.
  MeanErr mean(const Observable& phi) const;
  /// Throws InvalidArgument unless weights are positive and sum to 1 within 1e-9.
  void validate() const;
};

std::string measure_to_json(const EmpiricalMeasure& m);
EmpiricalMeasure measure_from_json(const std::string& text);

inline constexpr int kDefaultBurnIn = 50;

/// True when the depth-3 backward tree of a meets a fiber consisting of one
/// point of multiplicity d^k (totally invariant signature).
bool exceptional_suspect(const HomEndo& f, const ProjPoint& a, int depth = 3);

/// Independent backward random orbits from FS-random starts, one endpoint
/// each. Samples whose orbit meets an incomplete fiber are dropped.
EmpiricalMeasure sample_equilibrium(const HomEndo& f, int n_samples, int burn_in, std::uint64_t seed, Parallel par = {});

/// Leaves of the backward tree with their weights.
EmpiricalMeasure exact_preimage_measure(const HomEndo& f, const ProjPoint& a, int n, std::size_t cap = 1u << 16,
                                        std::uint64_t seed = 0, Parallel par = {});

/// Forward orbit segment y_0..y_{length-1} with f(y_t) = y_{t+1}, obtained by
/// reversing a backward random orbit of length burn_in + length - 1. Every
/// point is at least burn_in backward steps deep, so y_0 is a mu-sample and
/// the segment is stationary. Backward steps contract, so rounding does not
/// blow up as it does along naive forward iteration.
std::vector<ProjPoint> forward_trajectory(const HomEndo& f, int length, int burn_in, std::uint64_t seed);

/// Concatenated forward_trajectory segments of the given length, trimmed to
/// n_points. Cheaper than sample_equilibrium per point; consecutive points
/// are correlated.
EmpiricalMeasure trajectory_cloud(const HomEndo& f, int n_points, int length, int burn_in, std::uint64_t seed,
                                  Parallel par = {});

/// Lambda^n phi(a) = d^{-kn} sum over f^{-n}(a) of phi, from a backward tree.
double perron_frobenius_apply(const HomEndo& f, const Observable& phi, const ProjPoint& a, int n = 1,
                              const TreeOptions& opts = {});

struct PfRate {
  std::vector<int> n;
  std::vector<double> deviation;  // max over probes of |Lambda^n phi - c_phi|
  double c_phi = 0.0;
  double slope = 0.0;  // -inf when every deviation sits at the rounding floor
  double r2 = 0.0;
  int fitted_rows = 0;
};

/// c_phi comes from depth n_max + 3 at the same probes. Rows below
/// 1e-12 (1 + |c_phi|) are treated as converged and left out of the fit.
PfRate pf_convergence_rate(const HomEndo& f, const Observable& phi, int n_max, int probe_points, std::uint64_t seed,
                           Parallel par = {});

struct CorrelationRow {
  int n = 0;
  double value = 0.0;  // I_n
  double err = 0.0;    // bootstrap standard error
};

struct CorrelationTable {
  std::vector<CorrelationRow> rows;
  /// Least-squares slope of log I_n over rows with I_n > 2 err; NaN when
  /// fewer than two rows clear the noise floor.
  double slope = 0.0;
  int fitted_rows = 0;
};

inline constexpr int kCorrelationTrajectories = 32;

CorrelationTable correlation_decay(const HomEndo& f, const Observable& phi, const Observable& psi, int n_max,
                                   int mc_samples, std::uint64_t seed, Parallel par = {});

struct CltReport {
  double mean = 0.0;           // Birkhoff mean over all trajectories
  double mean_err = 0.0;
  double mean_backward = 0.0;  // mean over independent backward endpoints
  double mean_backward_err = 0.0;
  bool means_agree = true;     // within 3 combined standard errors
  double sigma2 = 0.0;         // truncated covariance series
  double sigma = 0.0;
  int series_terms = 0;
  double direct_sigma2 = 0.0;  // Var(S_N) / N across trajectories
  double growth_ratio = 0.0;   // Var(S_N) / Var(S_{N/8})
  KsResult ks;
};

/// Throws DegenerateVariance when sigma < 1e-4 or when the partial sums stay
/// bounded (growth_ratio < sqrt 8), the signature of a coboundary.
CltReport clt_test(const HomEndo& f, const Observable& phi, int N, int trajectories, std::uint64_t seed,
                   Parallel par = {});

struct LdtRow {
  int N = 0;
  double rate = 0.0;
  int events = 0;
  bool estimable = false;  // more than 5 events
};

struct LdtReport {
  double mean = 0.0;
  std::vector<LdtRow> rows;
  /// Fit of log rate against N / (log N)^2 over estimable rows.
  double slope = 0.0;
  double r2 = 0.0;
  int fitted_rows = 0;
};

/// Empirical P(|S_N/N - m| > eps). m is the pooled Birkhoff mean unless given.
LdtReport large_deviation_profile(const HomEndo& f, const Observable& phi, double eps, const std::vector<int>& N_list,
                                  int trajectories, std::uint64_t seed, std::optional<double> mean = std::nullopt,
                                  Parallel par = {});

}  // namespace pluridyn
