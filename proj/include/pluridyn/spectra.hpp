#pragma once

#include <cstdint>
#include <vector>

#include "pluridyn/endomorphism.hpp"
#include "pluridyn/measure.hpp"
#include "pluridyn/parallel.hpp"

namespace pluridyn {

/// Exponents are counted per complex direction: k values for a map of P^k.
struct LyapunovReport {
  std::vector<double> exponents;  // descending
  std::vector<double> stderrs;
  double sum = 0.0;
  double sum_stderr = 0.0;
  /// Birkhoff average of log|det Df| in argmax charts along the same orbit.
  double jac_average = 0.0;
  double jac_stderr = 0.0;
  bool sum_consistent = false;  // |sum - jac_average| <= 3 combined stderr
  bool bound_ok = false;        // chi_k >= log(d)/2 - 3 stderr
  int orbit_len = 0;
  int reorth_period = 1;
  int restarts = 0;
};

struct LyapunovOptions {
  int orbit_len = 10000;
  int reorth_period = 1;
  int burn_in = kDefaultBurnIn;
  int max_restarts = 3;
};

/// QR accumulation of the derivative cocycle in unitary FS frames along a
/// stationary orbit from forward_trajectory. Throws SingularCocycle when every
/// restart meets a numerically singular differential.
LyapunovReport lyapunov_spectrum(const HomEndo& f, std::uint64_t seed, const LyapunovOptions& opts = {});

struct PeriodicPoint {
  ProjPoint point;
  std::vector<Complex> multipliers;  // eigenvalues of D(f^n) in a chart
  bool repelling = false;
  double residual = 0.0;  // fs_distance(f^n(p), p)
};

struct PeriodicSet {
  int n = 0;
  std::vector<PeriodicPoint> points;
  /// Number of solutions of f^n(p) = p counted with multiplicity; saturates
  /// at UINT64_MAX.
  std::uint64_t expected_count = 0;
  bool exhaustive = false;
};

/// (D^{k+1} - 1) / (D - 1) with D = d^n.
std::uint64_t periodic_count(int k, int d, int n);

inline constexpr double kPeriodicTol = 1e-10;
inline constexpr double kPeriodicDedup = 1e-7;

/// Chart Newton on f^n(z) = z from backward-tree leaves of FS-random roots,
/// forward iterates and random starts. When expected_count <= cap the search
/// is exhaustive and throws IncompleteEnumeration on a shortfall; otherwise
/// it stops after cap points.
PeriodicSet periodic_points(const HomEndo& f, int n, std::size_t cap, std::uint64_t seed = 0, Parallel par = {});

std::string periodic_to_csv(const PeriodicSet& set);

/// Twelve fixed smooth observables on P^k used for moment distances.
std::vector<Observable> smooth_dictionary(int k);

/// max over the dictionary of |<a, phi> - <b, phi>|.
double moment_gap(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

struct EquidistRow {
  int n = 0;
  std::size_t count = 0;
  double gap = 0.0;
};

struct EquidistTable {
  std::vector<EquidistRow> rows;
  bool decreasing = true;  // each gap <= 1.2 x the previous one
};

/// Gap between mu_n = d^{-kn} sum over P_n of delta_a and the reference.
EquidistTable periodic_equidistribution_gap(const HomEndo& f, const std::vector<int>& n_list,
                                            const EmpiricalMeasure& reference, std::uint64_t seed = 0,
                                            Parallel par = {});

struct EntropyRow {
  double eps = 0.0;
  std::vector<std::size_t> counts;  // N(n, eps) for n = 0..n_max
  bool defined = false;             // at least 3 unsaturated rows with n >= 1
  double slope = 0.0;
  double r2 = 0.0;
  int fitted_rows = 0;
};

struct EntropyReport {
  std::vector<EntropyRow> rows;
  double estimate = 0.0;  // sup of defined slopes; NaN when none is defined
  std::size_t cloud_size = 0;
  int n_max = 0;
};

/// Counts stop being fitted once N(n, eps) exceeds this fraction of the cloud.
inline constexpr double kEntropySaturation = 0.125;

/// Greedy maximal (n, eps)-separated subsets of the cloud in the Bowen metric
/// built on fs_distance. The cloud should be spread over the support of mu;
/// orbits are iterated forward from its points.
EntropyReport entropy_estimate(const HomEndo& f, int n_max, const std::vector<double>& eps_list,
                               const EmpiricalMeasure& cloud, Parallel par = {});

struct DimensionReport {
  double box_dim = 0.0;
  double r2 = 0.0;
  std::vector<double> scales;
  std::vector<std::size_t> counts;
  double lower = 0.0;  // k log d / chi_1
  double upper = 0.0;  // 2k - (2 Sigma - k log d) / chi_1
  bool within = false;  // lower - 0.2 <= box_dim <= upper + 0.2
  std::size_t points_used = 0;
};

/// Box counting in chart `chart` over the four finest dyadic scales that keep
/// on average at least 10 points per occupied box.
DimensionReport dimension_bounds_report(const HomEndo& f, const EmpiricalMeasure& sample, const LyapunovReport& lyap,
                                        int chart = 0);

}  // namespace pluridyn
