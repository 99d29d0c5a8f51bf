#pragma once

#include <cstdint>
#include <vector>

#include "pluridyn/endomorphism.hpp"
#include "pluridyn/grid.hpp"
#include "pluridyn/parallel.hpp"
#include "pluridyn/polynomial.hpp"

namespace pluridyn {

struct GreenEval {
  double value = 0.0;
  int n_used = 0;
  double tail_bound = 0.0;
};

/// g(p) = sum_j d^{-j} v(f^j p) with v = d^{-1} log ||F(z)|| on unit
/// representatives. The sum stops once C d^{-n} < tol, C = 2 sup|v|.
GreenEval green_function(const HomEndo& f, const ProjPoint& p, double tol = 1e-10);

/// Potential of T on C^{k+1}: G(z) = log||z|| + g([z]). G(F(z)) = d G(z).
double green_lift(const HomEndo& f, const HVec& z, double tol = 1e-10);

/// Number of terms green_function needs for a tolerance.
int green_terms(const HomEndo& f, double tol);

/// FS operator norm of Df^n at a unit representative.
double fs_norm_iterate(const HomEndo& f, const HVec& z_unit, int n);

struct HolderReport {
  double d_infty = 0.0;
  double gamma = 0.0;
  std::vector<double> per_n;  // per_n[n-1] = (sup ||Df^n||)^{1/n}
};

struct HolderOptions {
  int samples = 2000;
  int refine_starts = 8;
  std::uint64_t seed = 0x686f6c64ULL;
};

/// d_infty as the minimum over n <= n_max of the sampled sup of the FS norm
/// of Df^n, to the power 1/n; gamma = min(1, log d / log d_infty).
HolderReport d_infty_and_holder(const HomEndo& f, int n_max, const HolderOptions& opts = {});

struct DensityGrid {
  ChartGrid grid;
  double mass = 0.0;
  /// Negative mass over positive mass of the cells below -1e-6 * max density.
  double negative_score = 0.0;
  /// Same two numbers for the Richardson combination (4 rho_h - rho_2h) / 3.
  double richardson_mass = 0.0;
  double richardson_negative_score = 0.0;
};

inline constexpr double kMaxNegativeScore = 0.1;

/// Trace density of T = omega_FS + dd^c g over axis 0 of the window, with the
/// remaining chart coordinates fixed at the window center. For k = 1 this is
/// the density of mu. Discrete dd^c of the chart potential G(chart_lift(w))
/// by the 5-point stencil per complex axis. Throws ResolutionTooCoarse when
/// negative_score exceeds kMaxNegativeScore.
DensityGrid green_density_grid(const HomEndo& f, const ChartWindow& w, int res, double tol = 1e-10,
                               Parallel par = {});

struct DecayRow {
  int n = 0;
  double l1 = 0.0;
  double stderr_ = 0.0;
};

/// Empirical FS-L^1 norm of u_n = d^{-n} u o f^n with
/// u = s^{-1} log|h(z)| - g - m, m making the sample mean of u zero.
/// F^n is applied to unit lifts in wide arithmetic so the logs never underflow.
std::vector<DecayRow> hypersurface_potential_decay(const HomEndo& f, const Polynomial& h, int n_max,
                                                   int sample_count, std::uint64_t seed, Parallel par = {});

}  // namespace pluridyn
