#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pluridyn/endomorphism.hpp"
#include "pluridyn/grid.hpp"
#include "pluridyn/parallel.hpp"
#include "pluridyn/polylike.hpp"

namespace pluridyn {

/// Holomorphic family over a box in C^m (m = 1 or 2). Exactly one of
/// `endo` and `polylike` is set. Realization may throw; such cells are masked.
struct ParamFamily {
  std::string name;
  ChartWindow window;  // chart_index unused; center and half_widths live in C^m
  std::function<HomEndo(const HVec&)> endo;
  std::function<PolyLikeMap(const HVec&)> polylike;

  int params() const { return window.dim(); }
  bool is_quadratic() const { return name == "quadratic_plus_c"; }
};

/// Certification used per grid cell; lighter than the single-map default.
inline CertifyOptions grid_certify() { return {1000, 8, 0x6e6f6e64ULL, 1e-8}; }

/// z^2 + c with c in the window.
ParamFamily quadratic_family(const ChartWindow& window, const CertifyOptions& certify = grid_certify());

/// make_family(family, fixed ++ [re s_1, im s_1, ...]).
ParamFamily endo_family(const std::string& family, std::vector<double> fixed, const ChartWindow& window,
                        const CertifyOptions& certify = grid_certify());

/// base + sum_i s_i directions[i], restricted to V.
ParamFamily polylike_family(std::vector<Polynomial> base, std::vector<std::vector<Polynomial>> directions,
                            ConvexDomain V, const ChartWindow& window, std::uint64_t seed = 0);

enum class LyapunovMethod {
  /// lyapunov_spectrum per cell (P^k) or backward-orbit mu samples (polynomial-like).
  Orbit,
  /// <mu_n, log |det Df|> in chart 0 over the exact depth-n preimage tree of
  /// a fixed point; deterministic, stderr is |L_n - L_{n-1}|. P^k families only.
  Preimage,
};

struct FieldOptions {
  LyapunovMethod method = LyapunovMethod::Orbit;
  int burn_in = 40;
  int depth = 10;
  /// Root of the preimage trees, in chart 0. Far outside every filled Julia
  /// set of the quadratic window so that the discrete masses of dd^c L_n sit
  /// outside the connectedness locus.
  Complex anchor{3.0, 0.0};
  Parallel par;
};

struct LyapunovField {
  ChartGrid grid;               // L per cell, NaN where masked
  std::vector<double> stderrs;  // per cell
  std::vector<std::uint8_t> masked;
  std::string method;
  int orbit_len = 0;
  int depth = 0;
  double lower_bound = 0.0;  // k log d / 2 or log d_t / 2
  int bound_violations = 0;  // included cells with L < lower_bound - 3 stderr
  std::vector<std::string> warnings;

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix);
  }
  int included() const;
};

/// Sum of Lyapunov exponents over a res x res lattice of the first parameter
/// axis (remaining axes at the window center). For polynomial-like families
/// orbit_len is the number of mu samples per cell.
LyapunovField family_lyapunov_grid(const ParamFamily& fam, int res, int orbit_len, std::uint64_t seed,
                                   const FieldOptions& opts = {});

/// G_c(c) = lim 2^{-n} log |f_c^n(c)| by the escape series.
double escape_green(Complex c, double tol = 1e-12);

/// log 2 + G_c(c) / 2: log 2 plus the Green value at the critical point 0.
double escape_lyapunov(Complex c);

struct OracleCheck {
  int cells = 0;
  int flagged = 0;  // |L - oracle| > 3 stderr
  double max_abs = 0.0;
  double max_z = 0.0;
  std::vector<std::uint8_t> flags;
};

OracleCheck escape_oracle_check(const LyapunovField& field);

struct BifurcationDensity {
  ChartGrid grid;  // dd^c L = Laplacian / 2 pi; NaN on the border and next to masked cells
  double positive_mass = 0.0;
  double negative_mass = 0.0;
  double negative_score = 0.0;  // negative over positive mass
};

inline constexpr double kBifurcationMaxNegative = 0.1;
/// Positive mass below this counts as none when scoring the negative lobes;
/// stencil truncation on a harmonic field leaves about that much.
inline constexpr double kBifurcationMassFloor = 1e-4;

/// 5-point Laplacian of L. Throws ResolutionTooCoarse when the negative
/// lobes exceed 10% of the positive mass and InvalidArgument for m != 1.
BifurcationDensity bifurcation_measure(const LyapunovField& field);

/// Chebyshev distance in cells to the escape-time boundary of the
/// Mandelbrot set on the lattice of `g`. Boundary cells are bounded cells
/// (max_iter steps) next to escaping ones, plus escaping cells whose exterior
/// distance estimate |z| log|z| / |dz/dc| is below half the cell diagonal, so
/// that filaments thinner than a cell still count.
std::vector<int> mandelbrot_boundary_distance(const ChartGrid& g, int max_iter = 2000);

/// Share of the positive mass within `cells` of the escape-time boundary.
double mass_near_boundary(const BifurcationDensity& b, int cells = 3, int max_iter = 2000);

struct SubmeanReport {
  int trials = 0;
  int violations = 0;
  double rate = 0.0;
};

/// Random (center, radius) pairs over included cells, radius 2..8 cells; the
/// circle is the ring of cells at rounded lattice distance r. A violation is
/// L(center) above the ring mean by more than 3 combined stderr. Meant for
/// orbit fields: preimage fields carry log poles of weight d^{-kn} next to
/// the bifurcation locus, and ring cells close to a pole break the discrete
/// inequality even though L_n is psh.
SubmeanReport psh_submean_check(const LyapunovField& field, int trials, std::uint64_t seed);

/// max |L(s) - L(s')| / |s - s'|^exponent over adjacent included cells.
double holder_probe(const LyapunovField& field, double exponent = 0.5);

}  // namespace pluridyn
