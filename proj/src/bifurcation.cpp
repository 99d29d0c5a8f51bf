#include "pluridyn/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "pluridyn/errors.hpp"
#include "pluridyn/fiber.hpp"
#include "pluridyn/rng.hpp"
#include "pluridyn/spectra.hpp"

namespace pluridyn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_window(const ChartWindow& w) {
  w.validate();
  require(w.dim() == 1 || w.dim() == 2, "parameter window must live in C^1 or C^2");
}

HVec param_point(const ChartWindow& w, Complex s0) {
  HVec s = w.center;
  s[0] = s0;
  return s;
}

struct Cell {
  double value = kNaN;
  double stderr_ = kNaN;
  bool masked = true;
  std::string warning;
};

HVec anchor_lift(int k, Complex anchor) {
  HVec z(k + 1);
  z[0] = 1.0;
  for (int j = 1; j <= k; ++j) z[j] = anchor * (1.0 + 0.1 * (j - 1));
  return z;
}

// Chart 0 on both sides: the preimages move holomorphically with s, so the
// average is pluriharmonic in s away from the tree's critical collisions.
// A leaf on {z_0 = 0} makes the value non-finite and the cell is masked.
double tree_average(const HomEndo& f, const std::vector<TreeNode>& level) {
  double s = 0.0;
  for (const auto& node : level) {
    const HVec& y = node.point.coords();
    if (std::abs(y[0]) < kChartInfinity) return kNaN;
    s += node.weight * std::log(std::abs(chart_jacobian_from_lift(y, f.lift_jacobian(y), 0, 0).determinant()));
  }
  return s;
}

Cell endo_cell(const HomEndo& f, int orbit_len, std::uint64_t seed, const FieldOptions& opts) {
  Cell c;
  if (opts.method == LyapunovMethod::Orbit) {
    const LyapunovReport r = lyapunov_spectrum(f, seed, {orbit_len, 1, opts.burn_in, 3});
    c.value = r.sum;
    c.stderr_ = r.sum_stderr;
  } else {
    const double leaves = std::pow(static_cast<double>(f.d()), static_cast<double>(f.k() * opts.depth));
    TreeOptions t;
    t.cap = static_cast<std::size_t>(leaves) + 1;
    t.seed = seed;
    const BackwardTree tree = backward_tree(f, normalize(anchor_lift(f.k(), opts.anchor)), opts.depth, t);
    if (!tree.exact || tree.incomplete_fibers > 0) c.warning = "incomplete preimage tree";
    c.value = tree_average(f, tree.leaves());
    c.stderr_ = std::abs(c.value - tree_average(f, tree.levels[tree.levels.size() - 2]));
  }
  c.masked = !std::isfinite(c.value);
  return c;
}

Cell polylike_cell(const PolyLikeMap& f, int orbit_len, std::uint64_t seed, const FieldOptions& opts) {
  require(opts.method == LyapunovMethod::Orbit, "polynomial-like families support the orbit method only");
  const AffineMeasure m = sample_equilibrium_pl(f, orbit_len, opts.burn_in, seed);
  const LogJacobian lj = log_jacobian_check(f, m);
  Cell c;
  c.value = 0.5 * lj.value;
  c.stderr_ = 0.5 * lj.stderr_;
  c.masked = !std::isfinite(c.value);
  if (m.provenance.dropped > 0) c.warning = std::to_string(m.provenance.dropped) + " backward orbits dropped";
  return c;
}

bool included(const LyapunovField& f, int ix, int iy) {
  return ix >= 0 && iy >= 0 && ix < f.grid.nx && iy < f.grid.ny && !f.masked[f.index(ix, iy)];
}

}  // namespace

int LyapunovField::included() const {
  return static_cast<int>(std::count(masked.begin(), masked.end(), std::uint8_t{0}));
}

ParamFamily quadratic_family(const ChartWindow& window, const CertifyOptions& certify) {
  require(window.dim() == 1, "the quadratic family has one parameter");
  return endo_family("quadratic_plus_c", {}, window, certify);
}

ParamFamily endo_family(const std::string& family, std::vector<double> fixed, const ChartWindow& window,
                        const CertifyOptions& certify) {
  check_window(window);
  ParamFamily fam;
  fam.name = family;
  fam.window = window;
  fam.endo = [family, fixed, certify](const HVec& s) {
    std::vector<double> p = fixed;
    for (int i = 0; i < s.size(); ++i) {
      p.push_back(s[i].real());
      p.push_back(s[i].imag());
    }
    return make_family(family, p, certify);
  };
  return fam;
}

ParamFamily polylike_family(std::vector<Polynomial> base, std::vector<std::vector<Polynomial>> directions,
                            ConvexDomain V, const ChartWindow& window, std::uint64_t seed) {
  check_window(window);
  require(static_cast<int>(directions.size()) == window.dim(), "one direction per parameter");
  for (const auto& d : directions) require(d.size() == base.size(), "directions must have one term per component");
  ParamFamily fam;
  fam.name = "polylike";
  fam.window = window;
  fam.polylike = [base, directions, V, seed](const HVec& s) {
    std::vector<Polynomial> comps = base;
    for (int i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < comps.size(); ++j) comps[j] += s[i] * directions[static_cast<std::size_t>(i)][j];
    return make_polylike(comps, V, seed);
  };
  return fam;
}

LyapunovField family_lyapunov_grid(const ParamFamily& fam, int res, int orbit_len, std::uint64_t seed,
                                   const FieldOptions& opts) {
  require(res >= 16, "res must be at least 16 per axis");
  require(static_cast<bool>(fam.endo) != static_cast<bool>(fam.polylike), "family needs exactly one realization");
  if (opts.method == LyapunovMethod::Orbit) require(orbit_len >= 2, "orbit_len must be at least 2");
  if (opts.method == LyapunovMethod::Preimage) {
    require(opts.depth >= 2, "preimage depth must be at least 2");
    require(static_cast<bool>(fam.endo), "the preimage method needs a family of endomorphisms of P^k");
  }
  check_window(fam.window);

  LyapunovField field;
  field.grid = ChartGrid(fam.window, res, res, kNaN);
  field.method = opts.method == LyapunovMethod::Orbit ? "orbit" : "preimage";
  field.orbit_len = opts.method == LyapunovMethod::Orbit ? orbit_len : 0;
  field.depth = opts.method == LyapunovMethod::Preimage ? opts.depth : 0;

  const std::size_t n = static_cast<std::size_t>(res) * static_cast<std::size_t>(res);
  const auto cells = parallel_map(n, opts.par, [&](std::size_t i) {
    const int ix = static_cast<int>(i % static_cast<std::size_t>(res));
    const int iy = static_cast<int>(i / static_cast<std::size_t>(res));
    const HVec s = param_point(fam.window, field.grid.point(ix, iy));
    const std::uint64_t cs = derive_seed(seed, {static_cast<std::uint64_t>(ix), static_cast<std::uint64_t>(iy)});
    try {
      if (fam.endo) return endo_cell(fam.endo(s), orbit_len, cs, opts);
      return polylike_cell(fam.polylike(s), orbit_len, cs, opts);
    } catch (const Error& e) {
      Cell c;
      c.warning = e.what();
      return c;
    }
  });

  // Lower bound from any realizable cell; the degree is constant in a family.
  for (std::size_t i = 0; i < n && field.lower_bound == 0.0; ++i) {
    const HVec s = param_point(fam.window, field.grid.point(static_cast<int>(i % res), static_cast<int>(i / res)));
    try {
      if (fam.endo) {
        const HomEndo f = fam.endo(s);
        field.lower_bound = 0.5 * f.k() * std::log(static_cast<double>(f.d()));
      } else {
        field.lower_bound = 0.5 * std::log(static_cast<double>(fam.polylike(s).topological_degree()));
      }
    } catch (const Error&) {
    }
  }

  field.stderrs.assign(n, kNaN);
  field.masked.assign(n, 1);
  int masked = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Cell& c = cells[i];
    field.masked[i] = c.masked ? 1 : 0;
    if (c.masked) {
      ++masked;
      continue;
    }
    field.grid.values[i] = c.value;
    field.stderrs[i] = c.stderr_;
    if (c.value < field.lower_bound - 3.0 * c.stderr_) ++field.bound_violations;
    if (!c.warning.empty() && field.warnings.size() < 16)
      field.warnings.push_back("cell " + std::to_string(i) + ": " + c.warning);
  }
  if (masked > 0) field.warnings.push_back(std::to_string(masked) + " cells masked");
  return field;
}

double escape_green(Complex c, double tol) {
  constexpr double kBailout = 1e8;
  Complex z = c;
  double scale = 1.0;
  for (int n = 0; n < 100000; ++n) {
    const double r = std::abs(z);
    if (r > kBailout) return scale * std::log(r);
    // Below 2^{-n} log 2 the remaining contribution is under tol.
    if (scale * std::log(kBailout) < tol) return 0.0;
    z = z * z + c;
    scale *= 0.5;
  }
  return 0.0;
}

double escape_lyapunov(Complex c) { return std::log(2.0) + 0.5 * escape_green(c); }

OracleCheck escape_oracle_check(const LyapunovField& field) {
  require(field.grid.window.dim() == 1, "the escape oracle needs a one-parameter window");
  OracleCheck out;
  out.flags.assign(field.masked.size(), 0);
  for (int iy = 0; iy < field.grid.ny; ++iy)
    for (int ix = 0; ix < field.grid.nx; ++ix) {
      if (!included(field, ix, iy)) continue;
      const std::size_t i = field.index(ix, iy);
      const double diff = std::abs(field.grid.values[i] - escape_lyapunov(field.grid.point(ix, iy)));
      const double se = field.stderrs[i];
      ++out.cells;
      out.max_abs = std::max(out.max_abs, diff);
      if (se > 0.0) out.max_z = std::max(out.max_z, diff / se);
      if (diff > 3.0 * se) {
        ++out.flagged;
        out.flags[i] = 1;
      }
    }
  return out;
}

BifurcationDensity bifurcation_measure(const LyapunovField& field) {
  require(field.grid.window.dim() == 1, "the discrete Laplacian needs a one-parameter window");
  const ChartGrid& g = field.grid;
  BifurcationDensity out;
  out.grid = ChartGrid(g.window, g.nx, g.ny, kNaN);
  const double h = g.dx();
  double lmax = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i)
    if (!field.masked[i]) lmax = std::max(lmax, std::abs(g.values[i]));
  // Second differences below this are rounding, not curvature.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * lmax;

  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 1; ix + 1 < g.nx; ++ix) {
      if (!included(field, ix, iy) || !included(field, ix + 1, iy) || !included(field, ix - 1, iy) ||
          !included(field, ix, iy + 1) || !included(field, ix, iy - 1))
        continue;
      double second = g.at(ix + 1, iy) + g.at(ix - 1, iy) + g.at(ix, iy + 1) + g.at(ix, iy - 1) - 4.0 * g.at(ix, iy);
      if (std::abs(second) <= floor) second = 0.0;
      const double rho = second / (h * h) / kTwoPi;
      out.grid.at(ix, iy) = rho;
      if (rho > 0.0) out.positive_mass += rho * h * h;
      if (rho < 0.0) out.negative_mass -= rho * h * h;
    }
  out.negative_score = out.negative_mass / std::max(out.positive_mass, kBifurcationMassFloor);
  if (out.negative_score > kBifurcationMaxNegative) {
    fail(ErrorKind::ResolutionTooCoarse, "negative lobes carry " + std::to_string(out.negative_score) +
                                             " of the positive mass; refine the grid or reduce noise");
  }
  return out;
}

std::vector<int> mandelbrot_boundary_distance(const ChartGrid& g, int max_iter) {
  const std::size_t n = static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny);
  std::vector<std::uint8_t> inside(n, 0), thin(n, 0);
  const double half_diag = 0.5 * std::hypot(g.dx(), g.dy());
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const Complex c = g.point(ix, iy);
      Complex z = 0.0, dz = 0.0;
      int it = 0;
      // Escape radius 1e3 keeps the distance estimate accurate.
      while (it < max_iter && std::norm(z) <= 1e6) {
        dz = 2.0 * z * dz + 1.0;
        z = z * z + c;
        ++it;
      }
      const std::size_t i = static_cast<std::size_t>(iy) * g.nx + ix;
      inside[i] = std::norm(z) <= 1e6 ? 1 : 0;
      if (!inside[i]) thin[i] = std::abs(z) * std::log(std::abs(z)) / std::abs(dz) < half_diag ? 1 : 0;
    }
  constexpr int kFar = std::numeric_limits<int>::max();
  std::vector<int> dist(n, kFar);
  std::deque<std::size_t> queue;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * g.nx + ix;
      bool edge = thin[i] != 0;
      for (int dy = -1; dy <= 1 && !edge; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int jx = ix + dx, jy = iy + dy;
          if (jx < 0 || jy < 0 || jx >= g.nx || jy >= g.ny) continue;
          if (inside[static_cast<std::size_t>(jy) * g.nx + jx] != inside[i]) {
            edge = true;
            break;
          }
        }
      if (edge) {
        dist[i] = 0;
        queue.push_back(i);
      }
    }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int ix = static_cast<int>(i % g.nx), iy = static_cast<int>(i / g.nx);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int jx = ix + dx, jy = iy + dy;
        if (jx < 0 || jy < 0 || jx >= g.nx || jy >= g.ny) continue;
        const std::size_t j = static_cast<std::size_t>(jy) * g.nx + jx;
        if (dist[j] == kFar) {
          dist[j] = dist[i] + 1;
          queue.push_back(j);
        }
      }
  }
  return dist;
}

double mass_near_boundary(const BifurcationDensity& b, int cells, int max_iter) {
  require(b.positive_mass > 0.0, "density carries no positive mass");
  const std::vector<int> dist = mandelbrot_boundary_distance(b.grid, max_iter);
  const double area = b.grid.cell_area();
  double near = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double rho = b.grid.values[i];
    if (std::isfinite(rho) && rho > 0.0 && dist[i] <= cells) near += rho * area;
  }
  return near / b.positive_mass;
}

SubmeanReport psh_submean_check(const LyapunovField& field, int trials, std::uint64_t seed) {
  require(field.grid.window.dim() == 1, "submean check needs a one-parameter window");
  require(trials >= 1, "need at least one trial");
  constexpr int kMinRadius = 2, kMaxRadius = 8;
  const ChartGrid& g = field.grid;
  // Lattice rings round(|(a, b)|) = r. They are invariant under the symmetries
  // of the square, so harmonic terms up to degree three average out exactly.
  std::vector<std::vector<std::pair<int, int>>> rings(kMaxRadius + 1);
  for (int a = -kMaxRadius; a <= kMaxRadius; ++a)
    for (int b = -kMaxRadius; b <= kMaxRadius; ++b) {
      const int r = static_cast<int>(std::lround(std::hypot(a, b)));
      if (r >= kMinRadius && r <= kMaxRadius) rings[static_cast<std::size_t>(r)].emplace_back(a, b);
    }
  Rng rng(seed);
  SubmeanReport out;
  const int max_attempts = 50 * trials;
  for (int attempt = 0; attempt < max_attempts && out.trials < trials; ++attempt) {
    const int r = kMinRadius + static_cast<int>(rng.index(kMaxRadius - kMinRadius + 1));
    if (g.nx <= 2 * r || g.ny <= 2 * r) continue;
    const int cx = r + static_cast<int>(rng.index(static_cast<std::size_t>(g.nx - 2 * r)));
    const int cy = r + static_cast<int>(rng.index(static_cast<std::size_t>(g.ny - 2 * r)));
    if (!included(field, cx, cy)) continue;
    const auto& ring = rings[static_cast<std::size_t>(r)];
    double sum = 0.0, var = 0.0, span = 0.0;
    bool ok = true;
    for (const auto& [a, b] : ring) {
      if (!included(field, cx + a, cy + b)) {
        ok = false;
        break;
      }
      const double v = g.at(cx + a, cy + b);
      const double se = field.stderrs[field.index(cx + a, cy + b)];
      sum += v;
      var += se * se;
      span = std::max(span, std::abs(v));
    }
    if (!ok) continue;
    const double m = static_cast<double>(ring.size());
    const double mean = sum / m;
    const double se_c = field.stderrs[field.index(cx, cy)];
    const double comb = std::sqrt(se_c * se_c + var / (m * m));
    const double center = g.at(cx, cy);
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(center) + span);
    ++out.trials;
    if (center - mean > 3.0 * comb + slack) ++out.violations;
  }
  require(out.trials > 0, "no admissible circle inside the included cells");
  out.rate = static_cast<double>(out.violations) / out.trials;
  return out;
}

double holder_probe(const LyapunovField& field, double exponent) {
  const ChartGrid& g = field.grid;
  const double scale = std::pow(g.dx(), exponent);
  double best = 0.0;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      if (!included(field, ix, iy)) continue;
      if (included(field, ix + 1, iy)) best = std::max(best, std::abs(g.at(ix + 1, iy) - g.at(ix, iy)) / scale);
      if (included(field, ix, iy + 1)) best = std::max(best, std::abs(g.at(ix, iy + 1) - g.at(ix, iy)) / scale);
    }
  return best;
}

}  // namespace pluridyn
