#include "pluridyn/green.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pluridyn/errors.hpp"
#include "pluridyn/fiber.hpp"
#include "pluridyn/rng.hpp"
#include "pluridyn/stats.hpp"

namespace pluridyn {

int green_terms(const HomEndo& f, double tol) {
  require(tol > 0.0, "green tolerance must be positive");
  const double c = 2.0 * f.sup_abs_v();
  int n = 0;
  double tail = c;
  while (!(tail < tol)) {
    tail /= f.d();
    ++n;
  }
  return n;
}

GreenEval green_function(const HomEndo& f, const ProjPoint& p, double tol) {
  GreenEval out;
  out.n_used = green_terms(f, tol);
  const double d = f.d();
  HVec z = p.coords();
  double w = 1.0 / d;
  double sum = 0.0;
  for (int j = 0; j < out.n_used; ++j) {
    HVec y = f.eval_lift(z);
    const double ny = y.norm();
    sum += w * std::log(ny);
    w /= d;
    y *= Complex(1.0 / ny, 0.0);
    z = y;
  }
  out.value = sum;
  out.tail_bound = 2.0 * f.sup_abs_v() * std::pow(d, -out.n_used);
  return out;
}

double green_lift(const HomEndo& f, const HVec& z, double tol) {
  return std::log(z.norm()) + green_function(f, normalize(z), tol).value;
}

double fs_norm_iterate(const HomEndo& f, const HVec& z, int n) {
  auto [y, j] = lift_orbit_jacobian(f, z, n);
  const double ny = y.norm();
  y *= Complex(1.0 / ny, 0.0);
  const CMat dfs = tangent_frame(y).adjoint() * j * tangent_frame(z) / ny;
  return Eigen::JacobiSVD<CMat>(dfs).singularValues()(0);
}

namespace {

// Pattern search for a local max of the FS norm along the real directions of
// the tangent frame.
std::pair<double, HVec> climb_norm(const HomEndo& f, HVec z, int n) {
  double best = fs_norm_iterate(f, z, n);
  const int dirs = 2 * f.k();
  double step = 0.05;
  for (int it = 0; it < 400 && step > 1e-7; ++it) {
    const CMat t = tangent_frame(z);
    bool moved = false;
    for (int dir = 0; dir < dirs && !moved; ++dir) {
      for (double sgn : {1.0, -1.0}) {
        const Complex c = (dir % 2 == 0) ? Complex(sgn * step, 0.0) : Complex(0.0, sgn * step);
        HVec cand = z;
        for (int r = 0; r < z.size(); ++r) cand[r] += c * t(r, dir / 2);
        cand *= Complex(1.0 / cand.norm(), 0.0);
        const double v = fs_norm_iterate(f, cand, n);
        if (v > best) {
          best = v;
          z = cand;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return {best, z};
}

}  // namespace

HolderReport d_infty_and_holder(const HomEndo& f, int n_max, const HolderOptions& opts) {
  require(n_max >= 2, "d_infty_and_holder needs n_max >= 2");
  require(opts.samples >= 1, "need at least one sample");
  HolderReport rep;
  Rng rng(opts.seed);
  std::vector<HVec> pts;
  pts.reserve(static_cast<std::size_t>(opts.samples));
  for (int i = 0; i < opts.samples; ++i) pts.push_back(random_fs_point(f.k(), rng).coords());
  // Beam of maximizers from the previous depth: their preimages are natural
  // candidates at the next depth, since Df^n(x) = Df^{n-1}(f x) Df(x).
  std::vector<HVec> beam;
  for (int n = 1; n <= n_max; ++n) {
    std::vector<HVec> cand = pts;
    FiberOptions fo;
    fo.allow_incomplete = true;
    for (const HVec& b : beam) {
      try {
        for (const auto& x : fiber(f, normalize(b), fo).points) cand.push_back(x.coords());
      } catch (const Error&) {
      }
    }
    std::vector<std::pair<double, std::size_t>> vals;
    vals.reserve(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) vals.emplace_back(fs_norm_iterate(f, cand[i], n), i);
    const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(opts.refine_starts), vals.size());
    std::partial_sort(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(starts), vals.end(), std::greater<>());
    double sup = vals.front().first;
    std::vector<std::pair<double, HVec>> climbed;
    for (std::size_t s = 0; s < starts; ++s) {
      auto [v, z] = climb_norm(f, cand[vals[s].second], n);
      sup = std::max(sup, v);
      climbed.emplace_back(v, z);
    }
    std::sort(climbed.begin(), climbed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    beam.clear();
    for (const auto& c : climbed) beam.push_back(c.second);
    rep.per_n.push_back(std::pow(sup, 1.0 / n));
  }
  rep.d_infty = *std::min_element(rep.per_n.begin(), rep.per_n.end());
  rep.gamma = rep.d_infty <= 1.0 ? 1.0 : std::min(1.0, std::log(static_cast<double>(f.d())) / std::log(rep.d_infty));
  return rep;
}

namespace {

struct Lobes {
  double mass = 0.0;
  double score = 0.0;
};

Lobes lobes(const std::vector<double>& rho, double cell) {
  double peak = 0.0;
  for (double v : rho) peak = std::max(peak, std::abs(v));
  const double thr = 1e-6 * peak;
  double pos = 0.0, neg = 0.0, mass = 0.0;
  for (double v : rho) {
    mass += v;
    if (v > 0.0) pos += v;
    if (v < -thr) neg -= v;
  }
  Lobes l;
  l.mass = mass * cell;
  l.score = neg == 0.0 ? 0.0 : (pos > 0.0 ? neg / pos : std::numeric_limits<double>::infinity());
  return l;
}

}  // namespace

DensityGrid green_density_grid(const HomEndo& f, const ChartWindow& w, int res, double tol, Parallel par) {
  w.validate();
  require(w.dim() == f.k(), "window dimension must equal k");
  require(res >= 3, "density grid needs at least 3 samples per axis");
  DensityGrid out;
  ChartWindow sq = w;
  sq.half_widths.assign(static_cast<std::size_t>(f.k()), w.half_widths[0]);
  out.grid = ChartGrid(sq, res, res);
  ChartGrid& g = out.grid;
  const double h = g.dx();
  const int pad = 2;
  const int nn = res + 2 * pad;

  auto potential = [&](HVec chart_pt) { return green_lift(f, chart_lift(chart_pt, w.chart_index), tol); };
  auto at_offset = [&](int ix, int iy) {
    HVec c = w.center;
    c[0] = g.point(ix, iy);
    return c;
  };

  // G on the padded node lattice of axis 0.
  const auto rows = parallel_map(static_cast<std::size_t>(nn), par, [&](std::size_t r) {
    std::vector<double> row(static_cast<std::size_t>(nn));
    const int iy = static_cast<int>(r) - pad;
    for (int c = 0; c < nn; ++c) row[static_cast<std::size_t>(c)] = potential(at_offset(c - pad, iy));
    return row;
  });
  auto node = [&](int ix, int iy) { return rows[static_cast<std::size_t>(iy + pad)][static_cast<std::size_t>(ix + pad)]; };

  // Other complex axes: 4-point stencils at step h and 2h.
  std::vector<double> extra_h(g.values.size(), 0.0), extra_2h(g.values.size(), 0.0);
  if (f.k() > 1) {
    const auto ex = parallel_map(static_cast<std::size_t>(res), par, [&](std::size_t r) {
      std::vector<std::pair<double, double>> row(static_cast<std::size_t>(res));
      const int iy = static_cast<int>(r);
      for (int ix = 0; ix < res; ++ix) {
        const HVec base = at_offset(ix, iy);
        const double g0 = node(ix, iy);
        double lh = 0.0, l2h = 0.0;
        for (int m = 1; m < f.k(); ++m) {
          for (Complex dir : {Complex(1, 0), Complex(-1, 0), Complex(0, 1), Complex(0, -1)}) {
            HVec p = base;
            p[m] += h * dir;
            lh += potential(p) - g0;
            p[m] += h * dir;
            l2h += potential(p) - g0;
          }
        }
        row[static_cast<std::size_t>(ix)] = {lh / (h * h), l2h / (4.0 * h * h)};
      }
      return row;
    });
    for (int iy = 0; iy < res; ++iy)
      for (int ix = 0; ix < res; ++ix) {
        const std::size_t i = static_cast<std::size_t>(iy) * static_cast<std::size_t>(res) + static_cast<std::size_t>(ix);
        extra_h[i] = ex[static_cast<std::size_t>(iy)][static_cast<std::size_t>(ix)].first;
        extra_2h[i] = ex[static_cast<std::size_t>(iy)][static_cast<std::size_t>(ix)].second;
      }
  }

  std::vector<double> rich(g.values.size());
  for (int iy = 0; iy < res; ++iy) {
    for (int ix = 0; ix < res; ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * static_cast<std::size_t>(res) + static_cast<std::size_t>(ix);
      const double g0 = node(ix, iy);
      const double lap_h =
          (node(ix + 1, iy) + node(ix - 1, iy) + node(ix, iy + 1) + node(ix, iy - 1) - 4.0 * g0) / (h * h) + extra_h[i];
      const double lap_2h =
          (node(ix + 2, iy) + node(ix - 2, iy) + node(ix, iy + 2) + node(ix, iy - 2) - 4.0 * g0) / (4.0 * h * h) +
          extra_2h[i];
      g.values[i] = lap_h / (2.0 * kPi);
      rich[i] = (4.0 * lap_h - lap_2h) / (3.0 * 2.0 * kPi);
    }
  }
  const Lobes plain = lobes(g.values, g.cell_area());
  const Lobes extrap = lobes(rich, g.cell_area());
  out.mass = plain.mass;
  out.negative_score = plain.score;
  out.richardson_mass = extrap.mass;
  out.richardson_negative_score = extrap.score;
  if (out.negative_score > kMaxNegativeScore) {
    fail(ErrorKind::ResolutionTooCoarse, "negative lobes carry " + std::to_string(out.negative_score) +
                                             " of the positive mass; refine the grid");
  }
  return out;
}

std::vector<DecayRow> hypersurface_potential_decay(const HomEndo& f, const Polynomial& h, int n_max, int sample_count,
                                                   std::uint64_t seed, Parallel par) {
  require(h.nvars() == f.k() + 1, "h must have k+1 variables");
  const int s = h.degree();
  require(s >= 1 && h.is_homogeneous(s), "h must be homogeneous of degree >= 1");
  require(n_max >= 0 && sample_count >= 2, "need n_max >= 0 and at least two samples");
  const int k = f.k();
  const double d = f.d();
  constexpr std::size_t kBatch = 256;
  const std::size_t nb = (static_cast<std::size_t>(sample_count) + kBatch - 1) / kBatch;

  // Per sample: g(p) and s^{-1} log|h(F^n z)| for n = 0..n_max.
  struct Sample {
    double g;
    std::vector<double> logh;
  };
  const auto batches = parallel_map(nb, par, [&](std::size_t b) {
    Rng rng(derive_seed(seed, {b}));
    const std::size_t lo = b * kBatch;
    const std::size_t hi = std::min(lo + kBatch, static_cast<std::size_t>(sample_count));
    std::vector<Sample> out;
    for (std::size_t i = lo; i < hi; ++i) {
      const ProjPoint p = random_fs_point(k, rng);
      Sample smp{green_function(f, p).value, {}};
      std::array<WideComplex, kMaxCoords> z{}, y{};
      for (int c = 0; c <= k; ++c) z[static_cast<std::size_t>(c)] = WideComplex(p[c]);
      for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
          f.eval_lift_wide(z.data(), y.data());
          z = y;
        }
        smp.logh.push_back(h.eval(z.data()).log_abs() / s);
      }
      out.push_back(std::move(smp));
    }
    return out;
  });

  std::vector<Sample> all;
  for (const auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  double msum = 0.0;
  std::size_t mcount = 0;
  for (const auto& smp : all) {
    const double u = smp.logh[0] - smp.g;
    if (std::isfinite(u)) {
      msum += u;
      ++mcount;
    }
  }
  const double m = mcount ? msum / static_cast<double>(mcount) : 0.0;

  std::vector<DecayRow> table;
  for (int n = 0; n <= n_max; ++n) {
    const double scale = std::pow(d, -n);
    std::vector<double> abs_u;
    abs_u.reserve(all.size());
    for (const auto& smp : all) abs_u.push_back(std::abs(scale * smp.logh[static_cast<std::size_t>(n)] - smp.g - scale * m));
    const MeanErr me = mean_stderr(abs_u);
    table.push_back({n, me.mean, me.stderr_});
  }
  return table;
}

}  // namespace pluridyn
