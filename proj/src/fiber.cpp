#include "pluridyn/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "json.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/rng.hpp"

namespace pluridyn {

namespace {

HVec unit(HVec z) {
  z *= Complex(1.0 / z.norm(), 0.0);
  return z;
}

// Binary form a_1 F_0 - a_0 F_1 as coefficients p_j of z0^{d-j} z1^j.
std::vector<Complex> binary_form(const HomEndo& f, const HVec& a) {
  std::vector<Complex> p(static_cast<std::size_t>(f.d() + 1), Complex(0.0, 0.0));
  for (const auto& t : f.components()[0].terms()) p[static_cast<std::size_t>(t.exps[1])] += a[1] * t.coeff;
  for (const auto& t : f.components()[1].terms()) p[static_cast<std::size_t>(t.exps[1])] -= a[0] * t.coeff;
  return p;
}

Complex horner(const std::vector<Complex>& c, Complex x, Complex* deriv) {
  Complex v(0.0, 0.0), dv(0.0, 0.0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    dv = dv * x + v;
    v = v * x + *it;
  }
  if (deriv) *deriv = dv;
  return v;
}

// Roots of sum_i q_i t^i (q_0, q_m nonzero) as points [z0 : z1] with t = z1/z0.
std::vector<HVec> reduced_roots(const std::vector<Complex>& q) {
  const int m = static_cast<int>(q.size()) - 1;
  std::vector<HVec> out;
  if (m == 1) {
    out.push_back({q[1], -q[0]});
  } else if (m == 2) {
    Complex s = std::sqrt(q[1] * q[1] - 4.0 * q[0] * q[2]);
    if (std::abs(q[1] - s) > std::abs(q[1] + s)) s = -s;
    const Complex tau = -0.5 * (q[1] + s);
    out.push_back({q[2], tau});
    out.push_back({tau, q[0]});
  } else if (m >= 3) {
    // Companion matrix in whichever variable (t or 1/t) has the larger leading coefficient.
    const bool reversed = std::abs(q[static_cast<std::size_t>(m)]) < std::abs(q[0]);
    std::vector<Complex> c = q;
    if (reversed) std::reverse(c.begin(), c.end());
    CMat comp = CMat::Zero(m, m);
    for (int i = 1; i < m; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < m; ++i) comp(i, m - 1) = -c[static_cast<std::size_t>(i)] / c[static_cast<std::size_t>(m)];
    Eigen::ComplexEigenSolver<CMat> es(comp, false);
    for (int i = 0; i < m; ++i) {
      Complex r = es.eigenvalues()(i);
      // Newton polish on the same polynomial.
      for (int it = 0; it < 4; ++it) {
        Complex dv;
        const Complex v = horner(c, r, &dv);
        if (dv == Complex(0.0, 0.0)) break;
        const Complex nr = r - v / dv;
        if (!(std::abs(horner(c, nr, nullptr)) < std::abs(v))) break;
        r = nr;
      }
      out.push_back(reversed ? HVec{r, 1.0} : HVec{1.0, r});
    }
  }
  return out;
}

std::vector<HVec> binary_roots(const std::vector<Complex>& p) {
  const int d = static_cast<int>(p.size()) - 1;
  double scale = 0.0;
  for (const auto& c : p) scale = std::max(scale, std::abs(c));
  const double thr = 1e-14 * scale;
  int lz = 0;
  while (lz <= d && std::abs(p[static_cast<std::size_t>(lz)]) <= thr) ++lz;
  int hz = 0;
  while (hz <= d - lz && std::abs(p[static_cast<std::size_t>(d - hz)]) <= thr) ++hz;
  std::vector<HVec> roots;
  for (int i = 0; i < lz; ++i) roots.push_back({1.0, 0.0});
  for (int i = 0; i < hz; ++i) roots.push_back({0.0, 1.0});
  std::vector<Complex> q(p.begin() + lz, p.end() - hz);
  for (const auto& r : reduced_roots(q)) roots.push_back(r);
  return roots;
}

// Newton matrix for G_l = a_t Y_l - a_l Y_t plus the row z^H.
struct NewtonState {
  CMat m;
  CVecX rhs;
  double resid = 0.0;
  HVec y;
};

NewtonState newton_state(const HomEndo& f, int n, const HVec& a, int t, const HVec& z, bool need_matrix) {
  NewtonState s;
  const int k = f.k();
  CMat j;
  if (n == 1) {
    s.y = f.eval_lift(z);
    if (need_matrix) j = f.lift_jacobian(z);
  } else {
    auto [y, jj] = lift_orbit_jacobian(f, z, n);
    s.y = y;
    j = jj;
  }
  double g2 = 0.0;
  if (need_matrix) {
    s.m.resize(k + 1, k + 1);
    s.rhs.resize(k + 1);
  }
  int r = 0;
  for (int l = 0; l <= k; ++l) {
    if (l == t) continue;
    const Complex g = a[t] * s.y[l] - a[l] * s.y[t];
    g2 += std::norm(g);
    if (need_matrix) {
      s.rhs(r) = -g;
      for (int c = 0; c <= k; ++c) s.m(r, c) = a[t] * j(l, c) - a[l] * j(t, c);
    }
    ++r;
  }
  if (need_matrix) {
    for (int c = 0; c <= k; ++c) s.m(k, c) = std::conj(z[c]);
    s.rhs(k) = 0.0;
  }
  s.resid = std::sqrt(g2) / std::max(1e-300, s.y.norm());
  return s;
}

ProjPoint perturbed_target(const ProjPoint& a, double eta, Rng& rng) {
  HVec z = a.coords();
  for (int i = 0; i < z.size(); ++i) z[i] += eta * rng.complex_normal();
  return normalize(z);
}

// Number of distinct preimages of a nearby target that cluster at root r.
int local_degree_probe(const HomEndo& f, const ProjPoint& a, const HVec& r, Rng& rng) {
  const ProjPoint ap = perturbed_target(a, 1e-8, rng);
  const CMat tf = tangent_frame(r);
  std::vector<ProjPoint> found;
  for (int i = 0; i < 32; ++i) {
    const double rho = std::pow(10.0, -4.0 + 2.5 * (i % 16) / 15.0);
    CVecX dir(f.k());
    for (int c = 0; c < f.k(); ++c) dir(c) = rng.complex_normal();
    dir.normalize();
    const HVec z0 = r + HVec::from_eigen(rho * (tf * dir));
    const auto sol = newton_preimage(f, 1, ap, z0);
    if (!sol) continue;
    const ProjPoint p = normalize(*sol);
    if (fs_distance_unit(*sol, r) > 0.05) continue;
    bool dup = false;
    for (const auto& q : found) dup = dup || fs_distance(p, q) < 1e-9;
    if (!dup) found.push_back(p);
  }
  return std::max<int>(1, static_cast<int>(found.size()));
}

int ipow_int(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

Fiber solve_k1(const HomEndo& f, const ProjPoint& a, const FiberOptions& opts) {
  Fiber fib;
  fib.base = a;
  const auto roots = binary_roots(binary_form(f, a.coords()));
  for (const auto& r : roots) {
    ProjPoint p = normalize(r);
    double res = fs_distance(f.eval(p), a);
    if (res > opts.residual_tol) {
      if (auto pol = newton_preimage(f, 1, a, p.coords())) {
        const ProjPoint q = normalize(*pol);
        const double rq = fs_distance(f.eval(q), a);
        if (rq < res && fs_distance(q, p) < 1e-3) {
          p = q;
          res = rq;
        }
      }
      if (res > opts.residual_tol) fib.flagged = true;
    }
    bool merged = false;
    for (std::size_t i = 0; i < fib.points.size(); ++i) {
      if (fs_distance(fib.points[i], p) < opts.dedup_radius) {
        ++fib.multiplicities[i];
        fib.residuals[i] = std::max(fib.residuals[i], res);
        merged = true;
        break;
      }
    }
    if (!merged) {
      fib.points.push_back(p);
      fib.multiplicities.push_back(1);
      fib.residuals.push_back(res);
    }
  }
  return fib;
}

Fiber solve_newton(const HomEndo& f, const ProjPoint& a, const FiberOptions& opts) {
  const int expected = ipow_int(f.d(), f.k());
  Fiber fib;
  fib.base = a;
  std::vector<bool> singular;
  std::vector<bool> probed;
  Rng rng(opts.seed);
  auto total = [&] {
    int s = 0;
    for (int m : fib.multiplicities) s += m;
    return s;
  };
  for (int round = 0; round < opts.rounds && total() < expected; ++round) {
    const int seeds = opts.oversample * expected;
    for (int s = 0; s < seeds && total() < expected; ++s) {
      double ratio = 1.0;
      const auto sol = newton_preimage(f, 1, a, random_fs_point(f.k(), rng).coords(), &ratio);
      if (!sol) continue;
      const ProjPoint p = normalize(*sol);
      bool dup = false;
      for (const auto& q : fib.points) dup = dup || fs_distance(p, q) < opts.dedup_radius;
      if (dup) continue;
      fib.points.push_back(p);
      fib.multiplicities.push_back(1);
      fib.residuals.push_back(fs_distance(f.eval(p), a));
      singular.push_back(ratio < 1e-6);
      probed.push_back(false);
    }
    // Near-singular roots get their multiplicity from a local degree probe.
    for (std::size_t i = 0; i < fib.points.size() && total() < expected; ++i) {
      if (!singular[i] || probed[i]) continue;
      probed[i] = true;
      fib.multiplicities[i] = local_degree_probe(f, a, fib.points[i].coords(), rng);
      fib.flagged = true;
    }
  }
  return fib;
}

}  // namespace

int Fiber::total_multiplicity() const {
  int s = 0;
  for (int m : multiplicities) s += m;
  return s;
}

std::optional<HVec> newton_preimage(const HomEndo& f, int n, const ProjPoint& a, HVec z0, double* sigma_ratio) {
  const HVec& av = a.coords();
  const int t = av.argmax_abs();
  HVec z = unit(z0);
  NewtonState st = newton_state(f, n, av, t, z, true);
  for (int it = 0; it < 80 && st.resid > 1e-15; ++it) {
    const CVecX delta = st.m.partialPivLu().solve(st.rhs);
    if (!delta.allFinite()) return std::nullopt;
    const HVec dz = HVec::from_eigen(delta);
    bool accepted = false;
    double lam = 1.0;
    for (int b = 0; b < 14; ++b, lam *= 0.5) {
      const HVec cand = unit(z + Complex(lam, 0.0) * dz);
      const NewtonState cs = newton_state(f, n, av, t, cand, false);
      if (cs.resid < st.resid) {
        z = cand;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    st = newton_state(f, n, av, t, z, true);
    if (lam * dz.norm() < 1e-16) break;
  }
  if (sigma_ratio) {
    Eigen::JacobiSVD<CMat> svd(st.m);
    const auto& sv = svd.singularValues();
    *sigma_ratio = sv(sv.size() - 1) / std::max(1e-300, sv(0));
  }
  if (!(fs_distance_unit(unit(st.y), av) < 1e-9)) return std::nullopt;
  return z;
}

Fiber fiber(const HomEndo& f, const ProjPoint& a, const FiberOptions& opts) {
  require(a.dim() == f.k(), "target dimension does not match the map");
  Fiber fib = (f.k() == 1) ? solve_k1(f, a, opts) : solve_newton(f, a, opts);
  const int expected = ipow_int(f.d(), f.k());
  const int found = fib.total_multiplicity();
  if (found != expected) {
    fib.flagged = true;
    if (!opts.allow_incomplete) {
      throw CountShortfall(ErrorKind::IncompleteFiber,
                           "found multiplicity " + std::to_string(found) + " of " + std::to_string(expected), found,
                           expected);
    }
  }
  return fib;
}

ProjPoint pick_preimage(const Fiber& fib, Rng& rng) {
  const int total = fib.total_multiplicity();
  require(total > 0, "empty fiber");
  std::size_t u = rng.index(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < fib.points.size(); ++i) {
    const auto m = static_cast<std::size_t>(fib.multiplicities[i]);
    if (u < m) return fib.points[i];
    u -= m;
  }
  return fib.points.back();
}

ProjPoint random_preimage(const HomEndo& f, const ProjPoint& a, std::uint64_t seed, const FiberOptions& opts) {
  FiberOptions o = opts;
  o.seed = derive_seed(seed, {1});
  const Fiber fib = fiber(f, a, o);
  Rng rng(seed);
  return pick_preimage(fib, rng);
}

InverseBranch::InverseBranch(const HomEndo& f, const ProjPoint& center, double radius, const ProjPoint& branch_seed,
                             int depth)
    : f_(&f), center_(center), radius_(radius), depth_(depth) {
  require(radius > 0.0, "radius must be positive");
  require(depth >= 1, "depth must be at least 1");
  chart_ = center.coords().argmax_abs();
  center_w_ = chart_map(center, chart_);
  ProjPoint img = branch_seed;
  for (int i = 0; i < depth; ++i) img = f.eval(img);
  require(fs_distance(img, center) < 1e-9, "branch seed is not a preimage of the ball center");
  seed_z_ = branch_seed.coords();
  // Monodromy around each coordinate circle of the ball boundary.
  const int k = f.k();
  for (int m = 0; m < k; ++m) {
    HVec start = center_w_;
    start[m] += radius_;
    const HVec z_start = continue_along(center_w_, start, seed_z_, true);
    HVec z = z_start;
    HVec prev = start;
    const int steps = 96;
    for (int s = 1; s <= steps; ++s) {
      HVec w = center_w_;
      w[m] += std::polar(radius_, 2.0 * kPi * s / steps);
      z = continue_along(prev, w, z, true);
      prev = w;
    }
    if (fs_distance_unit(unit(z), unit(z_start)) > 1e-7) {
      fail(ErrorKind::BranchCollision, "continuation around the ball boundary has nontrivial monodromy");
    }
  }
}

HVec InverseBranch::continue_along(const HVec& from_w, const HVec& to_w, HVec z, bool check_jacobian) const {
  // Fixed substeps with recursive halving whenever Newton fails or jumps.
  struct Seg {
    HVec a, b;
    int level;
  };
  double len2 = 0.0;
  for (int i = 0; i < from_w.size(); ++i) len2 += std::norm(to_w[i] - from_w[i]);
  const int steps = std::max(4, static_cast<int>(std::ceil(24.0 * std::sqrt(len2) / radius_)));
  std::vector<Seg> stack;
  for (int s = steps; s >= 1; --s) {
    HVec a = from_w, b = from_w;
    for (int i = 0; i < from_w.size(); ++i) {
      a[i] += (to_w[i] - from_w[i]) * (static_cast<double>(s - 1) / steps);
      b[i] += (to_w[i] - from_w[i]) * (static_cast<double>(s) / steps);
    }
    stack.push_back({a, b, 0});
  }
  while (!stack.empty()) {
    Seg seg = stack.back();
    stack.pop_back();
    const ProjPoint target = chart_inverse(seg.b, chart_);
    const auto sol = newton_preimage(*f_, depth_, target, z);
    const bool jumped = sol && fs_distance_unit(unit(*sol), unit(z)) > 0.2;
    if (!sol || jumped) {
      if (seg.level >= 8) fail(ErrorKind::BranchCollision, "continuation failed to track the branch");
      HVec mid = seg.a;
      for (int i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (seg.a[i] + seg.b[i]);
      stack.push_back({mid, seg.b, seg.level + 1});
      stack.push_back({seg.a, mid, seg.level + 1});
      continue;
    }
    z = *sol;
    if (check_jacobian) {
      const int src = z.argmax_abs();
      const HVec zc = Complex(1.0, 0.0) / z[src] * z;
      const auto [y, j] = lift_orbit_jacobian(*f_, zc, depth_);
      const Complex det = chart_jacobian_from_lift(y, j, src, chart_).determinant();
      if (!(std::abs(det) > 1e-8)) fail(ErrorKind::BranchCollision, "continuation path meets the critical set");
    }
  }
  return z;
}

ProjPoint InverseBranch::operator()(const ProjPoint& x) const {
  const HVec w = chart_map(x, chart_);
  double r2 = 0.0;
  for (int i = 0; i < w.size(); ++i) r2 += std::norm(w[i] - center_w_[i]);
  require(std::sqrt(r2) <= radius_ * (1.0 + 1e-12), "point lies outside the branch ball");
  return normalize(continue_along(center_w_, w, seed_z_, true));
}

double InverseBranch::image_diameter(int probes) const {
  Rng rng(0xd1a3ULL);
  std::vector<ProjPoint> imgs;
  imgs.push_back((*this)(center_));
  const int k = f_->k();
  for (int i = 0; i < probes; ++i) {
    HVec w = center_w_;
    if (i < probes / 2) {
      const int m = i % k;
      w[m] += std::polar(radius_, 2.0 * kPi * i / (probes / 2));
    } else {
      CVecX dir(k);
      for (int c = 0; c < k; ++c) dir(c) = rng.complex_normal();
      dir *= radius_ * std::pow(rng.uniform(), 1.0 / (2 * k)) / dir.norm();
      for (int c = 0; c < k; ++c) w[c] += dir(c);
    }
    imgs.push_back((*this)(chart_inverse(w, chart_)));
  }
  double diam = 0.0;
  for (std::size_t i = 0; i < imgs.size(); ++i)
    for (std::size_t j = i + 1; j < imgs.size(); ++j) diam = std::max(diam, fs_distance(imgs[i], imgs[j]));
  return diam;
}

BackwardTree backward_tree(const HomEndo& f, const ProjPoint& a, int n, const TreeOptions& opts) {
  require(n >= 0, "tree depth must be non-negative");
  require(opts.cap >= 1, "tree cap must be positive");
  BackwardTree tree;
  tree.root = a;
  tree.depth = n;
  const double dk = std::pow(static_cast<double>(f.d()), f.k());
  tree.exact = std::pow(dk, n) <= static_cast<double>(opts.cap);
  tree.levels.push_back({TreeNode{a, 1.0, -1}});
  for (int lev = 1; lev <= n; ++lev) {
    const auto& prev = tree.levels.back();
    const auto fibers = parallel_map(prev.size(), opts.par, [&](std::size_t i) {
      FiberOptions fo = opts.fiber;
      fo.seed = derive_seed(opts.seed, {static_cast<std::uint64_t>(lev), i});
      fo.allow_incomplete = true;
      return fiber(f, prev[i].point, fo);
    });
    std::vector<TreeNode> children;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const Fiber& fb = fibers[i];
      if (fb.total_multiplicity() != static_cast<int>(dk)) {
        // Drop the whole subtree below an unreliable fiber.
        ++tree.incomplete_fibers;
        tree.pruned = true;
        continue;
      }
      for (std::size_t j = 0; j < fb.points.size(); ++j) {
        children.push_back(TreeNode{fb.points[j], prev[i].weight * fb.multiplicities[j] / dk, static_cast<int>(i)});
      }
    }
    if (children.empty()) fail(ErrorKind::IncompleteFiber, "every fiber at a tree level was incomplete");
    if (!tree.exact && children.size() > opts.cap) {
      // Systematic resampling; repeated draws are merged into one weighted node.
      double total = 0.0;
      for (const auto& c : children) total += c.weight;
      Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(lev), 0xfeedULL}));
      // Random order first: siblings are listed together and equal weights
      // would otherwise make the comb pick the same branch everywhere.
      for (std::size_t i = children.size(); i > 1; --i) std::swap(children[i - 1], children[rng.index(i)]);
      const double step = total / static_cast<double>(opts.cap);
      double u = rng.uniform() * step;
      double cum = 0.0;
      std::vector<TreeNode> kept;
      for (const auto& c : children) {
        cum += c.weight;
        int count = 0;
        while (u < cum) {
          ++count;
          u += step;
        }
        if (count > 0) kept.push_back(TreeNode{c.point, count * step, c.parent});
      }
      children = std::move(kept);
    }
    tree.levels.push_back(std::move(children));
  }
  if (tree.pruned) {
    for (auto& level : tree.levels) {
      double s = 0.0;
      for (const auto& node : level) s += node.weight;
      for (auto& node : level) node.weight /= s;
    }
  }
  return tree;
}

std::string tree_to_json(const BackwardTree& tree) {
  using nlohmann::json;
  auto coords = [](const ProjPoint& p) {
    json c = json::array();
    for (int i = 0; i <= p.dim(); ++i) c.push_back({p[i].real(), p[i].imag()});
    return c;
  };
  json j;
  j["root"] = coords(tree.root);
  j["depth"] = tree.depth;
  j["exact"] = tree.exact;
  j["pruned"] = tree.pruned;
  json pts = json::array(), ws = json::array();
  for (const auto& node : tree.leaves()) {
    pts.push_back(coords(node.point));
    ws.push_back(node.weight);
  }
  j["points"] = pts;
  j["weights"] = ws;
  return j.dump();
}

}  // namespace pluridyn
