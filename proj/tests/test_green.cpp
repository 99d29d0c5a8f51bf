#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/green.hpp"

using namespace pluridyn;

namespace {

// Closed form for power maps: max_i log|z_i| - 1/2 log sum |z_i|^2.
double power_green(const ProjPoint& p) {
  double m = -1e300, s = 0.0;
  for (int i = 0; i <= p.dim(); ++i) {
    m = std::max(m, std::log(std::abs(p[i])));
    s += std::norm(p[i]);
  }
  return m - 0.5 * std::log(s);
}

// d^{-n} log ||F^n(z)|| in wide arithmetic, straight from the definition.
double escape_rate(const HomEndo& f, const HVec& z, int n) {
  std::array<WideComplex, kMaxCoords> a{}, b{};
  for (int i = 0; i < z.size(); ++i) a[static_cast<std::size_t>(i)] = WideComplex(z[i]);
  for (int j = 0; j < n; ++j) {
    f.eval_lift_wide(a.data(), b.data());
    a = b;
  }
  double lmax = -1e300;
  for (int i = 0; i < z.size(); ++i) lmax = std::max(lmax, a[static_cast<std::size_t>(i)].log_abs());
  double s = 0.0;
  for (int i = 0; i < z.size(); ++i) s += std::exp(2.0 * (a[static_cast<std::size_t>(i)].log_abs() - lmax));
  return (lmax + 0.5 * std::log(s)) / std::pow(f.d(), n);
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pluridyn_test_" + name)).string();
}

}  // namespace

TEST_CASE("green function of power maps") {
  CHECK(green_function(make_family("power", {1, 2}), normalize({1.0, 2.0})).value ==
        doctest::Approx(std::log(2.0) - 0.5 * std::log(5.0)).epsilon(1e-12));
  CHECK(green_function(make_family("power", {1, 2}), normalize({1.0, 1.0})).value ==
        doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-9));
  for (auto [k, d] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 2}}) {
    const HomEndo f = make_family("power", {double(k), double(d)});
    Rng rng(static_cast<std::uint64_t>(10 * k + d));
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const ProjPoint p = random_fs_point(k, rng);
      worst = std::max(worst, std::abs(green_function(f, p, 1e-10).value - power_green(p)));
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("green tail bound and truncation depth") {
  const HomEndo f = make_family("quadratic_plus_c", {-1.0, 0.0});
  for (double tol : {1e-4, 1e-8, 1e-12}) {
    const GreenEval e = green_function(f, random_fs_point(1, 3), tol);
    CHECK(e.tail_bound < tol);
    CHECK(e.tail_bound == doctest::Approx(2.0 * f.sup_abs_v() * std::pow(2.0, -e.n_used)));
    CHECK(e.tail_bound * 2.0 >= tol);
  }
}

TEST_CASE("lift functional equation and telescoping identity") {
  Rng rng(41);
  const double tol = 1e-10;
  for (int m = 0; m < 3; ++m) {
    const HomEndo f = oracle::random_map(m == 2 ? 2 : 1, 2, rng);
    double worst_fe = 0.0, worst_tel = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const ProjPoint p = random_fs_point(f.k(), rng);
      const double g = green_function(f, p, tol).value;
      const double gf = green_function(f, f.eval(p), tol).value;
      const double lognorm = std::log(f.eval_lift(p.coords()).norm());
      worst_fe = std::max(worst_fe, std::abs(gf + lognorm - f.d() * g));
      if (t < 200) worst_tel = std::max(worst_tel, std::abs(g - escape_rate(f, p.coords(), 60)));
    }
    CHECK(worst_fe < 2 * tol);
    CHECK(worst_tel < 2 * tol);
  }
}

TEST_CASE("FS norm of the square map against the chart formula") {
  const HomEndo f = make_family("power", {1, 2});
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const ProjPoint p = random_fs_point(1, rng);
    const double r = std::abs(p[1] / p[0]);
    for (int n : {1, 3}) {
      const double e = std::pow(2.0, n);
      const double expect = e * std::pow(r, e - 1) * (1 + r * r) / (1 + std::pow(r, 2 * e));
      CHECK(fs_norm_iterate(f, p.coords(), n) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
  // Dense sweep of the same formula: sup over r is 2, at r = 1.
  double sup = 0.0;
  for (int i = 1; i < 200000; ++i) {
    const double r = i * 1e-5;
    sup = std::max(sup, 2 * r * (1 + r * r) / (1 + r * r * r * r));
  }
  CHECK(sup == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("d_infty and Hoelder exponent") {
  // For k >= 2 the sup of ||Df^n|| is C d^n with C > 1, so the n-th root
  // approaches d like C^{1/n}; depth 30 brings it within 1%.
  for (auto [k, d, n] : {std::tuple{1, 2, 5}, std::tuple{2, 2, 30}, std::tuple{1, 3, 5}}) {
    const HolderReport r = d_infty_and_holder(make_family("power", {double(k), double(d)}), n);
    CHECK(r.d_infty == doctest::Approx(d).epsilon(0.01));
    CHECK(r.gamma == doctest::Approx(1.0).epsilon(0.01));
    for (std::size_t i = 1; i < r.per_n.size(); ++i) CHECK(r.per_n[i] <= r.per_n[i - 1] * 1.01);
  }
  const HolderReport q = d_infty_and_holder(make_family("quadratic_plus_c", {-1.0, 0.0}), 6);
  for (std::size_t i = 1; i < q.per_n.size(); ++i) CHECK(q.per_n[i] <= q.per_n[i - 1] * 1.01);
  CHECK(q.gamma > 0.0);
  CHECK(q.gamma <= 1.0);
  CHECK_THROWS_AS(d_infty_and_holder(make_family("power", {1, 2}), 1), Error);
}

TEST_CASE("Hoelder quotient stays bounded as pairs refine") {
  const HomEndo f = make_family("quadratic_plus_c", {-1.0, 0.0});
  const double gamma = 0.9 * d_infty_and_holder(f, 5).gamma;
  Rng rng(77);
  std::vector<double> sups;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    double sup = 0.0;
    for (int t = 0; t < 3000; ++t) {
      const ProjPoint p = random_fs_point(1, rng);
      HVec q = p.coords();
      const CMat tf = tangent_frame(q);
      const Complex dir = std::polar(eps, 2 * kPi * rng.uniform());
      for (int i = 0; i < 2; ++i) q[i] += dir * tf(i, 0);
      const ProjPoint pq = normalize(q);
      const double dist = fs_distance(p, pq);
      sup = std::max(sup, std::abs(green_function(f, p).value - green_function(f, pq).value) / std::pow(dist, gamma));
    }
    sups.push_back(sup);
  }
  for (double s : sups) CHECK(std::isfinite(s));
  CHECK(sups[2] <= 2.0 * sups[0]);
}

TEST_CASE("density of mu for the square map") {
  const HomEndo f = make_family("power", {1, 2});
  ChartWindow w{0, HVec{Complex(0.0, 0.0)}, {1.5}};
  const DensityGrid dg = green_density_grid(f, w, 256);
  CHECK(dg.mass == doctest::Approx(1.0).epsilon(0.05));
  double ring = 0.0;
  for (int iy = 0; iy < 256; ++iy)
    for (int ix = 0; ix < 256; ++ix) {
      const double r = std::abs(dg.grid.point(ix, iy));
      if (r > 0.9 && r < 1.1) ring += dg.grid.at(ix, iy) * dg.grid.cell_area();
    }
  CHECK(ring >= 0.95 * dg.mass);
  CHECK(dg.negative_score < kMaxNegativeScore);
  for (double v : dg.grid.values) CHECK(v >= -1e-6 * 1e3);
}

TEST_CASE("density mass for the basilica") {
  const HomEndo f = make_family("quadratic_plus_c", {-1.0, 0.0});
  ChartWindow w{0, HVec{Complex(0.0, 0.0)}, {2.0}};
  const DensityGrid dg = green_density_grid(f, w, 200);
  CHECK(dg.mass == doctest::Approx(1.0).epsilon(0.05));
  CHECK(dg.negative_score < kMaxNegativeScore);
  CHECK(std::isfinite(dg.richardson_mass));
}

TEST_CASE("density grid input checks") {
  const HomEndo f = make_family("power", {1, 2});
  CHECK_THROWS_AS(green_density_grid(f, ChartWindow{0, HVec{Complex(0, 0)}, {1.0}}, 2), Error);
  CHECK_THROWS_AS(green_density_grid(make_family("power", {2, 2}), ChartWindow{0, HVec{Complex(0, 0)}, {1.0}}, 8), Error);
  // k = 2 trace density is non-negative on a slice through the torus.
  const DensityGrid dg =
      green_density_grid(make_family("power", {2, 2}), ChartWindow{0, HVec{Complex(0, 0), Complex(0.5, 0)}, {1.5, 1.5}}, 64);
  CHECK(dg.negative_score < kMaxNegativeScore);
}

TEST_CASE("hypersurface potentials") {
  const HomEndo f = make_family("power", {1, 2});
  Polynomial line = Polynomial::variable(2, 0) - Polynomial::variable(2, 1);
  const auto rows = hypersurface_potential_decay(f, line, 16, 4000, 9);
  REQUIRE(rows.size() == 17);
  CHECK(rows[12].l1 < 0.05);
  CHECK(std::abs(rows[12].l1 - rows[16].l1) < 0.05);

  // Row 0 from the closed-form Green function.
  Rng rng(derive_seed(9, {0}));
  std::vector<double> u;
  for (int i = 0; i < 256; ++i) {
    const ProjPoint p = random_fs_point(1, rng);
    u.push_back(std::log(std::abs(p[0] - p[1])) - power_green(p));
  }
  const auto small = hypersurface_potential_decay(f, line, 0, 256, 9);
  double m = 0.0, l1 = 0.0;
  for (double v : u) m += v / 256.0;
  for (double v : u) l1 += std::abs(v - m) / 256.0;
  CHECK(small[0].l1 == doctest::Approx(l1).epsilon(1e-9));

  // Exceptional line: the potential keeps its pole at [1:0]; E|min(0, log|w|)| = log(2)/2.
  const auto exc = hypersurface_potential_decay(f, Polynomial::variable(2, 1), 12, 4000, 9);
  CHECK(exc[12].l1 > 0.2);
  CHECK(exc[12].l1 == doctest::Approx(0.5 * std::log(2.0)).epsilon(0.05));
}

TEST_CASE("grid files and PPM rendering") {
  ChartGrid g(ChartWindow{0, HVec{Complex(0.25, -0.5)}, {1.0}}, 5, 3);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = 0.1 * static_cast<double>(i);
  g.at(2, 1) = -std::numeric_limits<double>::infinity();
  CHECK(grid_header(g).size() == 64);
  CHECK(grid_header(g).rfind("PDG1 5 3 ", 0) == 0);
  const std::string path = tmp_path("grid.bin");
  write_grid(g, path);
  CHECK(std::filesystem::file_size(path) == 64 + 15 * 8);
  const ChartGrid r = read_grid(path);
  CHECK(r.nx == 5);
  CHECK(r.ny == 3);
  CHECK(r.xmin() == doctest::Approx(-0.75));
  CHECK(r.ymax() == doctest::Approx(0.5));
  for (std::size_t i = 0; i < g.values.size(); ++i)
    if (i != 7) CHECK(r.values[i] == g.values[i]);
  CHECK(std::isinf(r.values[7]));

  const std::string ppm = tmp_path("grid.ppm");
  render_field(path, {Palette::Gray, false}, ppm);
  std::ifstream in(ppm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, mx = 0;
  in >> magic >> w >> h >> mx;
  in.get();
  CHECK(magic == "P6");
  CHECK(w == 5);
  CHECK(h == 3);
  std::vector<unsigned char> px(45);
  in.read(reinterpret_cast<char*>(px.data()), 45);
  // Cell (2,1) sits in the middle image row.
  CHECK(px[(1 * 5 + 2) * 3 + 0] == 255);
  CHECK(px[(1 * 5 + 2) * 3 + 1] == 0);
  CHECK(px[(1 * 5 + 2) * 3 + 2] == 255);
  // Top image row is iy = 2, holding the largest values.
  CHECK(px[(0 * 5 + 4) * 3] == 255);
}

TEST_CASE("grid header errors") {
  const std::string bad = tmp_path("bad.bin");
  {
    std::ofstream o(bad, std::ios::binary);
    std::string h = "PDG1 0 0 -1 1 -1 1 f64";
    h.resize(64, ' ');
    o << h;
  }
  try {
    read_grid(bad);
    FAIL("expected HeaderMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HeaderMismatch);
  }
  {
    std::ofstream o(bad, std::ios::binary);
    std::string h = "XXXX 2 2 -1 1 -1 1 f64";
    h.resize(64, ' ');
    o << h;
  }
  CHECK_THROWS_AS(read_grid(bad), Error);
  {
    std::ofstream o(bad, std::ios::binary);
    std::string h = "PDG1 2 2 -1 1 -1 1 f64";
    h.resize(64, ' ');
    o << h << "short";
  }
  try {
    read_grid(bad);
    FAIL("expected HeaderMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HeaderMismatch);
  }
  CHECK_THROWS_AS(parse_palette("rainbow"), Error);
}
