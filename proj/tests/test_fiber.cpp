#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "pluridyn/errors.hpp"
#include "pluridyn/fiber.hpp"

using namespace pluridyn;

namespace {
const Complex I(0.0, 1.0);

bool contains(const Fiber& fib, const ProjPoint& p, double tol) {
  for (const auto& q : fib.points)
    if (fs_distance(p, q) < tol) return true;
  return false;
}

std::vector<oracle::WeightedPoint> chart0_cloud(const BackwardTree& t) {
  std::vector<oracle::WeightedPoint> out;
  for (const auto& n : t.leaves()) out.push_back({chart_map(n.point, 0)[0], n.weight});
  return out;
}
}  // namespace

TEST_CASE("fiber examples") {
  const HomEndo f = make_family("power", {1, 2});
  const Fiber a = fiber(f, normalize({1.0, 1.0}));
  CHECK(a.total_multiplicity() == 2);
  CHECK(contains(a, normalize({1.0, 1.0}), 1e-12));
  CHECK(contains(a, normalize({1.0, -1.0}), 1e-12));

  const HomEndo g = make_family("power", {2, 2});
  const Fiber b = fiber(g, normalize({1.0, 1.0, 1.0}));
  CHECK(b.total_multiplicity() == 4);
  CHECK(b.points.size() == 4);
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) CHECK(contains(b, normalize({1.0, s1, s2}), 1e-9));

  // z^2 + i = 0 by the quadratic formula.
  const HomEndo q = make_family("quadratic_plus_c", {0.0, 1.0});
  const Fiber c = fiber(q, normalize({1.0, 0.0}));
  const Complex r = std::sqrt(-I);
  CHECK(contains(c, chart_inverse(HVec{r}, 0), 1e-12));
  CHECK(contains(c, chart_inverse(HVec{-r}, 0), 1e-12));
}

TEST_CASE("critical value fiber has a double point") {
  const HomEndo f = make_family("power", {1, 2});
  const Fiber fib = fiber(f, normalize({1.0, 0.0}));
  REQUIRE(fib.points.size() == 1);
  CHECK(fib.multiplicities[0] == 2);
  for (int s = 0; s < 20; ++s) CHECK(fs_distance(random_preimage(f, normalize({1.0, 0.0}), s), normalize({1.0, 0.0})) < 1e-12);

  // Degree 3 map with a double critical point at 0 in the k = 2 solver.
  const HomEndo g = make_family("power", {2, 2});
  const Fiber gf = fiber(g, normalize({1.0, 0.0, 1.0}));
  CHECK(gf.total_multiplicity() == 4);
  CHECK(gf.points.size() == 2);
}

TEST_CASE("companion solver for higher degree") {
  const HomEndo f = make_family("perturbed_power", {1, 5, 0.3});
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const ProjPoint a = random_fs_point(1, rng);
    const Fiber fib = fiber(f, a);
    CHECK(fib.total_multiplicity() == 5);
    for (const auto& p : fib.points) CHECK(fs_distance(f.eval(p), a) < 1e-9);
  }
}

TEST_CASE("random_preimage frequencies") {
  const HomEndo f = make_family("power", {1, 2});
  const ProjPoint a = normalize({1.0, 1.0});
  const ProjPoint minus = normalize({1.0, -1.0});
  int hits = 0;
  for (int s = 0; s < 10000; ++s) hits += fs_distance(random_preimage(f, a, static_cast<std::uint64_t>(s)), minus) < 1e-9;
  CHECK(std::abs(hits / 10000.0 - 0.5) < 0.02);
  const ProjPoint r1 = random_preimage(f, a, 77), r2 = random_preimage(f, a, 77);
  CHECK(r1[0] == r2[0]);
  CHECK(r1[1] == r2[1]);

  const HomEndo q = make_family("quadratic_plus_c", {-1.0, 0.0});
  const ProjPoint b = random_fs_point(1, 99);
  const Fiber fib = fiber(q, b);
  REQUIRE(fib.points.size() == 2);
  int first = 0;
  for (int s = 0; s < 10000; ++s) first += fs_distance(random_preimage(q, b, static_cast<std::uint64_t>(s)), fib.points[0]) < 1e-9;
  CHECK(std::abs(first / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("Bezout count and pushforward on random maps") {
  Rng rng(2718);
  const int ks[5] = {1, 1, 2, 2, 2};
  const int ds[5] = {2, 3, 2, 3, 2};
  for (int m = 0; m < 5; ++m) {
    const HomEndo f = oracle::random_map(ks[m], ds[m], rng);
    const int expect = static_cast<int>(std::pow(ds[m], ks[m]));
    for (int t = 0; t < 50; ++t) {
      const ProjPoint a = random_fs_point(f.k(), rng);
      FiberOptions opts;
      opts.seed = rng.next();
      const Fiber fib = fiber(f, a, opts);
      CHECK(fib.total_multiplicity() == expect);
      for (const auto& p : fib.points) CHECK(fs_distance(f.eval(p), a) < 1e-9);
    }
  }
}

TEST_CASE("inverse branch of the square map") {
  const HomEndo f = make_family("power", {1, 2});
  const ProjPoint center = normalize({1.0, 1.0});
  const InverseBranch g(f, center, 0.5, center);
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const Complex w = 1.0 + 0.5 * std::sqrt(rng.uniform()) * std::polar(1.0, 2 * kPi * rng.uniform());
    const ProjPoint x = chart_inverse(HVec{w}, 0);
    const ProjPoint y = g(x);
    CHECK(fs_distance(y, chart_inverse(HVec{std::sqrt(w)}, 0)) < 1e-9);
    CHECK(fs_distance(f.eval(y), x) < 1e-9);
  }
  CHECK_THROWS_AS(g(chart_inverse(HVec{Complex(2.0, 0.0)}, 0)), Error);
}

TEST_CASE("branch ball around a critical value collides") {
  const HomEndo f = make_family("power", {1, 2});
  const ProjPoint center = chart_inverse(HVec{Complex(0.5, 0.0)}, 0);
  const ProjPoint seed = chart_inverse(HVec{Complex(std::sqrt(0.5), 0.0)}, 0);
  try {
    InverseBranch g(f, center, 1.0, seed);
    FAIL("expected BranchCollision");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BranchCollision);
  }
}

TEST_CASE("inverse branch image diameter shrinks with depth") {
  const HomEndo f = make_family("power", {1, 2});
  const ProjPoint center = normalize({1.0, 1.0});
  const double d1 = InverseBranch(f, center, 0.4, center, 1).image_diameter();
  for (int n = 2; n <= 5; ++n) {
    const double dn = InverseBranch(f, center, 0.4, center, n).image_diameter();
    CHECK(dn <= d1 * std::pow(2.0, -(n - 1) / 2.0) * 1.05);
  }
}

TEST_CASE("backward tree examples") {
  const HomEndo f = make_family("power", {1, 2});
  TreeOptions opts;
  const BackwardTree t = backward_tree(f, normalize({1.0, 1.0}), 3, opts);
  CHECK(t.exact);
  REQUIRE(t.leaves().size() == 8);
  double wsum = 0.0;
  for (const auto& n : t.leaves()) {
    wsum += n.weight;
    const Complex w = chart_map(n.point, 0)[0];
    CHECK(std::abs(std::pow(w, 8) - Complex(1.0)) < 1e-12);
    CHECK(n.weight == doctest::Approx(0.125));
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
  const BackwardTree t0 = backward_tree(f, normalize({1.0, 2.0}), 0, opts);
  REQUIRE(t0.leaves().size() == 1);
  CHECK(t0.leaves()[0].weight == 1.0);
}

TEST_CASE("backward tree converges in Wasserstein distance") {
  const HomEndo q = make_family("quadratic_plus_c", {0.2, 0.0});
  const ProjPoint a = chart_inverse(HVec{Complex(0.3, 0.1)}, 0);
  TreeOptions opts;
  const BackwardTree t10 = backward_tree(q, a, 10, opts);
  const BackwardTree t12 = backward_tree(q, a, 12, opts);
  CHECK(t12.leaves().size() == 4096);
  CHECK(oracle::w1_upper(chart0_cloud(t10), chart0_cloud(t12), 2.0) < 0.05);

  const HomEndo m = make_family("quadratic_plus_c", {-1.0, 0.0});
  std::vector<double> gaps;
  BackwardTree prev = backward_tree(m, a, 3, opts);
  for (int n = 4; n <= 9; ++n) {
    BackwardTree cur = backward_tree(m, a, n, opts);
    gaps.push_back(oracle::w1_upper(chart0_cloud(prev), chart0_cloud(cur), 2.0));
    prev = std::move(cur);
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] <= 1.2 * gaps[i - 1]);
}

TEST_CASE("sampled tree keeps unbiased weights") {
  const HomEndo q = make_family("quadratic_plus_c", {-1.0, 0.0});
  const ProjPoint a = chart_inverse(HVec{Complex(0.3, 0.1)}, 0);
  TreeOptions exact_opts;
  TreeOptions capped;
  capped.cap = 256;
  capped.seed = 5;
  const BackwardTree e = backward_tree(q, a, 10, exact_opts);
  const BackwardTree s = backward_tree(q, a, 10, capped);
  CHECK_FALSE(s.exact);
  CHECK(s.leaves().size() <= 256);
  double ws = 0.0, me = 0.0, ms = 0.0;
  for (const auto& n : s.leaves()) {
    ws += n.weight;
    ms += n.weight * std::norm(chart_map(n.point, 0)[0]);
  }
  for (const auto& n : e.leaves()) me += n.weight * std::norm(chart_map(n.point, 0)[0]);
  CHECK(ws == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(ms - me) < 0.1);
}

TEST_CASE("tree JSON export") {
  const HomEndo f = make_family("power", {1, 2});
  const std::string j = tree_to_json(backward_tree(f, normalize({1.0, 1.0}), 2));
  CHECK(j.find("\"weights\":[0.25,0.25,0.25,0.25]") != std::string::npos);
}
