#include <Eigen/SVD>
#include <cmath>

#include "doctest.h"
#include "pluridyn/errors.hpp"
#include "pluridyn/spectra.hpp"

using namespace pluridyn;

namespace {

HVec hv(std::initializer_list<Complex> xs) {
  HVec v(static_cast<int>(xs.size()));
  int i = 0;
  for (const auto& x : xs) v[i++] = x;
  return v;
}

bool has_point(const PeriodicSet& s, const ProjPoint& p, double tol = 1e-8) {
  for (const auto& q : s.points)
    if (fs_distance(q.point, p) < tol) return true;
  return false;
}

void check_periodic_invariants(const HomEndo& f, const PeriodicSet& s) {
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    CHECK(s.points[i].residual < 1e-8);
    ProjPoint x = s.points[i].point;
    for (int j = 0; j < s.n; ++j) x = f.eval(x);
    CHECK(fs_distance(x, s.points[i].point) < 1e-8);
    for (std::size_t j = 0; j < i; ++j) CHECK(fs_distance(s.points[i].point, s.points[j].point) > kPeriodicDedup);
  }
}

}  // namespace

TEST_CASE("lyapunov exponent of the squaring map is log 2") {
  const HomEndo f = make_family("power", {1, 2});
  const LyapunovReport r = lyapunov_spectrum(f, 11, {10000, 1, 40, 3});
  REQUIRE(r.exponents.size() == 1);
  CHECK(std::abs(r.exponents[0] - std::log(2.0)) < 1e-3);
  CHECK(r.sum_consistent);
  CHECK(r.bound_ok);
  CHECK(r.orbit_len == 10000);
}

TEST_CASE("FS stretch on the invariant torus of power(2,3) is 3 in every direction") {
  // Hand derivative: J = 3 diag(z_i^2) and ||F(z)|| = 1/3 on the unit torus
  // point, so the FS differential is 3 times a unitary map.
  const HomEndo f = make_family("power", {2, 3});
  const double s = 1.0 / std::sqrt(3.0);
  const HVec z = hv({s, s * std::polar(1.0, 0.7), s * std::polar(1.0, -2.1)});
  const Eigen::JacobiSVD<CMat> svd(differential_fs(f, z));
  CHECK(svd.singularValues()(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(svd.singularValues()(1) == doctest::Approx(3.0).epsilon(1e-12));

  const LyapunovReport r = lyapunov_spectrum(f, 5, {3000, 1, 40, 3});
  REQUIRE(r.exponents.size() == 2);
  CHECK(std::abs(r.exponents[0] - std::log(3.0)) < 1e-2);
  CHECK(std::abs(r.exponents[1] - std::log(3.0)) < 1e-2);
  CHECK(r.exponents[0] >= r.exponents[1]);
  CHECK(r.sum_consistent);
}

TEST_CASE("basilica exponent respects the lower bound and sums to the Jacobian average") {
  const HomEndo f = make_family("quadratic_plus_c", {-1, 0});
  const LyapunovReport r = lyapunov_spectrum(f, 3, {20000, 1, 40, 3});
  CHECK(r.bound_ok);
  CHECK(r.exponents[0] >= 0.5 * std::log(2.0) - 3.0 * r.stderrs[0]);
  CHECK(r.sum_consistent);
  // Polynomials with connected Julia set have exponent exactly log d.
  CHECK(std::abs(r.exponents[0] - std::log(2.0)) < 4.0 * r.stderrs[0] + 0.02);

  const LyapunovReport r5 = lyapunov_spectrum(f, 3, {20000, 5, 40, 3});
  CHECK(r5.exponents[0] == doctest::Approx(r.exponents[0]).epsilon(1e-9));
}

TEST_CASE("lyapunov input checks") {
  const HomEndo f = make_family("power", {1, 2});
  CHECK_THROWS_AS(lyapunov_spectrum(f, 1, {50, 1, 40, 3}), Error);
  CHECK_THROWS_AS(lyapunov_spectrum(f, 1, {1000, 0, 40, 3}), Error);
}

TEST_CASE("periodic point counts") {
  CHECK(periodic_count(1, 2, 1) == 3);
  CHECK(periodic_count(1, 2, 2) == 5);
  CHECK(periodic_count(1, 3, 1) == 4);
  CHECK(periodic_count(2, 2, 1) == 7);
  CHECK(periodic_count(2, 2, 3) == 73);
  CHECK(periodic_count(3, 2, 40) == UINT64_MAX);
}

TEST_CASE("fixed points of the squaring map") {
  const HomEndo f = make_family("power", {1, 2});
  const PeriodicSet s = periodic_points(f, 1, 100, 1);
  CHECK(s.exhaustive);
  REQUIRE(s.points.size() == 3);
  CHECK(has_point(s, normalize(hv({1.0, 0.0}))));
  CHECK(has_point(s, normalize(hv({0.0, 1.0}))));
  CHECK(has_point(s, normalize(hv({1.0, 1.0}))));
  for (const auto& pp : s.points) {
    if (fs_distance(pp.point, normalize(hv({1.0, 1.0}))) < 1e-8) {
      CHECK(pp.repelling);
      CHECK(std::abs(pp.multipliers[0]) == doctest::Approx(2.0).epsilon(1e-9));
    } else {
      CHECK_FALSE(pp.repelling);
      CHECK(std::abs(pp.multipliers[0]) < 1e-9);
    }
  }
  check_periodic_invariants(f, s);
}

TEST_CASE("period two of z^2 solves z^4 = z") {
  const HomEndo f = make_family("quadratic_plus_c", {0, 0});
  const PeriodicSet s = periodic_points(f, 2, 100, 2);
  REQUIRE(s.points.size() == 5);
  for (int j = 0; j < 3; ++j) CHECK(has_point(s, normalize(hv({1.0, std::polar(1.0, 2.0 * M_PI * j / 3.0)}))));
  CHECK(has_point(s, normalize(hv({1.0, 0.0}))));
  CHECK(has_point(s, normalize(hv({0.0, 1.0}))));
  for (const auto& pp : s.points)
    if (std::abs(std::abs(pp.point[1] / pp.point[0]) - 1.0) < 1e-9) {
      CHECK(pp.repelling);
      CHECK(std::abs(pp.multipliers[0]) == doctest::Approx(4.0).epsilon(1e-9));
    }
  check_periodic_invariants(f, s);
}

TEST_CASE("exhaustive enumeration in two dimensions and for the basilica") {
  const HomEndo f = make_family("power", {2, 2});
  const PeriodicSet s1 = periodic_points(f, 1, 100, 3);
  CHECK(s1.points.size() == 7);
  check_periodic_invariants(f, s1);
  const PeriodicSet s3 = periodic_points(f, 3, 100, 3);
  CHECK(s3.points.size() == 73);
  check_periodic_invariants(f, s3);

  const HomEndo b = make_family("quadratic_plus_c", {-1, 0});
  const PeriodicSet sb = periodic_points(b, 6, 100, 4);
  CHECK(sb.points.size() == 65);
  check_periodic_invariants(b, sb);
  int attracting = 0;
  for (const auto& pp : sb.points) attracting += std::abs(pp.multipliers[0]) < 1.0 ? 1 : 0;
  CHECK(attracting == 3);  // the cycle {0, -1} and the superattracting point at infinity
}

TEST_CASE("non-exhaustive mode stops at the cap") {
  const HomEndo f = make_family("power", {1, 2});
  const PeriodicSet s = periodic_points(f, 10, 40, 5);
  CHECK_FALSE(s.exhaustive);
  CHECK(s.points.size() == 40);
  check_periodic_invariants(f, s);
  CHECK(periodic_to_csv(s).find("period,re0,im0,re1,im1,multipliers,repelling,residual") == 0);
}

TEST_CASE("periodic measures of the squaring map approach the circle measure") {
  const HomEndo f = make_family("power", {1, 2});
  // 4096-th roots of unity integrate every dictionary observable exactly.
  const EmpiricalMeasure ref = exact_preimage_measure(f, normalize(hv({1.0, 1.0})), 12);
  CHECK(smooth_dictionary(1).size() == 12);
  CHECK(smooth_dictionary(2).size() == 12);
  const EquidistTable t = periodic_equidistribution_gap(f, {4, 6, 8}, ref, 7);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.decreasing);
  // Roots of unity of order 2^n - 1 cancel every trigonometric moment; the
  // gap is set by |z_0|^4 picking up the fixed points 0 and infinity.
  for (const auto& row : t.rows) {
    CHECK(row.count == periodic_count(1, 2, row.n));
    CHECK(row.gap == doctest::Approx(0.75 * std::ldexp(1.0, -row.n)).epsilon(1e-9));
  }
  CHECK(t.rows.back().gap < 0.01);

  const EquidistTable one = periodic_equidistribution_gap(f, {3}, ref, 7);
  CHECK(one.rows.size() == 1);
  CHECK(one.decreasing);
}

TEST_CASE("basilica periodic measures equidistribute") {
  const HomEndo f = make_family("quadratic_plus_c", {-1, 0});
  const EmpiricalMeasure ref = exact_preimage_measure(f, normalize(hv({1.0, 0.3})), 12);
  const EquidistTable t = periodic_equidistribution_gap(f, {4, 6, 8}, ref, 8);
  CHECK(t.decreasing);
  CHECK(t.rows.back().gap < t.rows.front().gap);
}

TEST_CASE("entropy of the squaring map") {
  const HomEndo f = make_family("power", {1, 2});
  const EmpiricalMeasure cloud = trajectory_cloud(f, 100000, 2000, 40, 21);
  const EntropyReport r = entropy_estimate(f, 8, {0.05, 0.1}, cloud);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].defined);
  CHECK(r.rows[0].slope >= 0.9 * std::log(2.0));
  CHECK(r.rows[0].slope <= 1.1 * std::log(2.0));
  for (const auto& row : r.rows)
    for (std::size_t n = 1; n < row.counts.size(); ++n) CHECK(row.counts[n] >= row.counts[n - 1]);

  // h(f^2) = 2 h(f).
  const HomEndo f2 = compose(f, f);
  const EntropyReport r2 = entropy_estimate(f2, 4, {0.05}, cloud);
  REQUIRE(r2.rows[0].defined);
  CHECK(r2.rows[0].slope == doctest::Approx(2.0 * r.rows[0].slope).epsilon(0.15));

  // n = 0 gives the packing number of the cloud and no slope.
  const EntropyReport r0 = entropy_estimate(f, 0, {0.05}, cloud);
  CHECK_FALSE(r0.rows[0].defined);
  CHECK(std::isnan(r0.estimate));
  CHECK(r0.rows[0].counts[0] == r.rows[0].counts[0]);
}

TEST_CASE("dimension bounds pinch for the squaring map") {
  const HomEndo f = make_family("power", {1, 2});
  const LyapunovReport lyap = lyapunov_spectrum(f, 2, {10000, 1, 40, 3});
  const EmpiricalMeasure cloud = trajectory_cloud(f, 100000, 2000, 40, 22);
  const DimensionReport d = dimension_bounds_report(f, cloud, lyap);
  CHECK(d.lower == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(d.upper == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(std::abs(d.box_dim - 1.0) < 0.15);
  CHECK(d.within);
  CHECK(d.scales.size() == 4);
  CHECK(d.points_used == 100000);
}

TEST_CASE("dimension of the torus measure of power(2,2)") {
  // mu is Haar measure on |z_0| = |z_1| = |z_2|; sample it directly.
  const HomEndo f = make_family("power", {2, 2});
  EmpiricalMeasure torus;
  Rng rng(31);
  const int m = 1000000;
  for (int i = 0; i < m; ++i)
    torus.points.push_back(normalize(hv({1.0, std::polar(1.0, 2.0 * M_PI * rng.uniform()),
                                         std::polar(1.0, 2.0 * M_PI * rng.uniform())})));
  torus.weights.assign(m, 1.0 / m);
  LyapunovReport lyap;
  lyap.exponents = {std::log(2.0), std::log(2.0)};
  lyap.sum = 2.0 * std::log(2.0);
  const DimensionReport d = dimension_bounds_report(f, torus, lyap);
  CHECK(d.lower == doctest::Approx(2.0));
  CHECK(d.upper == doctest::Approx(2.0));
  CHECK(std::abs(d.box_dim - 2.0) < 0.2);
  CHECK(d.within);
}
