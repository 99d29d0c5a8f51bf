#include <cmath>

#include "doctest.h"
#include "pluridyn/errors.hpp"
#include "pluridyn/ini.hpp"
#include "pluridyn/polylike.hpp"

using namespace pluridyn;

namespace {

Polynomial mono(int a, int b, Complex c) {
  Exponent e{};
  e[0] = a;
  e[1] = b;
  return Polynomial::monomial(2, e, c);
}

HVec hv(Complex a, Complex b) {
  HVec v(2);
  v[0] = a;
  v[1] = b;
  return v;
}

ConvexDomain box2() { return ConvexDomain::box(hv(0.0, 0.0), {2.0, 2.0}); }

// (2 z1, z2^2): K = {0} x closed unit disc, mu lives on {0} x unit circle.
PolyLikeMap skew() { return make_polylike({mono(1, 0, 2.0), mono(0, 2, 1.0)}, box2(), 1); }
// (z2^2, 2 z1): its square is (4 z1^2, 2 z2^2).
PolyLikeMap swap() { return make_polylike({mono(0, 2, 1.0), mono(1, 0, 2.0)}, box2(), 1); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

// Forward Monte Carlo mass of (f^n)^* omega^p on f^{-n}(W): x uniform in V,
// kept while its orbit stays in V and counted when f^n(x) lands in W.
std::vector<double> forward_masses(const PolyLikeMap& f, const ConvexDomain& w, int p, int n_max, long samples) {
  std::vector<double> s(n_max + 1, 0.0);
  Rng rng(77);
  const double calib = kappa_calibration(f.k(), p);
  for (long i = 0; i < samples; ++i) {
    HVec x = f.domain().sample_interior(rng);
    CMat a = CMat::Identity(f.k(), f.k());
    for (int n = 1; n <= n_max; ++n) {
      a = f.jacobian(x) * a;
      x = f.eval(x);
      if (!f.domain().contains(x)) break;
      if (w.contains(x)) s[n] += kappa(a, p) / calib;
    }
  }
  for (double& v : s) v *= f.domain().volume() / w.volume() / static_cast<double>(samples);
  return s;
}

}  // namespace

TEST_CASE("box domain geometry") {
  const ConvexDomain d = box2();
  CHECK(d.volume() == doctest::Approx(256.0));
  CHECK(d.signed_distance(hv(0.0, 0.0)) == doctest::Approx(2.0));
  CHECK(d.signed_distance(hv(Complex(1.5, 0.0), 0.0)) == doctest::Approx(0.5));
  CHECK(d.signed_distance(hv(Complex(3.0, 0.0), 0.0)) == doctest::Approx(-1.0));
  CHECK(d.signed_distance(hv(Complex(3.0, 0.0), Complex(0.0, 6.0))) == doctest::Approx(-std::sqrt(17.0)));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    CHECK(d.contains(d.sample_interior(rng)));
    CHECK(std::abs(d.signed_distance(d.sample_boundary(rng))) < 1e-12);
  }
  const ConvexDomain b = ConvexDomain::ball(hv(1.0, 0.0), 2.0);
  CHECK(b.volume() == doctest::Approx(M_PI * M_PI / 2.0 * 16.0));
  CHECK(b.signed_distance(hv(1.0, 0.0)) == doctest::Approx(2.0));
}

TEST_CASE("topological degree of the model maps") {
  const PolyLikeMap f = skew();
  CHECK(f.topological_degree() == 2);
  CHECK(f.properness_margin() > 1.0);
  for (int c : f.target_counts()) CHECK(c == 2);
  CHECK(swap().topological_degree() == 2);
  const PolyLikeMap g = make_polylike({mono(0, 3, 1.0), mono(1, 0, 2.0)}, box2(), 1);
  CHECK(g.topological_degree() == 3);
}

TEST_CASE("small perturbation keeps the degree while Bezout grows") {
  const PolyLikeMap f = make_polylike(
      {mono(1, 0, 2.0) + mono(0, 2, 1e-3), mono(0, 2, 1.0) + mono(1, 0, 1e-3)}, box2(), 1);
  CHECK(f.bezout_bound() == 4);
  CHECK(f.topological_degree() == 2);
}

TEST_CASE("invertible and non-proper maps are rejected") {
  // Henon-like (z1^2 + a z2, z1) is a polynomial automorphism.
  const ErrorKind k = kind_of([] { make_polylike({mono(2, 0, 1.0) + mono(0, 1, 0.3), mono(1, 0, 1.0)}, box2(), 1); });
  CHECK((k == ErrorKind::NotProper || k == ErrorKind::DegreeTooLow));
  CHECK(kind_of([] { make_polylike({mono(1, 0, 0.5), mono(0, 2, 1.0)}, box2(), 1); }) == ErrorKind::NotProper);
  CHECK(kind_of([] {
          make_polylike({mono(1, 0, 2.0), mono(0, 1, 3.0)}, box2(), 1);
        }) == ErrorKind::DegreeTooLow);
}

TEST_CASE("fibers lie in V and map to the target") {
  const PolyLikeMap f = skew();
  const HVec w = hv(Complex(0.3, -0.2), Complex(0.1, 0.7));
  const auto fib = pl_fiber(f, w, 5);
  REQUIRE(fib.size() == 2);
  for (const auto& z : fib) {
    CHECK(f.domain().contains(z));
    const HVec y = f.eval(z);
    CHECK(std::abs(y[0] - w[0]) + std::abs(y[1] - w[1]) < 1e-10);
  }
  CHECK(std::abs(fib[0][1] + fib[1][1]) < 1e-10);
}

TEST_CASE("filled Julia membership") {
  const PolyLikeMap f = skew();
  CHECK(filled_julia_membership(f, hv(0.0, 0.5), 40).inside);
  const Membership out = filled_julia_membership(f, hv(0.1, 0.5), 40);
  CHECK_FALSE(out.inside);
  CHECK(out.escape_time == 5);
  CHECK(filled_julia_membership(f, hv(0.2, 0.5), 40).escape_time == 4);
  const Membership far = filled_julia_membership(f, hv(3.0, 0.0), 40);
  CHECK_FALSE(far.inside);
  CHECK(far.escape_time == 0);
  int prev = 0;
  for (double r : {1.9, 1.5, 1.2, 1.05, 1.01}) {
    const int t = filled_julia_membership(f, hv(0.0, r), 40).escape_time;
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("backward orbits concentrate on the support of mu") {
  const PolyLikeMap f = skew();
  const AffineMeasure mu = sample_equilibrium_pl(f, 400, 40, 2);
  CHECK(mu.provenance.method == "backward_orbit_pl");
  CHECK(mu.provenance.dropped == 0);
  CHECK(mu.mean([](const HVec& z) { return std::abs(z[0]); }).mean < 0.01);
  CHECK(mu.mean([](const HVec& z) { return std::abs(std::abs(z[1]) - 1.0); }).mean < 0.01);
  CHECK(near_boundary_fraction(f, mu) > 0.95);

  const AffineMeasure again = sample_equilibrium_pl(f, 400, 40, 2);
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    CHECK(mu.points[i][0] == again.points[i][0]);
    CHECK(mu.points[i][1] == again.points[i][1]);
  }
}

TEST_CASE("burn_in 0 and 1 give the start and its preimages") {
  const PolyLikeMap f = skew();
  const HVec s = hv(Complex(0.4, 0.0), Complex(0.0, 0.36));
  const AffineMeasure m0 = sample_equilibrium_pl(f, 20, 0, 3, s);
  for (const auto& z : m0.points) CHECK(std::abs(z[0] - s[0]) + std::abs(z[1] - s[1]) == 0.0);
  const AffineMeasure m1 = sample_equilibrium_pl(f, 40, 1, 3, s);
  for (const auto& z : m1.points) {
    CHECK(std::abs(z[0] - 0.2) < 1e-10);
    CHECK(std::abs(std::abs(z[1]) - 0.6) < 1e-10);
  }
}

TEST_CASE("mu is invariant") {
  const PolyLikeMap f = swap();
  const AffineMeasure mu = sample_equilibrium_pl(f, 1500, 40, 4);
  for (const auto& phi : std::vector<std::function<double(const HVec&)>>{
           [](const HVec& z) { return std::abs(z[0] - 0.1); }, [](const HVec& z) { return z[1].real(); },
           [](const HVec& z) { return std::abs(z[0] + z[1] - Complex(0.2, 0.1)); }}) {
    const MeanErr a = mu.mean(phi);
    const MeanErr b = mu.mean([&](const HVec& z) { return phi(f.eval(z)); });
    CHECK(std::abs(a.mean - b.mean) <= 4.0 * std::hypot(a.stderr_, b.stderr_) + 1e-3);
  }
}

TEST_CASE("log Jacobian against the hand value") {
  // det Df = -4 z2 in both maps; |z2| = 1 on supp mu for the skew map and
  // |z2| = 1/2 for the swap map.
  const LogJacobian a = log_jacobian_check(skew(), sample_equilibrium_pl(skew(), 300, 40, 5));
  CHECK(a.value == doctest::Approx(std::log(16.0)).epsilon(1e-6));
  CHECK(a.bound == doctest::Approx(std::log(2.0)));
  CHECK(a.ok);
  const LogJacobian b = log_jacobian_check(swap(), sample_equilibrium_pl(swap(), 300, 40, 5));
  CHECK(b.value == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(b.ok);
}

TEST_CASE("kappa calibration and values") {
  CHECK(kappa_calibration(2, 0) == 1.0);
  CHECK(kappa_calibration(2, 1) == 2.0);
  CHECK(kappa_calibration(3, 2) == 3.0);
  for (int p = 0; p <= 3; ++p) CHECK(kappa(CMat::Identity(3, 3), p) == doctest::Approx(kappa_calibration(3, p)));
  CMat a(2, 2);
  a << 3.0, 0.0, 0.0, 0.5;
  CHECK(kappa(a, 1) == doctest::Approx(9.25));
  CHECK(kappa(a, 2) == doctest::Approx(2.25));
  CMat u(2, 2);
  u << Complex(0, 1) / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), Complex(0, 1) / std::sqrt(2.0);
  CHECK(kappa(u * a, 1) == doctest::Approx(9.25));
}

TEST_CASE("top degree equals the topological degree") {
  const PolyLikeMap f = skew();
  const ConvexDomain w = default_degree_window(f, sample_equilibrium_pl(f, 300, 40, 6));
  const DegreeEstimate d = dynamical_degree_estimate(f, 2, 5, 100, 7, w);
  CHECK(d.estimate == doctest::Approx(2.0).epsilon(1e-6));
  for (std::size_t n = 0; n < d.masses.size(); ++n) CHECK(d.masses[n] == doctest::Approx(std::pow(2.0, n + 1)));
  CHECK(kind_of([&] { dynamical_degree_estimate(f, 1, 6, 100, 7, w, 1000); }) == ErrorKind::TreeBudgetExceeded);
}

TEST_CASE("lower degrees against the forward oracle") {
  // Hand values: skew map d_0 = 1/4, d_1 = 1; swap map d_0 = 1, d_1 = sqrt 2.
  const PolyLikeMap f = skew();
  const ConvexDomain wf = default_degree_window(f, sample_equilibrium_pl(f, 300, 40, 6));
  const auto m0 = forward_masses(f, wf, 0, 3, 400000);
  CHECK(m0[2] / m0[1] == doctest::Approx(0.25).epsilon(0.3));
  CHECK(m0[3] / m0[2] == doctest::Approx(0.25).epsilon(0.4));
  const DegreeEstimate b0 = dynamical_degree_estimate(f, 0, 5, 200, 8, wf);
  CHECK(b0.estimate < 0.5);
  const DegreeEstimate b1 = dynamical_degree_estimate(f, 1, 5, 200, 8, wf);
  CHECK(b1.estimate < 1.5);

  const PolyLikeMap g = swap();
  const ConvexDomain wg = default_degree_window(g, sample_equilibrium_pl(g, 300, 40, 6));
  const auto g1 = forward_masses(g, wg, 1, 4, 400000);
  CHECK(std::sqrt(g1[4] / g1[2]) == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
}

TEST_CASE("transfer operator convergence") {
  const PolyLikeMap f = skew();
  const PlPfRate c = pf_rate_pl(f, AffineLog{2.0, {0.0, 0.0}}, 4, 4, 9);
  for (double d : c.deviation) CHECK(d < 1e-12);
  const PlPfRate r = pf_rate_pl(f, AffineLog{-3.0, {0.0, 1.0}}, 6, 8, 4);
  CHECK(r.monotone);
  CHECK(r.lambda < 0.8);
  CHECK(kind_of([&] { pf_rate_pl(f, AffineLog{0.0, {0.0, 1.0}}, 3, 2, 9); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("periodic points count d_t^n") {
  for (const PolyLikeMap& f : {skew(), swap()}) {
    const auto p1 = pl_periodic_points(f, 1, 5);
    const auto p2 = pl_periodic_points(f, 2, 5);
    CHECK(p1.size() == 2);
    CHECK(p2.size() == 4);
    for (const auto& z : p2) {
      const HVec y = f.eval(f.eval(z));
      CHECK(std::abs(y[0] - z[0]) + std::abs(y[1] - z[1]) < 1e-9);
    }
  }
}

TEST_CASE("ini round trip") {
  const PolyLikeMap f = make_polylike(
      {mono(1, 0, 2.0) + mono(0, 2, Complex(1e-3, 2e-3)), mono(0, 2, 1.0)}, box2(), 1);
  const std::string text = to_polylike_text(f);
  const IniDocument doc = parse_ini(text, "roundtrip");
  REQUIRE(doc.section("polylike") != nullptr);
  const PolyLikeMap g = polylike_from_section(*doc.section("polylike"), "roundtrip", 1);
  CHECK(g.hash() == f.hash());
  CHECK(g.topological_degree() == 2);
  const IniDocument bad = parse_ini("[polylike]\nk = 2\ndomain = box\n", "bad");
  CHECK(kind_of([&] { polylike_from_section(*bad.section("polylike"), "bad", 1); }) == ErrorKind::ConfigError);
}
