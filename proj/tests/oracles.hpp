#pragma once

// Independent reference computations used by the tests.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "pluridyn/core.hpp"
#include "pluridyn/endomorphism.hpp"
#include "pluridyn/rng.hpp"

namespace oracle {

using pluridyn::Complex;

struct WeightedPoint {
  Complex z;
  double w;
};

// Upper bound on the Wasserstein-1 distance between two weighted clouds in
// C via a dyadic quadtree over the square [-half, half]^2.
inline double w1_quadtree(const std::vector<WeightedPoint>& a, const std::vector<WeightedPoint>& b, double half,
                          int levels = 14) {
  double bound = 0.0;
  for (int l = 1; l <= levels; ++l) {
    const double side = 2.0 * half / (1 << l);
    const double parent_diam = std::sqrt(2.0) * 2.0 * side;
    std::map<std::pair<long, long>, double> diff;
    auto cell = [&](Complex z) {
      return std::make_pair(static_cast<long>(std::floor((z.real() + half) / side)),
                            static_cast<long>(std::floor((z.imag() + half) / side)));
    };
    for (const auto& p : a) diff[cell(p.z)] += p.w;
    for (const auto& p : b) diff[cell(p.z)] -= p.w;
    double s = 0.0;
    for (const auto& [c, v] : diff) s += std::abs(v);
    bound += 0.5 * parent_diam * s;
  }
  return bound + std::sqrt(2.0) * 2.0 * half / (1 << levels);
}

inline std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order) {
  std::uint64_t d = 0;
  for (std::uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
    const std::uint32_t rx = (x & s) ? 1 : 0;
    const std::uint32_t ry = (y & s) ? 1 : 0;
    d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

// Cost of the quantile coupling along a Hilbert curve ordering. Any coupling
// bounds W1 from above, and this one keeps matched points close.
inline double w1_hilbert(std::vector<WeightedPoint> a, std::vector<WeightedPoint> b, double half) {
  const int order = 16;
  auto key = [&](Complex z) {
    const double n = static_cast<double>((1u << order) - 1);
    const auto gx = static_cast<std::uint32_t>(std::clamp((z.real() + half) / (2 * half), 0.0, 1.0) * n);
    const auto gy = static_cast<std::uint32_t>(std::clamp((z.imag() + half) / (2 * half), 0.0, 1.0) * n);
    return hilbert_index(gx, gy, order);
  };
  auto by_key = [&](const WeightedPoint& p, const WeightedPoint& q) { return key(p.z) < key(q.z); };
  std::sort(a.begin(), a.end(), by_key);
  std::sort(b.begin(), b.end(), by_key);
  double sa = 0.0, sb = 0.0;
  for (const auto& p : a) sa += p.w;
  for (const auto& p : b) sb += p.w;
  std::size_t i = 0, j = 0;
  double ra = a.empty() ? 0.0 : a[0].w / sa, rb = b.empty() ? 0.0 : b[0].w / sb, cost = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    cost += m * std::abs(a[i].z - b[j].z);
    ra -= m;
    rb -= m;
    if (ra <= 1e-15) {
      if (++i < a.size()) ra = a[i].w / sa;
    }
    if (rb <= 1e-15) {
      if (++j < b.size()) rb = b[j].w / sb;
    }
  }
  return cost;
}

inline double w1_upper(const std::vector<WeightedPoint>& a, const std::vector<WeightedPoint>& b, double half) {
  return std::min(w1_quadtree(a, b, half), w1_hilbert(a, b, half));
}

// Dense random homogeneous map of degree d on P^k with Gaussian coefficients.
inline pluridyn::HomEndo random_map(int k, int d, pluridyn::Rng& rng) {
  std::vector<pluridyn::Polynomial> comps;
  for (int i = 0; i <= k; ++i) {
    pluridyn::Polynomial p(k + 1);
    pluridyn::Exponent e{};
    // Enumerate exponent vectors summing to d.
    std::vector<pluridyn::Exponent> all;
    auto rec = [&](auto&& self, int idx, int left) -> void {
      if (idx == k) {
        e[static_cast<std::size_t>(idx)] = left;
        all.push_back(e);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        e[static_cast<std::size_t>(idx)] = v;
        self(self, idx + 1, left - v);
      }
    };
    rec(rec, 0, d);
    for (const auto& ex : all) p.add_term(ex, rng.complex_normal());
    comps.push_back(p);
  }
  return pluridyn::HomEndo(comps);
}

}  // namespace oracle
