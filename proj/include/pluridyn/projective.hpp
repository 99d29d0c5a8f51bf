#pragma once

#include <cstdint>
#include <vector>

#include "pluridyn/core.hpp"
#include "pluridyn/rng.hpp"

namespace pluridyn {

/// A point of P^k held by its canonical representative: unit Euclidean norm
/// and the first non-negligible coordinate real and positive. Two ProjPoints
/// describe the same projective point iff their coordinates agree.
class ProjPoint {
 public:
  ProjPoint() = default;

  /// Canonical representative of the class of `raw`. Throws AllZero when
  /// every coordinate has modulus below 1e-300.
  static ProjPoint from_raw(const HVec& raw);

  int dim() const { return coords_.size() - 1; }
  const HVec& coords() const { return coords_; }
  const Complex& operator[](int i) const { return coords_[i]; }

 private:
  HVec coords_;
};

ProjPoint normalize(const HVec& raw);

/// Fubini-Study distance arccos|<p,q>|, computed through atan2 so it stays
/// accurate for nearby points. Range [0, pi/2].
double fs_distance(const ProjPoint& p, const ProjPoint& q);

/// Same distance for unit (not necessarily canonical) representatives.
double fs_distance_unit(const HVec& p, const HVec& q);

/// Affine chart window: chart_index picks the coordinate set to 1; center and
/// half_widths describe a box in the remaining k complex coordinates.
struct ChartWindow {
  int chart_index = 0;
  HVec center;
  std::vector<double> half_widths;

  int dim() const { return center.size(); }
  void validate() const;
};

inline constexpr double kChartInfinity = 1e-12;

/// Affine coordinates z_j / z_i (j != i) in chart i. Throws AtInfinity when
/// |z_i| <= 1e-12 on the canonical representative.
HVec chart_map(const ProjPoint& p, int chart_index);
HVec chart_map(const ProjPoint& p, const ChartWindow& w);

/// Inverse of chart_map: inserts 1 at chart_index and normalizes.
ProjPoint chart_inverse(const HVec& w, int chart_index);
ProjPoint chart_inverse(const HVec& w, const ChartWindow& window);

/// Homogeneous tuple with 1 inserted at chart_index (no normalization).
HVec chart_lift(const HVec& w, int chart_index);

/// FS-volume distributed point: normalized standard complex Gaussian vector.
ProjPoint random_fs_point(int k, Rng& rng);
ProjPoint random_fs_point(int k, std::uint64_t seed);

/// Orthonormal basis (columns) of the orthogonal complement of a unit vector
/// z in C^{k+1}; a deterministic function of z. Used as the unitary frame
/// of the tangent space T_[z]P^k for the Fubini-Study metric.
CMat tangent_frame(const HVec& z);

}  // namespace pluridyn
