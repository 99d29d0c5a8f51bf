#include "pluridyn/projective.hpp"

#include <string>

#include "pluridyn/errors.hpp"

namespace pluridyn {

namespace {
// Coordinates below this fraction of the norm are not used as the phase pivot.
constexpr double kPivotRelative = 1e-12;
}  // namespace

ProjPoint ProjPoint::from_raw(const HVec& raw) {
  if (raw.size() < 2) fail(ErrorKind::InvalidArgument, "projective point needs at least 2 coordinates");
  const double m = raw.max_abs();
  if (!(m >= 1e-300)) fail(ErrorKind::AllZero, "every homogeneous coordinate vanishes");
  // Scale by the max first so the norm cannot overflow or underflow.
  HVec v = raw;
  v *= Complex(1.0 / m, 0.0);
  const double n = v.norm();
  int pivot = 0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > kPivotRelative * n) {
      pivot = i;
      break;
    }
  }
  const Complex phase = std::conj(v[pivot]) / std::abs(v[pivot]);
  v *= phase / n;
  v[pivot] = Complex(std::abs(v[pivot]), 0.0);
  ProjPoint p;
  p.coords_ = v;
  return p;
}

ProjPoint normalize(const HVec& raw) { return ProjPoint::from_raw(raw); }

double fs_distance_unit(const HVec& p, const HVec& q) {
  const Complex ip = hdot(q, p);
  // p minus its projection on q; its norm is sin of the angle.
  HVec perp = p;
  for (int i = 0; i < p.size(); ++i) perp[i] -= ip * q[i];
  return std::atan2(perp.norm(), std::abs(ip));
}

double fs_distance(const ProjPoint& p, const ProjPoint& q) { return fs_distance_unit(p.coords(), q.coords()); }

void ChartWindow::validate() const {
  require(chart_index >= 0 && chart_index <= center.size(), "chart_index out of range");
  require(static_cast<int>(half_widths.size()) == center.size(), "half_widths must have one entry per chart axis");
  for (double h : half_widths) require(h > 0.0, "half_widths must be strictly positive");
}

HVec chart_map(const ProjPoint& p, int chart_index) {
  const HVec& z = p.coords();
  require(chart_index >= 0 && chart_index < z.size(), "chart index out of range");
  const Complex zi = z[chart_index];
  if (std::abs(zi) <= kChartInfinity) {
    fail(ErrorKind::AtInfinity, "point lies at infinity of chart " + std::to_string(chart_index));
  }
  HVec w(z.size() - 1);
  int m = 0;
  for (int j = 0; j < z.size(); ++j) {
    if (j == chart_index) continue;
    w[m++] = z[j] / zi;
  }
  return w;
}

HVec chart_map(const ProjPoint& p, const ChartWindow& w) { return chart_map(p, w.chart_index); }

HVec chart_lift(const HVec& w, int chart_index) {
  HVec z(w.size() + 1);
  int m = 0;
  for (int j = 0; j < z.size(); ++j) z[j] = (j == chart_index) ? Complex(1.0, 0.0) : w[m++];
  return z;
}

ProjPoint chart_inverse(const HVec& w, int chart_index) {
  require(chart_index >= 0 && chart_index <= w.size(), "chart index out of range");
  return normalize(chart_lift(w, chart_index));
}

ProjPoint chart_inverse(const HVec& w, const ChartWindow& window) { return chart_inverse(w, window.chart_index); }

ProjPoint random_fs_point(int k, Rng& rng) {
  require(k >= 1 && k + 1 <= kMaxCoords, "dimension k out of supported range");
  HVec z(k + 1);
  for (int i = 0; i <= k; ++i) z[i] = rng.complex_normal();
  return normalize(z);
}

ProjPoint random_fs_point(int k, std::uint64_t seed) {
  Rng rng(seed);
  return random_fs_point(k, rng);
}

CMat tangent_frame(const HVec& z) {
  const int n = z.size();
  // Householder reflection H with H z = alpha e_j; the columns of H other
  // than j span z-perp and are orthonormal.
  const int j = z.argmax_abs();
  const Complex zj = z[j];
  const Complex alpha = -std::polar(1.0, std::arg(zj)) * z.norm();
  CVecX u = z.to_eigen();
  u(j) -= alpha;
  const double un2 = u.squaredNorm();
  CMat h = CMat::Identity(n, n);
  if (un2 > 0.0) h -= (2.0 / un2) * u * u.adjoint();
  CMat frame(n, n - 1);
  int c = 0;
  for (int col = 0; col < n; ++col) {
    if (col == j) continue;
    frame.col(c++) = h.col(col);
  }
  return frame;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AllZero: return "AllZero";
    case ErrorKind::AtInfinity: return "AtInfinity";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::ChartFailure: return "ChartFailure";
    case ErrorKind::IncompleteFiber: return "IncompleteFiber";
    case ErrorKind::BranchCollision: return "BranchCollision";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::SingularCocycle: return "SingularCocycle";
    case ErrorKind::IncompleteEnumeration: return "IncompleteEnumeration";
    case ErrorKind::NotProper: return "NotProper";
    case ErrorKind::DegreeAmbiguous: return "DegreeAmbiguous";
    case ErrorKind::DegreeTooLow: return "DegreeTooLow";
    case ErrorKind::TreeBudgetExceeded: return "TreeBudgetExceeded";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::HeaderMismatch: return "HeaderMismatch";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace pluridyn
