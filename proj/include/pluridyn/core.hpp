#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>

#include <Eigen/Dense>

namespace pluridyn {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVecX = Eigen::VectorXcd;

/// Largest supported number of homogeneous coordinates (P^k with k <= 3).
inline constexpr int kMaxCoords = 4;

/// Small fixed-capacity complex vector used for homogeneous tuples and
/// affine chart coordinates. Lives on the stack; hot loops never allocate.
class HVec {
 public:
  HVec() = default;
  explicit HVec(int n) : n_(n) { assert(n >= 0 && n <= kMaxCoords); }
  HVec(std::initializer_list<Complex> values) : n_(static_cast<int>(values.size())) {
    assert(n_ <= kMaxCoords);
    std::copy(values.begin(), values.end(), data_.begin());
  }
  explicit HVec(std::span<const Complex> values) : n_(static_cast<int>(values.size())) {
    assert(n_ <= kMaxCoords);
    std::copy(values.begin(), values.end(), data_.begin());
  }

  int size() const { return n_; }
  Complex& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  const Complex& operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
  Complex* begin() { return data_.data(); }
  Complex* end() { return data_.data() + n_; }
  const Complex* begin() const { return data_.data(); }
  const Complex* end() const { return data_.data() + n_; }
  std::span<const Complex> span() const { return {data_.data(), static_cast<std::size_t>(n_)}; }
  std::span<Complex> span() { return {data_.data(), static_cast<std::size_t>(n_)}; }

  double norm2() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += std::norm(data_[static_cast<std::size_t>(i)]);
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }
  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(data_[static_cast<std::size_t>(i)]));
    return m;
  }
  int argmax_abs() const {
    int best = 0;
    double m = -1.0;
    for (int i = 0; i < n_; ++i) {
      const double a = std::abs(data_[static_cast<std::size_t>(i)]);
      if (a > m) {
        m = a;
        best = i;
      }
    }
    return best;
  }

  HVec& operator*=(Complex s) {
    for (int i = 0; i < n_; ++i) data_[static_cast<std::size_t>(i)] *= s;
    return *this;
  }
  HVec& operator+=(const HVec& o) {
    assert(o.n_ == n_);
    for (int i = 0; i < n_; ++i) data_[static_cast<std::size_t>(i)] += o[i];
    return *this;
  }
  HVec& operator-=(const HVec& o) {
    assert(o.n_ == n_);
    for (int i = 0; i < n_; ++i) data_[static_cast<std::size_t>(i)] -= o[i];
    return *this;
  }
  friend HVec operator*(Complex s, HVec v) { return v *= s; }
  friend HVec operator+(HVec a, const HVec& b) { return a += b; }
  friend HVec operator-(HVec a, const HVec& b) { return a -= b; }

  CVecX to_eigen() const {
    CVecX v(n_);
    for (int i = 0; i < n_; ++i) v(i) = data_[static_cast<std::size_t>(i)];
    return v;
  }
  static HVec from_eigen(const CVecX& v) {
    HVec h(static_cast<int>(v.size()));
    for (int i = 0; i < h.n_; ++i) h[i] = v(i);
    return h;
  }

 private:
  std::array<Complex, kMaxCoords> data_{};
  int n_ = 0;
};

/// Hermitian inner product, conjugate-linear in the first argument.
inline Complex hdot(const HVec& a, const HVec& b) {
  assert(a.size() == b.size());
  Complex s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace pluridyn
