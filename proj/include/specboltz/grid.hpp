#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "vec3.hpp"

namespace specboltz {

using MultiIndex = std::array<int, 3>;

/// Uniform velocity / Fourier mesh on the cube [-L, L]^3.
///
/// Per axis there are N velocity nodes v_j = -L + j*dv (j = 0..N-1, dv = 2L/N)
/// and N frequency nodes zeta_k = k*dzeta (k = -N/2..N/2-1, dzeta = pi/L).
///
/// Both meshes share one lexicographic ordering: the linear index of the
/// multi-index (i0, i1, i2), each in [0, N), is (i0*N + i1)*N + i2, with i0
/// the x axis. For frequencies the multi-index is the wavenumber shifted by
/// N/2, so linear index 0 is k = (-N/2, -N/2, -N/2). The weight cache file
/// stores its tensor in this order.
class VelocityGrid {
 public:
  static constexpr int dim = 3;

  VelocityGrid(int n, double half_width) : n_(n), half_width_(half_width) {
    if (n < 4 || n % 2 != 0)
      throw InvalidArgument("grid: N must be an even integer >= 4, got " + std::to_string(n));
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw InvalidArgument("grid: L must be positive and finite");
    dv_ = 2.0 * half_width_ / n_;
    dzeta_ = std::numbers::pi / half_width_;
    axis_weights_.assign(n_, dv_);
    axis_weights_.front() = axis_weights_.back() = 0.5 * dv_;
    weights_.resize(size());
    for (std::size_t idx = 0; idx < size(); ++idx) {
      const auto m = multi_index(idx);
      weights_[idx] = axis_weights_[m[0]] * axis_weights_[m[1]] * axis_weights_[m[2]];
    }
  }

  int n() const { return n_; }
  double half_width() const { return half_width_; }
  double dv() const { return dv_; }
  double dzeta() const { return dzeta_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }

  /// 1-D velocity coordinate of node j.
  double node(int j) const { return -half_width_ + j * dv_; }
  /// Wavenumber of 1-D frequency index i.
  int wavenumber(int i) const { return i - n_ / 2; }

  std::size_t index_of(const MultiIndex& m) const {
    return (static_cast<std::size_t>(m[0]) * n_ + m[1]) * n_ + m[2];
  }
  MultiIndex multi_index(std::size_t idx) const {
    const int i2 = static_cast<int>(idx % n_);
    idx /= n_;
    const int i1 = static_cast<int>(idx % n_);
    return {static_cast<int>(idx / n_), i1, i2};
  }
  void check_index(std::size_t idx) const {
    if (idx >= size()) throw InvalidArgument("grid: linear index out of range");
  }

  Vec3 velocity(std::size_t idx) const {
    const auto m = multi_index(idx);
    return {node(m[0]), node(m[1]), node(m[2])};
  }

  MultiIndex wavenumbers(std::size_t idx) const {
    auto m = multi_index(idx);
    for (auto& c : m) c -= n_ / 2;
    return m;
  }
  std::size_t index_of_wavenumbers(const MultiIndex& k) const {
    for (int c : k)
      if (c < -n_ / 2 || c >= n_ / 2) throw InvalidArgument("grid: wavenumber out of range");
    return index_of({k[0] + n_ / 2, k[1] + n_ / 2, k[2] + n_ / 2});
  }
  Vec3 frequency(std::size_t idx) const {
    const auto k = wavenumbers(idx);
    return {k[0] * dzeta_, k[1] * dzeta_, k[2] * dzeta_};
  }

  /// Trapezoid weight of 1-D node j (dv inside, dv/2 at both ends).
  double axis_weight(int j) const { return axis_weights_[j]; }
  /// Tensor-product trapezoid weights, one per node in lexicographic order.
  std::span<const double> quad_weights() const { return weights_; }

  friend bool operator==(const VelocityGrid& a, const VelocityGrid& b) {
    return a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  int n_;
  double half_width_;
  double dv_ = 0.0;
  double dzeta_ = 0.0;
  std::vector<double> axis_weights_;
  std::vector<double> weights_;
};

inline VelocityGrid build_grid(int n, double half_width) { return VelocityGrid(n, half_width); }

inline std::vector<double> trapezoid_weights(const VelocityGrid& grid) {
  const auto w = grid.quad_weights();
  return {w.begin(), w.end()};
}

/// Frequency vector of a linear index; throws on out-of-range indices.
inline Vec3 frequency_of_index(const VelocityGrid& grid, std::size_t idx) {
  grid.check_index(idx);
  return grid.frequency(idx);
}

/// Inverse of frequency_of_index for vectors lying on the frequency mesh.
inline std::size_t index_of_frequency(const VelocityGrid& grid, const Vec3& zeta) {
  MultiIndex k{};
  for (int a = 0; a < 3; ++a) {
    const double q = zeta[a] / grid.dzeta();
    k[a] = static_cast<int>(std::lround(q));
    if (std::abs(q - k[a]) > 1e-9) throw InvalidArgument("grid: vector is not on the frequency mesh");
  }
  return grid.index_of_wavenumbers(k);
}

}  // namespace specboltz
