#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace specboltz {

/// Transform convention shared by every spectral object in the library:
///
///   fhat(zeta_k) = (2 pi)^{-3/2} sum_j w_j f(v_j) exp(-i zeta_k . v_j)
///
/// with w_j the trapezoid weights of the grid. On the grid v_j = -L + j dv,
/// zeta_k = k pi / L this equals (-1)^{k} times a standard DFT of
/// (-1)^{j} w_j f_j (per axis), which is how it is evaluated. The sum is a
/// quadrature of the continuous transform; nothing is periodized.
inline constexpr double transform_scale = 0.0634936359342409697857633503173562;  // (2 pi)^{-3/2}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// (-1)^{i0 + i1 + i2} for the linear index of an N^3 tensor with even N.
inline double checker_sign(const VelocityGrid& grid, std::size_t idx) {
  const auto m = grid.multi_index(idx);
  return ((m[0] + m[1] + m[2]) & 1) ? -1.0 : 1.0;
}

}  // namespace detail

/// Owns a pair of FFTW plans (forward / backward) on a private buffer. Plans
/// are created with FFTW_ESTIMATE so the arithmetic is identical from run to
/// run. Not shareable across threads; create one per thread.
class Fft3 {
 public:
  explicit Fft3(int n) : n_(n) {
    if (n < 1) throw InvalidArgument("Fft3: size must be positive");
    const std::size_t m = static_cast<std::size_t>(n) * n * n;
    buf_ = fftw_alloc_complex(m);
    if (!buf_) throw Error("Fft3: allocation failed");
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_3d(n, n, n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_3d(n, n, n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) {
      release();
      throw Error("Fft3: plan creation failed");
    }
  }
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;
  ~Fft3() { release(); }

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }
  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_); }

  /// In place on data(): X_i = sum_j x_j exp(-2 pi i i.j / N).
  void forward() { fftw_execute(fwd_); }
  /// In place on data(): x_j = sum_i X_i exp(+2 pi i i.j / N) (unnormalized).
  void backward() { fftw_execute(bwd_); }

 private:
  void release() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
    if (buf_) fftw_free(buf_);
    fwd_ = bwd_ = nullptr;
    buf_ = nullptr;
  }

  int n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Forward and inverse transforms on one grid.
class Transformer {
 public:
  explicit Transformer(const VelocityGrid& grid) : grid_(grid), fft_(grid.n()), sign_(grid.size()) {
    for (std::size_t i = 0; i < grid.size(); ++i) sign_[i] = detail::checker_sign(grid, i);
    // (-1)^{k} with k = i - N/2 differs from (-1)^{i} by (-1)^{3N/2}.
    offset_sign_ = (grid.n() / 2) % 2 ? -1.0 : 1.0;
  }

  const VelocityGrid& grid() const { return grid_; }

  std::vector<std::complex<double>> forward(std::span<const double> f) {
    check(f.size());
    const auto w = grid_.quad_weights();
    auto* x = fft_.data();
    for (std::size_t j = 0; j < f.size(); ++j) x[j] = sign_[j] * w[j] * f[j];
    fft_.forward();
    std::vector<std::complex<double>> out(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = (offset_sign_ * sign_[k] * transform_scale) * x[k];
    return out;
  }

  /// Exact inverse of forward on the discrete data. The imaginary part of the
  /// result is dropped; its max-norm is returned through `imag_residue`.
  std::vector<double> inverse(std::span<const std::complex<double>> fhat, double* imag_residue = nullptr) {
    check(fhat.size());
    const auto w = grid_.quad_weights();
    auto* x = fft_.data();
    for (std::size_t k = 0; k < fhat.size(); ++k) x[k] = offset_sign_ * sign_[k] * fhat[k];
    fft_.backward();
    const double norm = 1.0 / (transform_scale * static_cast<double>(fhat.size()));
    std::vector<double> out(fhat.size());
    double res = 0.0;
    for (std::size_t j = 0; j < fhat.size(); ++j) {
      const std::complex<double> v = x[j] * (sign_[j] * norm / w[j]);
      out[j] = v.real();
      res = std::max(res, std::abs(v.imag()));
    }
    if (imag_residue) *imag_residue = res;
    return out;
  }

 private:
  void check(std::size_t n) const {
    if (n != grid_.size()) throw InvalidArgument("transform: array size does not match the grid");
  }

  VelocityGrid grid_;
  Fft3 fft_;
  std::vector<double> sign_;
  double offset_sign_ = 1.0;
};

inline std::vector<std::complex<double>> forward_transform(std::span<const double> f, const VelocityGrid& grid) {
  for (double v : f)
    if (!std::isfinite(v)) throw InvalidArgument("forward_transform: non-finite value");
  return Transformer(grid).forward(f);
}

/// Inverse transform; throws NumericalError when the imaginary residue exceeds
/// rel_residue * max|real part| (a sign that the input was not the transform
/// of a real function).
inline std::vector<double> inverse_transform(std::span<const std::complex<double>> fhat, const VelocityGrid& grid,
                                             double rel_residue = 1e-8, double* imag_residue = nullptr) {
  for (const auto& z : fhat)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw InvalidArgument("inverse_transform: non-finite value");
  double res = 0.0;
  auto out = Transformer(grid).inverse(fhat, &res);
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (imag_residue) *imag_residue = res;
  if (res > rel_residue * peak && res > 0.0)
    throw NumericalError("inverse_transform: imaginary residue " + std::to_string(res) + " relative to peak " +
                         std::to_string(peak));
  return out;
}

/// Distribution values with a lazily refreshed transform.
class SpectralState {
 public:
  explicit SpectralState(const VelocityGrid& grid) : grid_(grid), f_(grid.size(), 0.0) {}
  SpectralState(const VelocityGrid& grid, std::vector<double> f) : grid_(grid), f_(std::move(f)) {
    if (f_.size() != grid_.size()) throw InvalidArgument("SpectralState: size does not match the grid");
  }

  const VelocityGrid& grid() const { return grid_; }
  std::span<const double> values() const { return f_; }
  /// Mutable access marks the transform stale.
  std::span<double> mutable_values() {
    dirty_ = true;
    return f_;
  }
  void assign(std::vector<double> f) {
    if (f.size() != grid_.size()) throw InvalidArgument("SpectralState: size does not match the grid");
    f_ = std::move(f);
    dirty_ = true;
  }
  bool dirty() const { return dirty_; }

  const std::vector<std::complex<double>>& fhat(Transformer& t) {
    if (dirty_) {
      fhat_ = t.forward(f_);
      dirty_ = false;
    }
    return fhat_;
  }

 private:
  VelocityGrid grid_;
  std::vector<double> f_;
  std::vector<std::complex<double>> fhat_;
  bool dirty_ = true;
};

}  // namespace specboltz
