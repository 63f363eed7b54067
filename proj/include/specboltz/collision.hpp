#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "transform.hpp"
#include "weights.hpp"

namespace specboltz {

/// Trapezoid weights of the frequency mesh used by the convolution.
///
/// The mesh k = -N/2..N/2-1 is not symmetric; the unpaired Nyquist plane
/// k = -N/2 gets weight 0 so that the sum runs over the symmetric range
/// |k| <= N/2 - 1, whose end points are halved. On this range the convolution
/// of conjugate-symmetric data is conjugate-symmetric, so the collision output
/// transforms back to a real function.
inline std::vector<double> frequency_weights(const VelocityGrid& grid) {
  const int n = grid.n(), h = n / 2 - 1;
  std::vector<double> axis(n);
  for (int i = 0; i < n; ++i) {
    const int k = grid.wavenumber(i);
    axis[i] = (k < -h) ? 0.0 : (std::abs(k) == h ? 0.5 : 1.0) * grid.dzeta();
  }
  std::vector<double> w(grid.size());
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    const auto m = grid.multi_index(idx);
    w[idx] = axis[m[0]] * axis[m[1]] * axis[m[2]];
  }
  return w;
}

inline void check_table(const WeightTable& table, const VelocityGrid& grid) {
  if (table.meta.n != grid.n() || table.meta.half_width != grid.half_width() ||
      table.values.size() != grid.size() * grid.size())
    throw MetadataMismatch("weight table was built for N=" + std::to_string(table.meta.n) +
                           ", L=" + std::to_string(table.meta.half_width) + ", grid has N=" +
                           std::to_string(grid.n()) + ", L=" + std::to_string(grid.half_width()));
}

/// Qhat(zeta_k) = sum_m Ĝ(zeta_k, xi_m) fhat(xi_m) fhat(zeta_k - xi_m) w_m, with
/// fhat(zeta_k - xi_m) = 0 whenever the shifted frequency leaves the mesh
/// (no wrap-around). Cost O(N^6).
inline std::vector<std::complex<double>> collide(std::span<const std::complex<double>> fhat, const WeightTable& table,
                                                 const VelocityGrid& grid, int threads = 1) {
  check_table(table, grid);
  if (fhat.size() != grid.size()) throw InvalidArgument("collide: fhat size does not match the grid");
  const int n = grid.n(), half = n / 2, h = half - 1;
  const std::size_t m = grid.size();
  const auto w = frequency_weights(grid);

  // Split storage for the hot loop; a = w * fhat.
  std::vector<double> fr(m), fi(m), ar(m), ai(m);
  for (std::size_t i = 0; i < m; ++i) {
    fr[i] = fhat[i].real();
    fi[i] = fhat[i].imag();
    ar[i] = w[i] * fr[i];
    ai[i] = w[i] * fi[i];
  }

  std::vector<std::complex<double>> out(m);
  parallel_for(m, threads, [&](std::size_t zk) {
    const auto k = grid.wavenumbers(zk);
    if (k[0] < -h || k[1] < -h || k[2] < -h) return;  // Nyquist planes stay zero
    const auto row = table.row(zk);
    MultiIndex lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(-h, k[a] - h);
      hi[a] = std::min(h, k[a] + h);
    }
    double sr = 0.0, si = 0.0;
    for (int m0 = lo[0]; m0 <= hi[0]; ++m0) {
      for (int m1 = lo[1]; m1 <= hi[1]; ++m1) {
        const std::size_t base = (static_cast<std::size_t>(m0 + half) * n + (m1 + half)) * n + half;
        const std::size_t sbase =
            (static_cast<std::size_t>(k[0] - m0 + half) * n + (k[1] - m1 + half)) * n + (k[2] + half);
        for (int m2 = lo[2]; m2 <= hi[2]; ++m2) {
          const std::size_t i = base + m2;
          const std::size_t s = sbase - m2;
          const double g = row[i];
          const double pr = ar[i] * fr[s] - ai[i] * fi[s];
          const double pi = ar[i] * fi[s] + ai[i] * fr[s];
          sr += g * pr;
          si += g * pi;
        }
      }
    }
    out[zk] = {sr, si};
  });
  return out;
}

/// Result of one evaluation of the discrete collision operator in velocity space.
struct CollisionResult {
  std::vector<double> q;             ///< Q̃ on the grid nodes (before any projection)
  double imag_residue = 0.0;         ///< max |Im| of the inverse transform
  double relative_imag_residue = 0.0;
  double mass_residue = 0.0;         ///< sum_j w_j Q̃_j
  std::complex<double> qhat_zero;    ///< Qhat(zeta = 0)
};

/// Transform, weighted convolution, inverse transform.
class CollisionOperator {
 public:
  CollisionOperator(const VelocityGrid& grid, const WeightTable& table, int threads = 1)
      : grid_(grid), table_(&table), transformer_(grid), threads_(threads) {
    check_table(table, grid);
  }

  const VelocityGrid& grid() const { return grid_; }
  const WeightTable& table() const { return *table_; }
  Transformer& transformer() { return transformer_; }

  /// Q̃(f); throws NumericalError if the inverse transform is not real to
  /// rel_residue relative to max |Q̃|.
  CollisionResult evaluate(std::span<const double> f, double rel_residue = 1e-8) {
    const auto fhat = transformer_.forward(f);
    const auto qhat = collide(fhat, *table_, grid_, threads_);
    CollisionResult r;
    r.qhat_zero = qhat[grid_.index_of_wavenumbers({0, 0, 0})];
    r.q = transformer_.inverse(qhat, &r.imag_residue);
    double peak = 0.0;
    for (double v : r.q) peak = std::max(peak, std::abs(v));
    r.relative_imag_residue = peak > 0.0 ? r.imag_residue / peak : r.imag_residue;
    if (r.imag_residue > rel_residue * peak && r.imag_residue > 0.0)
      throw NumericalError("collision: inverse transform not real, residue " + std::to_string(r.imag_residue) +
                           " vs peak " + std::to_string(peak));
    const auto w = grid_.quad_weights();
    for (std::size_t j = 0; j < r.q.size(); ++j) r.mass_residue += w[j] * r.q[j];
    return r;
  }

 private:
  VelocityGrid grid_;
  const WeightTable* table_;
  Transformer transformer_;
  int threads_;
};

}  // namespace specboltz
