#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "vec3.hpp"

namespace specboltz {

/// Trilinear interpolation of grid values, zero outside the node box.
class TrilinearField {
 public:
  TrilinearField(const VelocityGrid& grid, std::span<const double> values)
      : grid_(grid), values_(values.begin(), values.end()) {
    if (values_.size() != grid_.size()) throw InvalidArgument("TrilinearField: size does not match the grid");
  }

  double operator()(const Vec3& v) const {
    const int n = grid_.n();
    int base[3];
    double t[3];
    for (int a = 0; a < 3; ++a) {
      const double s = (v[a] + grid_.half_width()) / grid_.dv();
      if (!(s >= 0.0) || s > n - 1) return 0.0;
      int i = static_cast<int>(std::floor(s));
      if (i >= n - 1) i = n - 2;
      base[a] = i;
      t[a] = s - i;
    }
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      double wgt = 1.0;
      MultiIndex m{};
      for (int a = 0; a < 3; ++a) {
        const int bit = (c >> a) & 1;
        m[a] = base[a] + bit;
        wgt *= bit ? t[a] : 1.0 - t[a];
      }
      if (wgt != 0.0) acc += wgt * values_[grid_.index_of(m)];
    }
    return acc;
  }

 private:
  VelocityGrid grid_;
  std::vector<double> values_;
};

struct OracleOptions {
  int v_panels = 4;      ///< composite Gauss-Legendre panels per axis for v*
  int v_order = 6;       ///< points per panel
  int theta_order = 16;  ///< Gauss-Legendre points per angular panel
  int psi_order = 16;    ///< trapezoid points in the azimuth about u
  int threads = 0;
};

/// Reference collision operator by direct quadrature of
///   Q(v) = int dv* int dsigma |u|^lambda b(sigma.u/|u|) [f(v') f(v*') - f(v) f(v*)]
/// with v* over the cube [-L, L]^3 and sigma on a u-aligned sphere rule.
/// Test-only: cost grows like N^3 * (panels*order)^3 * theta_order * psi_order.
template <class Field>
  requires std::is_invocable_r_v<double, const Field&, const Vec3&>
std::vector<double> direct_collision_oracle(const Field& f, const KernelSpec& kernel, const VelocityGrid& grid,
                                            const OracleOptions& opt = {}) {
  kernel.validate();
  if (const auto* g = std::get_if<GrazingRutherford>(&kernel.angular); g && g->eps < 1e-2)
    throw InvalidArgument("direct_collision_oracle: grazing sections with eps < 1e-2 are not resolved by this rule");
  if (opt.v_panels < 1 || opt.v_order < 1 || opt.theta_order < 1 || opt.psi_order < 1)
    throw InvalidArgument("direct_collision_oracle: quadrature orders must be positive");

  constexpr double pi = std::numbers::pi;
  std::vector<double> gx, gw;
  quad::gauss_legendre(opt.v_order, gx, gw);

  // v* nodes per axis on [-L, L].
  std::vector<double> ax, aw;
  const double L = grid.half_width(), ph = 2.0 * L / opt.v_panels;
  for (int p = 0; p < opt.v_panels; ++p) {
    const double c = -L + (p + 0.5) * ph;
    for (int q = 0; q < opt.v_order; ++q) {
      ax.push_back(c + 0.5 * ph * gx[q]);
      aw.push_back(0.5 * ph * gw[q]);
    }
  }
  struct Star {
    Vec3 v;
    double w, f;
  };
  std::vector<Star> stars;
  for (std::size_t i = 0; i < ax.size(); ++i)
    for (std::size_t j = 0; j < ax.size(); ++j)
      for (std::size_t k = 0; k < ax.size(); ++k) {
        const Vec3 v{ax[i], ax[j], ax[k]};
        stars.push_back({v, aw[i] * aw[j] * aw[k], f(v)});
      }

  // Scattering angle nodes with b sin(theta) folded into the weights.
  std::vector<double> tx, tw;
  {
    std::vector<double> tg, twg;
    quad::gauss_legendre(opt.theta_order, tg, twg);
    const auto pts = angular_breakpoints(kernel);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double a = pts[i], b = pts[i + 1];
      for (int q = 0; q < opt.theta_order; ++q) {
        const double t = 0.5 * (a + b) + 0.5 * (b - a) * tg[q];
        tx.push_back(t);
        tw.push_back(0.5 * (b - a) * twg[q] * angular_density(kernel, t));
      }
    }
  }
  const double dpsi = 2.0 * pi / opt.psi_order;
  double total_angular = 0.0;
  for (double w : tw) total_angular += w;
  total_angular *= 2.0 * pi;
  std::vector<double> cpsi(opt.psi_order), spsi(opt.psi_order);
  for (int q = 0; q < opt.psi_order; ++q) {
    cpsi[q] = std::cos(q * dpsi);
    spsi[q] = std::sin(q * dpsi);
  }
  std::vector<double> ct(tx.size()), st(tx.size());
  for (std::size_t q = 0; q < tx.size(); ++q) {
    ct[q] = std::cos(tx[q]);
    st[q] = std::sin(tx[q]);
  }

  std::vector<double> out(grid.size(), 0.0);
  parallel_for(grid.size(), opt.threads, [&](std::size_t idx) {
    const Vec3 v = grid.velocity(idx);
    const double fv = f(v);
    double gain = 0.0, loss = 0.0;
    for (const auto& s : stars) {
      const Vec3 u = v - s.v;
      const double un = norm(u);
      if (un == 0.0) continue;
      const double rate = std::pow(un, kernel.lambda) * s.w;
      loss += rate * fv * s.f * total_angular;
      const Vec3 uh = (1.0 / un) * u;
      // Orthonormal frame (uh, e1, e2).
      const Vec3 helper = std::abs(uh.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
      const Vec3 e1 = (1.0 / norm(cross(uh, helper))) * cross(uh, helper);
      const Vec3 e2 = cross(uh, e1);
      const Vec3 mid = 0.5 * (v + s.v);
      double g = 0.0;
      for (std::size_t q = 0; q < tx.size(); ++q) {
        double ring = 0.0;
        for (int p = 0; p < opt.psi_order; ++p) {
          const Vec3 sigma = ct[q] * uh + st[q] * (cpsi[p] * e1 + spsi[p] * e2);
          const Vec3 half = (0.5 * un) * sigma;
          ring += f(mid + half) * f(mid - half);
        }
        g += tw[q] * ring;
      }
      gain += rate * g * dpsi;
    }
    out[idx] = gain - loss;
  });
  return out;
}

/// Oracle on grid data: f is the trilinear interpolant of the node values.
inline std::vector<double> direct_collision_oracle(std::span<const double> values, const KernelSpec& kernel,
                                                   const VelocityGrid& grid, const OracleOptions& opt = {}) {
  return direct_collision_oracle(TrilinearField(grid, values), kernel, grid, opt);
}

}  // namespace specboltz
