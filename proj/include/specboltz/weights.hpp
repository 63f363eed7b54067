#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "special.hpp"
#include "vec3.hpp"

namespace specboltz {

enum class OperatorKind : std::uint32_t { Boltzmann = 0, Landau = 1 };

inline const char* operator_name(OperatorKind op) { return op == OperatorKind::Boltzmann ? "boltzmann" : "landau"; }

using complex = std::complex<double>;

struct ThetaOptions {
  double rel_tol = 1e-8;
  int max_intervals = 400;
};

/// Value and bookkeeping of a scattering-angle integral.
struct ThetaIntegral {
  complex value;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

/// e^{iA} J0(x) - 1 with A = c1 (1 - cos theta) and x = c2 sin theta, written so
/// that no two nearly equal numbers are subtracted as theta -> 0.
inline complex theta_bracket(double c1, double c2, double theta) {
  const double s = std::sin(0.5 * theta);
  const double a = 2.0 * c1 * s * s;
  const double j0m1 = bessel_j0m1(c2 * std::sin(theta));
  const double sh = std::sin(0.5 * a);
  const double ca = std::cos(a);
  return {ca * j0m1 - 2.0 * sh * sh, std::sin(a) * (1.0 + j0m1)};
}

/// Leading small-theta coefficient of theta_bracket / theta^2.
inline complex taylor_coefficient(double c1, double c2) { return {-0.25 * c2 * c2, 0.5 * c1}; }

}  // namespace detail

/// Pieces of the Rutherford scattering-angle integral split at sqrt(eps).
///
/// On [eps, sqrt(eps)] the integrand is replaced by its leading Taylor term,
/// integrated in closed form; the Taylor remainder on that interval is smooth
/// and bounded and is added back by quadrature. [sqrt(eps), pi] is integrated
/// adaptively.
struct RutherfordSplit {
  complex taylor;
  complex remainder;
  complex tail;
  double remainder_error = 0.0;
  double tail_error = 0.0;
  int evaluations = 0;
  bool converged = true;
  complex total() const { return taylor + remainder + tail; }
};

inline RutherfordSplit rutherford_split(double eps, double c1, double c2, const ThetaOptions& opt = {}) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("rutherford_split: need 0 < eps < 1");
  constexpr double pi = std::numbers::pi;
  const double scale = 8.0 * eps / pi;
  const double root = std::sqrt(eps);
  const complex coef = detail::taylor_coefficient(c1, c2);
  RutherfordSplit out;
  out.taylor = scale * (1.0 / eps - 1.0 / root) * coef;

  const double floor = opt.rel_tol * 0.1 * quad::magnitude(out.taylor);
  const quad::Tolerance tol{.abs = floor, .rel = opt.rel_tol, .rel_abs_integrand = 0.1 * opt.rel_tol,
                            .max_intervals = opt.max_intervals};

  const auto remainder = [&](double t) {
    const double t2 = t * t;
    return (detail::theta_bracket(c1, c2, t) - t2 * coef) * (scale / (t2 * t2));
  };
  const auto rem = quad::integrate(remainder, eps, root, tol);

  std::vector<double> pts;
  for (double t = root; t < pi; t *= 4.0) pts.push_back(t);
  pts.push_back(pi);
  const auto tail_f = [&](double t) {
    const double t2 = t * t;
    return detail::theta_bracket(c1, c2, t) * (scale / (t2 * t2));
  };
  const auto tail = quad::integrate(tail_f, std::span<const double>(pts), tol);

  out.remainder = rem.value;
  out.tail = tail.value;
  out.remainder_error = rem.error;
  out.tail_error = tail.error;
  out.evaluations = rem.evaluations + tail.evaluations;
  out.converged = rem.converged && tail.converged;
  return out;
}

/// g(c1, c2) = integral over [0, pi] of b sin(theta) [e^{i c1 (1 - cos theta)} J0(c2 sin theta) - 1].
///
/// G(u, zeta) = 2 pi |u|^lambda g(beta zeta.u / 2, beta |u| |zeta_perp| / 2).
inline ThetaIntegral theta_transform(const KernelSpec& kernel, double c1, double c2, const ThetaOptions& opt = {}) {
  if (c1 == 0.0 && c2 == 0.0) return {};
  if (const auto* g = std::get_if<GrazingRutherford>(&kernel.angular); g && g->eps < 1.0) {
    const auto split = rutherford_split(g->eps, c1, c2, opt);
    return {split.total(), split.remainder_error + split.tail_error, split.evaluations, split.converged};
  }
  const auto f = [&](double t) { return angular_density(kernel, t) * detail::theta_bracket(c1, c2, t); };
  const auto pts = angular_breakpoints(kernel);
  const auto r = quad::integrate(f, std::span<const double>(pts),
                                 {.rel = opt.rel_tol, .rel_abs_integrand = 0.1 * opt.rel_tol,
                                  .max_intervals = opt.max_intervals});
  return {r.value, r.error, r.evaluations, r.converged};
}

/// Result of the split Rutherford theta integral projected onto phase c3.
struct InnerThetaResult {
  double value = 0.0;
  double taylor_piece = 0.0;
  double remainder_piece = 0.0;
  double tail_piece = 0.0;
  double remainder_error = 0.0;
  double tail_error = 0.0;
  bool converged = true;
};

/// integral over [eps, pi] of 8 eps/(pi theta^4) [cos(c1 (1 - cos theta) - c3) J0(c2 sin theta) - cos c3],
/// evaluated through the sqrt(eps) split.
inline InnerThetaResult inner_theta_integral(double c1, double c2, double c3, double eps,
                                             const ThetaOptions& opt = {}) {
  const auto s = rutherford_split(eps, c1, c2, opt);
  const complex phase{std::cos(c3), -std::sin(c3)};
  const auto project = [&](complex z) { return (z * phase).real(); };
  InnerThetaResult out;
  out.taylor_piece = project(s.taylor);
  out.remainder_piece = project(s.remainder);
  out.tail_piece = project(s.tail);
  out.value = out.taylor_piece + out.remainder_piece + out.tail_piece;
  out.remainder_error = s.remainder_error;
  out.tail_error = s.tail_error;
  out.converged = s.converged;
  if (!out.converged)
    throw QuadratureError("inner_theta_integral: remainder error " + std::to_string(s.remainder_error) +
                              ", tail error " + std::to_string(s.tail_error),
                          s.remainder_error + s.tail_error);
  return out;
}

/// Closed-form first piece: (8 eps/pi)(1/eps - 1/sqrt(eps)) (-c2^2/4 cos c3 + c1/2 sin c3).
inline double taylor_piece(double c1, double c2, double c3, double eps) {
  return 8.0 * eps / std::numbers::pi * (1.0 / eps - 1.0 / std::sqrt(eps)) *
         (-0.25 * c2 * c2 * std::cos(c3) + 0.5 * c1 * std::sin(c3));
}

/// Boltzmann weight function G(u, zeta); u = 0 maps to 0.
inline complex G_boltzmann(const Vec3& u, const Vec3& zeta, const KernelSpec& kernel, const ThetaOptions& opt = {}) {
  const double un = norm(u);
  if (un == 0.0) return {};
  const double c1 = 0.5 * kernel.beta * dot(zeta, u);
  const double c2 = 0.5 * kernel.beta * un * std::sqrt(perp_norm2(zeta, u));
  const auto t = theta_transform(kernel, c1, c2, opt);
  if (!t.converged) throw QuadratureError("G_boltzmann: theta integral did not converge", t.error);
  return 2.0 * std::numbers::pi * std::pow(un, kernel.lambda) * t.value;
}

/// Fokker-Planck-Landau weight function 4 |u|^lambda (i u.zeta - |u|^2 |zeta_perp|^2 / 4); u = 0 maps to 0.
inline complex G_landau(const Vec3& u, const Vec3& zeta, double lambda) {
  const double u2 = norm2(u);
  if (u2 == 0.0) return {};
  const double perp2 = perp_norm2(zeta, u);
  return 4.0 * std::pow(u2, 0.5 * lambda) * complex{-0.25 * u2 * perp2, dot(u, zeta)};
}

/// G in polar form about zeta: |u| = r, angle(u, zeta) = phi, |zeta| = s.
struct PolarBoltzmann {
  const KernelSpec* kernel;
  ThetaOptions theta;
  complex operator()(double r, double phi, double s, ThetaIntegral* info = nullptr) const {
    const double half = 0.5 * kernel->beta * r * s;
    const auto t = theta_transform(*kernel, half * std::cos(phi), half * std::sin(phi), theta);
    if (info) *info = t;
    return 2.0 * std::numbers::pi * std::pow(r, kernel->lambda) * t.value;
  }
};

struct PolarLandau {
  double lambda;
  complex operator()(double r, double phi, double s, ThetaIntegral* info = nullptr) const {
    if (info) *info = {};
    const double sp = s * std::sin(phi);
    return 4.0 * std::pow(r, lambda) * complex{-0.25 * r * r * sp * sp, r * s * std::cos(phi)};
  }
};

/// Scalar parameters on which a weight entry depends: |zeta|, xi.zeta/|zeta|, |xi_perp|.
struct WeightClass {
  double zeta_norm = 0.0;
  double xi_par = 0.0;
  double xi_perp = 0.0;
};

inline WeightClass weight_class(const Vec3& zeta, const Vec3& xi) {
  const double zn = norm(zeta);
  if (zn == 0.0) return {0.0, 0.0, norm(xi)};
  return {zn, dot(xi, zeta) / zn, std::sqrt(perp_norm2(xi, zeta))};
}

/// Radial panel boundaries on [0, L]: uniform panels of width <= resolution/k
/// with the first one graded geometrically towards r = 0.
inline std::vector<double> radial_breakpoints(double half_width, double k, double resolution, int grading = 6) {
  const int panels = std::max(1, static_cast<int>(std::ceil(half_width * k / resolution)));
  const double h = half_width / panels;
  std::vector<double> pts{0.0};
  for (int g = grading; g >= 1; --g) pts.push_back(h * std::ldexp(1.0, -g));
  for (int i = 1; i <= panels; ++i) pts.push_back(i == panels ? half_width : i * h);
  return pts;
}

inline int angular_panels(double r_hi, double k, double resolution) {
  return std::max(1, static_cast<int>(std::ceil(r_hi * k * 0.5 * std::numbers::pi / resolution)));
}

struct EntryOptions {
  double r_rel_tol = 1e-6;
  double phi_rel_tol = 1e-7;
  ThetaOptions theta{.rel_tol = 1e-9};
  double resolution = 12.0;
};

struct EntryResult {
  double value = 0.0;
  double error = 0.0;
  double imag_residue = 0.0;
  bool converged = true;
};

namespace detail {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934381868;

/// Nested adaptive evaluation of
///   (2 pi)^{-1/2} int_0^L r^2 int_0^pi sin(phi) J0(r q sin phi) Re[G(r, phi) e^{-i r p cos phi}] dphi dr.
/// With `full_range` the phi integral covers [0, pi] and the imaginary part is
/// returned as a residue; otherwise the even symmetry about pi/2 is used.
template <class PolarG>
EntryResult polar_entry(const PolarG& g, const WeightClass& c, double half_width, double beta,
                        const EntryOptions& opt, bool full_range) {
  EntryResult out;
  if (c.zeta_norm == 0.0) return out;
  const double k = std::hypot(c.xi_par, c.xi_perp) + beta * c.zeta_norm + 1.0;
  bool ok = true;
  const auto phi_integral = [&](double r) {
    const auto f = [&](double phi) {
      const double sp = std::sin(phi), cp = std::cos(phi);
      const complex gv = g(r, phi, c.zeta_norm);
      const complex ph{std::cos(r * c.xi_par * cp), -std::sin(r * c.xi_par * cp)};
      return sp * bessel_j0(r * c.xi_perp * sp) * (gv * ph);
    };
    const double top = full_range ? std::numbers::pi : 0.5 * std::numbers::pi;
    const int n = angular_panels(r, k, opt.resolution) * (full_range ? 2 : 1);
    std::vector<double> pts(n + 1);
    for (int i = 0; i <= n; ++i) pts[i] = top * i / n;
    const auto res = quad::integrate(f, std::span<const double>(pts),
                                     {.rel = opt.phi_rel_tol, .rel_abs_integrand = 1e-2 * opt.phi_rel_tol,
                                      .max_intervals = 400});
    ok = ok && res.converged;
    return res.value * (full_range ? 1.0 : 2.0);
  };
  const auto radial = [&](double r) { return r * r * phi_integral(r); };
  const auto pts = radial_breakpoints(half_width, k, opt.resolution);
  const auto res = quad::integrate(radial, std::span<const double>(pts),
                                   {.rel = opt.r_rel_tol, .rel_abs_integrand = 1e-2 * opt.r_rel_tol,
                                    .max_intervals = 400});
  out.value = inv_sqrt_2pi * res.value.real();
  out.imag_residue = full_range ? inv_sqrt_2pi * std::abs(res.value.imag()) : 0.0;
  out.error = inv_sqrt_2pi * res.error;
  out.converged = ok && res.converged;
  return out;
}

}  // namespace detail

/// One Boltzmann convolution weight Ĝ(zeta, xi) by nested adaptive quadrature,
/// with the ball B_L(0) as the u-domain and zeta as the polar axis.
inline EntryResult ghat_boltzmann_entry(const Vec3& zeta, const Vec3& xi, const KernelSpec& kernel, double half_width,
                                        const EntryOptions& opt = {}) {
  const auto c = weight_class(zeta, xi);
  auto r = detail::polar_entry(PolarBoltzmann{&kernel, opt.theta}, c, half_width, kernel.beta, opt, false);
  if (!std::isfinite(r.value)) throw NumericalError("ghat_boltzmann_entry: non-finite value");
  return r;
}

/// One Landau convolution weight over B_L(0); the imaginary part is integrated
/// too and must vanish to 1e-8.
inline EntryResult ghat_landau_entry(const Vec3& zeta, const Vec3& xi, double lambda, double half_width,
                                     const EntryOptions& opt = {}) {
  const auto c = weight_class(zeta, xi);
  EntryOptions o = opt;
  o.phi_rel_tol = std::min(opt.phi_rel_tol, 1e-11);
  o.r_rel_tol = std::min(opt.r_rel_tol, 1e-10);
  auto r = detail::polar_entry(PolarLandau{lambda}, c, half_width, 1.0, o, true);
  if (!std::isfinite(r.value)) throw NumericalError("ghat_landau_entry: non-finite value");
  if (r.imag_residue > 1e-8 * std::max(1.0, std::abs(r.value)))
    throw NumericalError("ghat_landau_entry: imaginary residue " + std::to_string(r.imag_residue));
  return r;
}

// --------------------------------------------------------------------------
// Full table

struct WeightTableMeta {
  OperatorKind op = OperatorKind::Boltzmann;
  int n = 0;
  double half_width = 0.0;
  double lambda = 0.0;
  double beta = 1.0;
  AngularFamily family = AngularFamily::IsotropicConstant;
  double family_parameter = 0.0;
  double quad_tol = 0.0;

  /// Everything except quad_tol, which records how the table was built.
  bool same_run(const WeightTableMeta& o) const {
    return op == o.op && n == o.n && half_width == o.half_width && lambda == o.lambda && beta == o.beta &&
           family == o.family && family_parameter == o.family_parameter;
  }
};

inline WeightTableMeta make_meta(const VelocityGrid& grid, const KernelSpec& kernel, OperatorKind op) {
  if (op == OperatorKind::Landau)  // the angular section and beta play no part in the Landau weights
    return {op, grid.n(), grid.half_width(), kernel.lambda, 1.0, AngularFamily::IsotropicConstant, 0.0, 0.0};
  return {op, grid.n(), grid.half_width(), kernel.lambda, kernel.beta, kernel.family(), kernel.family_parameter(), 0.0};
}

/// Dense Ĝ tensor: values[zeta_index * M + xi_index], M = N^3, both indices in
/// the grid's lexicographic frequency order.
struct WeightTable {
  WeightTableMeta meta;
  std::vector<double> values;

  std::size_t modes() const { return static_cast<std::size_t>(meta.n) * meta.n * meta.n; }
  double operator()(std::size_t zeta_idx, std::size_t xi_idx) const { return values[zeta_idx * modes() + xi_idx]; }
  std::span<const double> row(std::size_t zeta_idx) const {
    return std::span<const double>(values).subspan(zeta_idx * modes(), modes());
  }
};

struct BuildOptions {
  /// Evaluate each (|k_zeta|^2, k_zeta.k_xi, |k_xi|^2) class once and scatter.
  bool symmetry_reduction = true;
  /// Largest phase change (radians) of the integrand across one G10/K21 panel.
  double resolution = 12.0;
  /// Per |zeta| level, the G10/K21 discrepancy must stay below this fraction
  /// of the level's largest entry; otherwise the level is re-run on finer panels.
  double target_rel_tol = 1e-6;
  int max_refinements = 3;
  ThetaOptions theta{};
  int threads = 0;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct BuildReport {
  std::size_t levels = 0;
  std::size_t classes = 0;
  std::size_t theta_integrals = 0;
  std::size_t theta_unconverged = 0;
  std::size_t flagged_classes = 0;
  std::size_t refinements = 0;
  std::size_t max_nodes = 0;
  double max_error_estimate = 0.0;
};

namespace detail {

/// Tensor-product G10/K21 nodes in (r, phi in [0, pi/2]) with the radial
/// Jacobian, sin(phi), the phi-symmetry factor 2 and (2 pi)^{-1/2} folded into
/// the weights.
struct PolarNodes {
  std::vector<double> r, phi, x, y, wk, wg;
  std::size_t size() const { return r.size(); }
};

inline PolarNodes polar_nodes(double half_width, double k, double resolution) {
  PolarNodes out;
  const auto gk = quad::GaussKronrod21::nodes();
  const auto rpts = radial_breakpoints(half_width, k, resolution);
  for (std::size_t i = 0; i + 1 < rpts.size(); ++i) {
    const double ra = rpts[i], rb = rpts[i + 1];
    const double rh = 0.5 * (rb - ra), rc = 0.5 * (ra + rb);
    const int np = angular_panels(rb, k, resolution);
    const double ph_w = 0.5 * std::numbers::pi / np;
    for (const auto& nr : gk) {
      const double r = rc + rh * nr.x;
      for (int p = 0; p < np; ++p) {
        const double pc = (p + 0.5) * ph_w, phh = 0.5 * ph_w;
        for (const auto& na : gk) {
          const double phi = pc + phh * na.x;
          const double common = 2.0 * inv_sqrt_2pi * r * r * std::sin(phi) * rh * phh;
          out.r.push_back(r);
          out.phi.push_back(phi);
          out.x.push_back(r * std::sin(phi));
          out.y.push_back(r * std::cos(phi));
          out.wk.push_back(common * nr.wk * na.wk);
          out.wg.push_back(common * nr.wg * na.wg);
        }
      }
    }
  }
  return out;
}

struct Level {
  long a = 0;                // |k_zeta|^2
  std::vector<std::uint32_t> class_ids;
};

struct ClassKey {
  long a, b, c;  // |k_zeta|^2, k_zeta.k_xi, |k_xi|^2
};

inline std::uint64_t pack_key(long a, long b, long c, long span) {
  return (static_cast<std::uint64_t>(a) * (2 * span + 1) + static_cast<std::uint64_t>(b + span)) * (span + 1) +
         static_cast<std::uint64_t>(c);
}

}  // namespace detail

/// Fills the N^3 x N^3 weight tensor for the Boltzmann operator (kernel) or the
/// Landau operator (kernel.lambda only).
///
/// Per distinct |zeta| the weight function G is tabulated once on a
/// composite Gauss-Kronrod (r, phi) node set; each entry is then a weighted sum
/// over those nodes. The Gauss/Kronrod discrepancy is the error estimate; the
/// largest one is stored as quad_tol.
inline WeightTable build_weight_table(const VelocityGrid& grid, const KernelSpec& kernel, OperatorKind op,
                                      const BuildOptions& opt = {}, BuildReport* report = nullptr) {
  kernel.validate();
  const int n = grid.n();
  const std::size_t m = grid.size();
  const double dz = grid.dzeta();
  const long span = 3L * (n / 2) * (n / 2);
  const double beta = op == OperatorKind::Boltzmann ? kernel.beta : 1.0;
  const double xi_max = std::sqrt(static_cast<double>(span)) * dz;

  WeightTable table{make_meta(grid, kernel, op), std::vector<double>(m * m, 0.0)};
  BuildReport rep;

  // Enumerate integer classes.
  std::vector<MultiIndex> kv(m);
  for (std::size_t i = 0; i < m; ++i) kv[i] = grid.wavenumbers(i);
  const auto idot = [](const MultiIndex& p, const MultiIndex& q) {
    return static_cast<long>(p[0]) * q[0] + static_cast<long>(p[1]) * q[1] + static_cast<long>(p[2]) * q[2];
  };
  std::vector<detail::ClassKey> classes;
  std::vector<std::uint32_t> pair_class;  // only with symmetry reduction
  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  std::vector<long> level_of_zeta(m);
  for (std::size_t i = 0; i < m; ++i) level_of_zeta[i] = idot(kv[i], kv[i]);

  std::vector<long> level_values;
  {
    std::vector<long> tmp(level_of_zeta);
    std::sort(tmp.begin(), tmp.end());
    tmp.erase(std::unique(tmp.begin(), tmp.end()), tmp.end());
    for (long a : tmp)
      if (a > 0) level_values.push_back(a);
  }
  std::unordered_map<long, std::size_t> level_index;
  for (std::size_t l = 0; l < level_values.size(); ++l) level_index[level_values[l]] = l;
  std::vector<detail::Level> levels(level_values.size());
  for (std::size_t l = 0; l < levels.size(); ++l) levels[l].a = level_values[l];

  if (opt.symmetry_reduction) {
    pair_class.assign(m * m, UINT32_MAX);
    for (std::size_t i = 0; i < m; ++i) {
      const long a = level_of_zeta[i];
      if (a == 0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const long b = idot(kv[i], kv[j]), c = idot(kv[j], kv[j]);
        const auto key = detail::pack_key(a, b, c, span);
        auto [it, inserted] = lookup.try_emplace(key, static_cast<std::uint32_t>(classes.size()));
        if (inserted) {
          classes.push_back({a, b, c});
          levels[level_index[a]].class_ids.push_back(it->second);
        }
        pair_class[i * m + j] = it->second;
      }
    }
  }
  rep.levels = levels.size();
  rep.classes = opt.symmetry_reduction ? classes.size() : (m - 1) * m;

  std::vector<double> class_value(classes.size(), 0.0);
  std::vector<double> level_error(levels.size(), 0.0);
  std::vector<std::size_t> level_theta(levels.size(), 0), level_bad_theta(levels.size(), 0),
      level_flagged(levels.size(), 0), level_refine(levels.size(), 0), level_nodes(levels.size(), 0);
  std::atomic<std::size_t> done{0};

  const auto process_level = [&](std::size_t l) {
    const long a = levels[l].a;
    const double s = std::sqrt(static_cast<double>(a)) * dz;
    const double k = xi_max + beta * s + 1.0;
    double resolution = opt.resolution;
    for (int attempt = 0;; ++attempt) {
      const auto nodes = detail::polar_nodes(grid.half_width(), k, resolution);
      const std::size_t nn = nodes.size();
      level_nodes[l] = std::max(level_nodes[l], nn);
      std::vector<double> gc(nn), gs(nn);
      std::size_t bad = 0;
      for (std::size_t q = 0; q < nn; ++q) {
        complex g;
        if (op == OperatorKind::Boltzmann) {
          ThetaIntegral info;
          g = PolarBoltzmann{&kernel, opt.theta}(nodes.r[q], nodes.phi[q], s, &info);
          if (!info.converged) ++bad;
        } else {
          g = PolarLandau{kernel.lambda}(nodes.r[q], nodes.phi[q], s);
        }
        gc[q] = g.real();
        gs[q] = g.imag();
      }
      level_theta[l] += op == OperatorKind::Boltzmann ? nn : 0;
      level_bad_theta[l] += bad;

      double max_val = 0.0, max_err = 0.0;
      std::size_t flagged = 0;
      std::vector<double> h(nn), j0(nn);
      const auto phase_mix = [&](double p) {
        for (std::size_t q = 0; q < nn; ++q) {
          const double t = p * nodes.y[q];
          h[q] = gc[q] * std::cos(t) + gs[q] * std::sin(t);
        }
      };
      const auto sum = [&](double q_perp, const std::vector<double>& hh, double& err) {
        double sk = 0.0, sg = 0.0;
        for (std::size_t q = 0; q < nn; ++q) {
          const double t = hh[q] * bessel_j0(q_perp * nodes.x[q]);
          sk += nodes.wk[q] * t;
          sg += nodes.wg[q] * t;
        }
        err = std::abs(sk - sg);
        return sk;
      };

      if (opt.symmetry_reduction) {
        // Group by k_zeta.k_xi (phase factor) then by |xi_perp| (Bessel factor).
        auto ids = levels[l].class_ids;
        std::sort(ids.begin(), ids.end(), [&](std::uint32_t x, std::uint32_t y) {
          const auto &cx = classes[x], &cy = classes[y];
          const long px = a * cx.c - cx.b * cx.b, py = a * cy.c - cy.b * cy.b;
          return px != py ? px < py : cx.b < cy.b;
        });
        std::unordered_map<long, std::vector<double>> mixes;
        for (auto id : ids) {
          const long b = classes[id].b;
          if (mixes.count(b)) continue;
          phase_mix(b * dz / std::sqrt(static_cast<double>(a)));
          mixes.emplace(b, h);
        }
        long current_perp = -1;
        for (auto id : ids) {
          const auto& c = classes[id];
          const long perp = a * c.c - c.b * c.b;
          if (perp != current_perp) {
            const double qp = std::sqrt(static_cast<double>(perp) / a) * dz;
            for (std::size_t q = 0; q < nn; ++q) j0[q] = bessel_j0(qp * nodes.x[q]);
            current_perp = perp;
          }
          const auto& hh = mixes.at(c.b);
          double sk = 0.0, sg = 0.0;
          for (std::size_t q = 0; q < nn; ++q) {
            const double t = hh[q] * j0[q];
            sk += nodes.wk[q] * t;
            sg += nodes.wg[q] * t;
          }
          class_value[id] = sk;
          max_val = std::max(max_val, std::abs(sk));
          max_err = std::max(max_err, std::abs(sk - sg));
        }
        const double target = opt.target_rel_tol * max_val;
        if (max_err > target && attempt < opt.max_refinements) {
          resolution *= 0.6;
          ++level_refine[l];
          continue;
        }
        if (max_err > target) flagged = ids.size();
      } else {
        // Every (zeta, xi) pair of this level evaluated from its own vectors.
        for (std::size_t i = 0; i < m; ++i) {
          if (level_of_zeta[i] != a) continue;
          const Vec3 zeta = grid.frequency(i);
          for (std::size_t j = 0; j < m; ++j) {
            const auto wc = weight_class(zeta, grid.frequency(j));
            phase_mix(wc.xi_par);
            double err = 0.0;
            const double v = sum(wc.xi_perp, h, err);
            table.values[i * m + j] = v;
            max_val = std::max(max_val, std::abs(v));
            max_err = std::max(max_err, err);
          }
        }
        if (max_err > opt.target_rel_tol * max_val && attempt < opt.max_refinements) {
          resolution *= 0.6;
          ++level_refine[l];
          continue;
        }
        if (max_err > opt.target_rel_tol * max_val) flagged = 1;
      }
      level_error[l] = max_err;
      level_flagged[l] = flagged;
      break;
    }
    const auto d = done.fetch_add(1) + 1;
    if (opt.progress) opt.progress(d, levels.size());
  };

  parallel_for(levels.size(), opt.threads, process_level);

  if (opt.symmetry_reduction) {
    for (std::size_t p = 0; p < m * m; ++p)
      if (pair_class[p] != UINT32_MAX) table.values[p] = class_value[pair_class[p]];
  }
  for (double v : table.values)
    if (!std::isfinite(v)) throw NumericalError("build_weight_table: non-finite weight");

  for (std::size_t l = 0; l < levels.size(); ++l) {
    rep.max_error_estimate = std::max(rep.max_error_estimate, level_error[l]);
    rep.theta_integrals += level_theta[l];
    rep.theta_unconverged += level_bad_theta[l];
    rep.flagged_classes += level_flagged[l];
    rep.refinements += level_refine[l];
    rep.max_nodes = std::max(rep.max_nodes, level_nodes[l]);
  }
  table.meta.quad_tol = rep.max_error_estimate;
  if (report) *report = rep;
  return table;
}

}  // namespace specboltz
