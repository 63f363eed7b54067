#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"
#include "vec3.hpp"

namespace specboltz {

/// b(cos theta) = value, so b*sin(theta) = value*sin(theta).
struct IsotropicConstant {
  double value = 1.0 / (4.0 * std::numbers::pi);
};

/// Rutherford grazing family: b*sin(theta) = 8 eps / (pi theta^4) for theta >= eps, else 0.
/// Its momentum-transfer moment tends to 8 as eps -> 0.
struct GrazingRutherford {
  double eps = 1e-2;
};

/// Angular section known only at sample angles: (theta, b*sin(theta)) pairs,
/// interpolated with a monotone (Fritsch-Carlson) cubic. Zero outside the table.
class TabulatedSection {
 public:
  TabulatedSection() = default;
  TabulatedSection(std::vector<double> theta, std::vector<double> values)
      : theta_(std::move(theta)), values_(std::move(values)) {
    if (theta_.size() != values_.size() || theta_.size() < 2)
      throw InvalidArgument("tabulated section: need at least two (theta, value) pairs");
    for (std::size_t i = 0; i < theta_.size(); ++i) {
      if (!std::isfinite(theta_[i]) || theta_[i] < 0.0 || theta_[i] > std::numbers::pi)
        throw InvalidArgument("tabulated section: theta must lie in [0, pi]");
      if (!std::isfinite(values_[i]) || values_[i] < 0.0)
        throw InvalidArgument("tabulated section: values must be finite and non-negative");
      if (i > 0 && !(theta_[i] > theta_[i - 1]))
        throw InvalidArgument("tabulated section: theta must be strictly increasing");
    }
    compute_slopes();
  }

  /// Two-column whitespace-separated text, '#' starts a comment.
  static TabulatedSection from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open angular table '" + path + "'");
    std::vector<double> th, val;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      double a = 0.0, b = 0.0;
      if (!(ss >> a)) continue;
      std::string extra;
      if (!(ss >> b) || (ss >> extra))
        throw FormatError(path + ":" + std::to_string(lineno) + ": expected two numeric columns");
      th.push_back(a);
      val.push_back(b);
    }
    return TabulatedSection(std::move(th), std::move(val));
  }

  double operator()(double theta) const {
    if (theta < theta_.front() || theta > theta_.back()) return 0.0;
    const auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
    std::size_t i = (it == theta_.begin()) ? 0 : static_cast<std::size_t>(it - theta_.begin()) - 1;
    if (i >= theta_.size() - 1) i = theta_.size() - 2;
    const double h = theta_[i + 1] - theta_[i];
    const double t = (theta - theta_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * values_[i] + (t3 - 2 * t2 + t) * h * slopes_[i] +
           (-2 * t3 + 3 * t2) * values_[i + 1] + (t3 - t2) * h * slopes_[i + 1];
  }

  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& values() const { return values_; }

 private:
  void compute_slopes() {
    const std::size_t n = theta_.size();
    slopes_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = theta_[i + 1] - theta_[i];
      delta[i] = (values_[i + 1] - values_[i]) / h[i];
    }
    if (n == 2) {
      slopes_[0] = slopes_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) continue;
      const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
      slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    const auto end_slope = [](double h0, double h1, double d0, double d1) {
      double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (d * d0 <= 0.0) return 0.0;
      if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3 * d0)) return 3 * d0;
      return d;
    };
    slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  std::vector<double> theta_, values_, slopes_;
};

using AngularSection = std::variant<IsotropicConstant, GrazingRutherford, TabulatedSection>;

/// Tags used by the weight cache format.
enum class AngularFamily : std::uint32_t { IsotropicConstant = 0, GrazingRutherford = 1, Tabulated = 2 };

/// Collision kernel B(|u|, cos theta) = |u|^lambda * b(cos theta).
struct KernelSpec {
  double lambda = 0.0;
  double beta = 1.0;
  AngularSection angular = IsotropicConstant{};

  void validate() const {
    if (!std::isfinite(lambda) || lambda < -3.0 || lambda > 1.0)
      throw InvalidArgument("kernel: lambda must lie in [-3, 1]");
    if (!std::isfinite(beta) || !(beta > 0.0) || beta > 1.0)
      throw InvalidArgument("kernel: beta must lie in (0, 1]");
    if (const auto* g = std::get_if<GrazingRutherford>(&angular)) {
      if (!std::isfinite(g->eps) || !(g->eps > 0.0) || !(g->eps < std::numbers::pi))
        throw InvalidArgument("kernel: grazing eps must lie in (0, pi)");
    }
    if (const auto* c = std::get_if<IsotropicConstant>(&angular)) {
      if (!std::isfinite(c->value) || c->value < 0.0)
        throw InvalidArgument("kernel: isotropic constant must be finite and non-negative");
    }
  }

  AngularFamily family() const { return static_cast<AngularFamily>(angular.index()); }

  /// Constant value, eps, or 0 for tabulated sections.
  double family_parameter() const {
    if (const auto* c = std::get_if<IsotropicConstant>(&angular)) return c->value;
    if (const auto* g = std::get_if<GrazingRutherford>(&angular)) return g->eps;
    return 0.0;
  }
};

inline KernelSpec make_kernel(double lambda, AngularSection angular, double beta = 1.0) {
  KernelSpec k{lambda, beta, std::move(angular)};
  k.validate();
  return k;
}

inline const char* family_name(AngularFamily f) {
  switch (f) {
    case AngularFamily::IsotropicConstant: return "isotropic";
    case AngularFamily::GrazingRutherford: return "grazing";
    case AngularFamily::Tabulated: return "tabulated";
  }
  return "unknown";
}

/// b(cos theta) * sin(theta).
inline double angular_density(const KernelSpec& spec, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw InvalidArgument("angular_density: theta outside [0, pi]");
  return std::visit(
      [theta](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, IsotropicConstant>) {
          return s.value * std::sin(theta);
        } else if constexpr (std::is_same_v<S, GrazingRutherford>) {
          if (theta < s.eps) return 0.0;
          const double t2 = theta * theta;
          return 8.0 * s.eps / (std::numbers::pi * t2 * t2);
        } else {
          return s(theta);
        }
      },
      spec.angular);
}

/// Panel boundaries for theta integrals over the support of the angular section:
/// geometric near the Rutherford cutoff, table knots for tabulated sections.
inline std::vector<double> angular_breakpoints(const KernelSpec& spec) {
  constexpr double pi = std::numbers::pi;
  if (const auto* g = std::get_if<GrazingRutherford>(&spec.angular)) {
    std::vector<double> pts;
    for (double t = g->eps; t < pi; t *= 4.0) pts.push_back(t);
    pts.push_back(pi);
    return pts;
  }
  if (const auto* t = std::get_if<TabulatedSection>(&spec.angular)) return t->theta();
  return {0.0, pi};
}

/// 2 pi * integral of b (1 - cos theta)^p sin theta over [0, pi]; p = 1 is the
/// momentum-transfer rate Lambda.
inline double grazing_moment(const KernelSpec& spec, int p, double rel_tol = 1e-8) {
  if (p < 1) throw InvalidArgument("grazing_moment: p must be >= 1");
  const auto f = [&](double theta) {
    const double s = std::sin(0.5 * theta);
    return angular_density(spec, theta) * std::pow(2.0 * s * s, p);
  };
  const auto pts = angular_breakpoints(spec);
  const auto r = quad::integrate(f, std::span<const double>(pts), {.rel = rel_tol, .max_intervals = 2000});
  if (!r.converged) throw QuadratureError("grazing_moment did not converge", r.error);
  return 2.0 * std::numbers::pi * r.value;
}

/// Elastic collision rule: v' = v + (|u| sigma - u)/2, v*' = v* - (|u| sigma - u)/2.
inline std::pair<Vec3, Vec3> post_collision_velocities(const Vec3& v, const Vec3& v_star, const Vec3& sigma) {
  if (std::abs(norm2(sigma) - 1.0) > 2e-12) throw InvalidArgument("post_collision_velocities: sigma must be a unit vector");
  const Vec3 u = v - v_star;
  const Vec3 half = 0.5 * (norm(u) * sigma - u);
  return {v + half, v_star - half};
}

}  // namespace specboltz
