#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "vec3.hpp"

namespace specboltz {

/// Discrete moments of a state under the grid's trapezoid rule.
struct MomentSet {
  double mass = 0.0;
  Vec3 momentum;            ///< sum w f v
  Vec3 velocity;            ///< momentum / mass (NaN when mass <= 0)
  double energy = 0.0;      ///< sum w f |v|^2
  double temperature = 0.0; ///< sum w f |v - V|^2 / (3 mass) (NaN when mass <= 0)
  double min_f = 0.0;
  double entropy = 0.0;     ///< sum w f log f over nodes with f > 0
  double skipped_mass = 0.0;///< sum w |f| over nodes excluded from the entropy (f <= 0)
  bool degenerate = false;  ///< mass <= 0: velocity and temperature are undefined
};

struct EntropyValue {
  double value = 0.0;
  double skipped_mass = 0.0;
};

/// sum w f log f over nodes with f > 0; nodes with f <= 0 are skipped and
/// their |mass| reported.
inline EntropyValue entropy(std::span<const double> f, const VelocityGrid& grid) {
  if (f.size() != grid.size()) throw InvalidArgument("entropy: size does not match the grid");
  const auto w = grid.quad_weights();
  EntropyValue e;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (f[j] > 0.0)
      e.value += w[j] * f[j] * std::log(f[j]);
    else
      e.skipped_mass += w[j] * std::abs(f[j]);
  }
  return e;
}

inline MomentSet moments(std::span<const double> f, const VelocityGrid& grid) {
  if (f.size() != grid.size()) throw InvalidArgument("moments: size does not match the grid");
  const auto w = grid.quad_weights();
  MomentSet m;
  m.min_f = f.empty() ? 0.0 : f[0];
  for (std::size_t j = 0; j < f.size(); ++j) {
    const Vec3 v = grid.velocity(j);
    const double wf = w[j] * f[j];
    m.mass += wf;
    m.momentum += wf * v;
    m.energy += wf * norm2(v);
    m.min_f = std::min(m.min_f, f[j]);
  }
  const auto h = entropy(f, grid);
  m.entropy = h.value;
  m.skipped_mass = h.skipped_mass;
  if (!(m.mass > 0.0)) {
    m.degenerate = true;
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    m.velocity = {nan, nan, nan};
    m.temperature = nan;
    return m;
  }
  m.velocity = (1.0 / m.mass) * m.momentum;
  double spread = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) spread += w[j] * f[j] * norm2(grid.velocity(j) - m.velocity);
  m.temperature = spread / (3.0 * m.mass);
  return m;
}

/// rho (2 pi T)^{-3/2} exp(-|v - V|^2 / (2T)) at the nodes.
inline std::vector<double> maxwellian(double rho, const Vec3& velocity, double temperature, const VelocityGrid& grid) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("maxwellian: rho must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidArgument("maxwellian: T must be positive");
  const double c = rho * std::pow(2.0 * std::numbers::pi * temperature, -1.5);
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = c * std::exp(-norm2(grid.velocity(j) - velocity) / (2.0 * temperature));
  return f;
}

/// Shell-shaped axially symmetric state 0.01 exp(-10 ((|v| - 1.5)/1.5)^2).
inline double shell_value(const Vec3& v) {
  const double s = (norm(v) - 1.5) / 1.5;
  return 0.01 * std::exp(-10.0 * s * s);
}

inline std::vector<double> shell_ic(const VelocityGrid& grid) {
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = shell_value(grid.velocity(j));
  return f;
}

/// Equal-weight mixture of two unit-mass Maxwellians at +-shift along x.
inline double two_maxwellian_value(const Vec3& v, double shift = 1.0, double temperature = 0.5) {
  const double c = 0.5 * std::pow(2.0 * std::numbers::pi * temperature, -1.5);
  const Vec3 d{shift, 0.0, 0.0};
  return c * (std::exp(-norm2(v - d) / (2.0 * temperature)) + std::exp(-norm2(v + d) / (2.0 * temperature)));
}

inline std::vector<double> two_maxwellian_ic(const VelocityGrid& grid, double shift = 1.0, double temperature = 0.5) {
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = two_maxwellian_value(grid.velocity(j), shift, temperature);
  return f;
}

/// Unit-mass centred Gaussian with temperature tx along x and tp across.
inline double anisotropic_gaussian_value(const Vec3& v, double tx = 1.4, double tp = 0.8) {
  const double c = std::pow(2.0 * std::numbers::pi, -1.5) / std::sqrt(tx * tp * tp);
  return c * std::exp(-0.5 * (v.x * v.x / tx + (v.y * v.y + v.z * v.z) / tp));
}

inline std::vector<double> anisotropic_gaussian_ic(const VelocityGrid& grid, double tx = 1.4, double tp = 0.8) {
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = anisotropic_gaussian_value(grid.velocity(j), tx, tp);
  return f;
}

/// Weighted l2 distance sqrt(sum w (f - M)^2) to the Maxwellian with the
/// discrete mass, velocity and temperature of f.
inline double distance_to_maxwellian(std::span<const double> f, const VelocityGrid& grid) {
  const auto m = moments(f, grid);
  if (m.degenerate || !(m.temperature > 0.0)) throw NumericalError("distance_to_maxwellian: state has no equilibrium");
  const auto eq = maxwellian(m.mass, m.velocity, m.temperature, grid);
  const auto w = grid.quad_weights();
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += w[j] * (f[j] - eq[j]) * (f[j] - eq[j]);
  return std::sqrt(s);
}

struct SliceRow {
  double v;
  double f;
};

/// Profile along `axis` (0, 1, 2) through the node whose other two indices are
/// `fixed` (in increasing axis order).
inline std::vector<SliceRow> slice(std::span<const double> f, const VelocityGrid& grid, int axis,
                                   std::array<int, 2> fixed) {
  if (f.size() != grid.size()) throw InvalidArgument("slice: size does not match the grid");
  if (axis < 0 || axis > 2) throw InvalidArgument("slice: axis must be 0, 1 or 2");
  for (int i : fixed)
    if (i < 0 || i >= grid.n()) throw InvalidArgument("slice: fixed index out of range");
  std::vector<SliceRow> rows;
  rows.reserve(grid.n());
  for (int j = 0; j < grid.n(); ++j) {
    MultiIndex m{};
    int other = 0;
    for (int a = 0; a < 3; ++a) m[a] = (a == axis) ? j : fixed[other++];
    rows.push_back({grid.node(j), f[grid.index_of(m)]});
  }
  return rows;
}

/// Shortest representation that round-trips, '.' decimal regardless of locale.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (r.ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf.data(), r.ptr);
}

inline void write_csv_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
  out << '\n';
}

inline constexpr const char* moments_csv_header = "t,rho,Vx,Vy,Vz,energy,T,H,min_f";

inline void write_moments_row(std::ostream& out, double t, const MomentSet& m) {
  write_csv_row(out, {t, m.mass, m.velocity.x, m.velocity.y, m.velocity.z, m.energy, m.temperature, m.entropy, m.min_f});
}

inline void write_slice_csv(std::ostream& out, std::span<const SliceRow> rows) {
  out << "v,f\n";
  for (const auto& r : rows) write_csv_row(out, {r.v, r.f});
}

}  // namespace specboltz
