#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "grid.hpp"
#include "kernels.hpp"
#include "vec3.hpp"
#include "weights.hpp"

namespace specboltz {

/// A (u, zeta) pair for pointwise comparisons of weight functions.
struct WeightPoint {
  Vec3 u;
  Vec3 zeta;
};

inline Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const Vec3 v{g(rng), g(rng), g(rng)};
    const double n = norm(v);
    if (n > 1e-12) return (1.0 / n) * v;
  }
}

/// Deterministic sample of pairs with |u|, |zeta| uniform in [min_norm, max_norm].
inline std::vector<WeightPoint> sample_weight_points(std::size_t count, std::uint64_t seed, double max_norm = 4.0,
                                                     double min_norm = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(min_norm, max_norm);
  std::vector<WeightPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3 u = radius(rng) * random_direction(rng);
    const Vec3 z = radius(rng) * random_direction(rng);
    out.push_back({u, z});
  }
  return out;
}

/// |G_boltzmann(b_eps) - G_landau| / |G_landau| at one point (beta = 1).
inline double grazing_gap(const WeightPoint& p, double lambda, double eps, const ThetaOptions& opt = {}) {
  const auto k = make_kernel(lambda, GrazingRutherford{eps});
  const auto gb = G_boltzmann(p.u, p.zeta, k, opt);
  const auto gl = G_landau(p.u, p.zeta, lambda);
  return std::abs(gb - gl) / std::abs(gl);
}

/// Relative Frobenius distance between two weight tables of equal shape.
inline double relative_frobenius(const WeightTable& a, const WeightTable& b) {
  if (a.values.size() != b.values.size()) throw InvalidArgument("relative_frobenius: table shapes differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    num += d * d;
    den += b.values[i] * b.values[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace specboltz
