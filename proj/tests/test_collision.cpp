#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <specboltz/collision.hpp>
#include <specboltz/diagnostics.hpp>
#include <specboltz/direct_oracle.hpp>
#include <specboltz/transform.hpp>

using namespace specboltz;
using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Direct O(M^2) evaluation of (2 pi)^{-3/2} sum_j w_j f_j exp(-i zeta_k . v_j).
std::vector<cplx> direct_transform(const std::vector<double>& f, const VelocityGrid& g) {
  const auto w = g.quad_weights();
  std::vector<cplx> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Vec3 z = g.frequency(k);
    cplx s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double a = -dot(z, g.velocity(j));
      s += w[j] * f[j] * cplx(std::cos(a), std::sin(a));
    }
    out[k] = s * std::pow(2 * pi, -1.5);
  }
  return out;
}

const WeightTable& maxwell_table_n8() {
  static const auto t =
      build_weight_table(build_grid(8, 5.0), make_kernel(0.0, IsotropicConstant{}), OperatorKind::Boltzmann);
  return t;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

// ---------------------------------------------------------------- transforms

TEST(Transform, ZeroMapsToZero) {
  const auto g = build_grid(8, 5.0);
  for (const auto& z : forward_transform(std::vector<double>(g.size(), 0.0), g)) EXPECT_EQ(z, cplx(0.0));
  for (double v : inverse_transform(std::vector<cplx>(g.size()), g)) EXPECT_EQ(v, 0.0);
}

TEST(Transform, MatchesDirectSummation) {
  for (int n : {4, 6, 8}) {
    const auto g = build_grid(n, 3.0);
    const auto f = random_values(g.size(), n);
    const auto fast = forward_transform(f, g);
    const auto slow = direct_transform(f, g);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_LT(std::abs(fast[k] - slow[k]), 1e-13) << n << " " << k;
  }
}

TEST(Transform, MaxwellianZeroModeIsDiscreteMass) {
  const auto g = build_grid(16, 5.0);
  const auto f = maxwellian(1.0, {}, 1.0, g);
  const auto fhat = forward_transform(f, g);
  const double mass = 0.9999695179978123;  // numpy trapezoid sum
  EXPECT_NEAR(fhat[g.index_of_wavenumbers({0, 0, 0})].real(), mass * transform_scale, 1e-15);
  EXPECT_NEAR(fhat[g.index_of_wavenumbers({0, 0, 0})].real(), transform_scale, 1e-4 * transform_scale);
  EXPECT_NEAR(fhat[g.index_of_wavenumbers({0, 0, 0})].imag(), 0.0, 1e-16);
}

TEST(Transform, ImpulseHasFlatSpectrum) {
  const auto g = build_grid(8, 5.0);
  for (const MultiIndex j0 : {MultiIndex{3, 4, 5}, MultiIndex{0, 0, 7}, MultiIndex{0, 0, 0}}) {
    std::vector<double> f(g.size(), 0.0);
    const auto idx = g.index_of(j0);
    f[idx] = 1.0 / g.quad_weights()[idx];
    for (const auto& z : forward_transform(f, g)) EXPECT_NEAR(std::abs(z), transform_scale, 1e-15);
  }
}

TEST(Transform, ConjugateSymmetryOfRealData) {
  const auto g = build_grid(8, 4.0);
  const auto fhat = forward_transform(random_values(g.size(), 2), g);
  const int h = g.n() / 2 - 1;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto kv = g.wavenumbers(k);
    if (std::abs(kv[0]) > h || std::abs(kv[1]) > h || std::abs(kv[2]) > h) continue;
    const auto mk = g.index_of_wavenumbers({-kv[0], -kv[1], -kv[2]});
    EXPECT_LT(std::abs(fhat[k] - std::conj(fhat[mk])), 1e-15);
  }
}

TEST(Transform, RoundTrip) {
  for (int n : {8, 16}) {
    const auto g = build_grid(n, 5.0);
    const auto f = random_values(g.size(), 10 + n);
    const auto back = inverse_transform(forward_transform(f, g), g);
    for (std::size_t j = 0; j < f.size(); ++j) EXPECT_NEAR(back[j], f[j], 1e-12);
  }
}

TEST(Transform, ConjugateSymmetricSpectrumIsReal) {
  const auto g = build_grid(8, 5.0);
  const int h = g.n() / 2 - 1;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::vector<cplx> q(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto kv = g.wavenumbers(k);
    if (std::abs(kv[0]) > h || std::abs(kv[1]) > h || std::abs(kv[2]) > h) continue;
    const auto mk = g.index_of_wavenumbers({-kv[0], -kv[1], -kv[2]});
    if (mk < k) continue;
    q[k] = {nd(rng), mk == k ? 0.0 : nd(rng)};
    q[mk] = std::conj(q[k]);
  }
  double res = -1.0;
  const auto out = inverse_transform(q, g, 1e-10, &res);
  EXPECT_LE(res, 1e-10 * max_abs(out));
  // breaking the symmetry is detected
  q[g.index_of_wavenumbers({1, 0, 0})] += cplx(0.0, 0.5);
  EXPECT_THROW(inverse_transform(q, g), NumericalError);
}

TEST(Transform, RejectsBadInput) {
  const auto g = build_grid(8, 5.0);
  EXPECT_THROW(forward_transform(std::vector<double>(7), g), InvalidArgument);
  std::vector<double> f(g.size(), 0.0);
  f[3] = std::nan("");
  EXPECT_THROW(forward_transform(f, g), InvalidArgument);
}

TEST(Transform, SpectralStateTracksStaleness) {
  const auto g = build_grid(8, 5.0);
  Transformer t(g);
  SpectralState s(g, maxwellian(1.0, {}, 1.0, g));
  EXPECT_TRUE(s.dirty());
  const auto z = g.index_of_wavenumbers({0, 0, 0});
  const cplx before = s.fhat(t)[z];
  EXPECT_FALSE(s.dirty());
  double mass = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) mass += g.quad_weights()[j] * s.values()[j];
  EXPECT_NEAR(before.real(), transform_scale * mass, 1e-16);
  for (double& v : s.mutable_values()) v *= 2.0;
  EXPECT_TRUE(s.dirty());
  EXPECT_NEAR(s.fhat(t)[z].real(), 2.0 * before.real(), 1e-16);
  EXPECT_THROW(SpectralState(g, std::vector<double>(3)), InvalidArgument);
}

// ---------------------------------------------------------------- convolution

TEST(Collide, ZeroAndBilinear) {
  const auto g = build_grid(8, 5.0);
  const auto& t = maxwell_table_n8();
  for (const auto& z : collide(std::vector<cplx>(g.size()), t, g)) EXPECT_EQ(z, cplx(0.0));
  const auto fhat = forward_transform(two_maxwellian_ic(g), g);
  const auto q1 = collide(fhat, t, g);
  std::vector<cplx> scaled(fhat);
  for (auto& z : scaled) z *= 3.0;
  const auto q3 = collide(scaled, t, g);
  double scale = 0.0;
  for (const auto& z : q1) scale = std::max(scale, std::abs(z));
  for (std::size_t k = 0; k < q1.size(); ++k) EXPECT_LE(std::abs(q3[k] - 9.0 * q1[k]), 1e-13 * 9.0 * scale);
}

TEST(Collide, ZeroModeVanishesExactly) {
  const auto g = build_grid(8, 5.0);
  const auto z = g.index_of_wavenumbers({0, 0, 0});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<cplx> fhat(g.size());
  for (auto& c : fhat) c = {nd(rng), nd(rng)};
  EXPECT_EQ(collide(fhat, maxwell_table_n8(), g)[z], cplx(0.0));
}

TEST(Collide, MatchesNaiveBoundsCheckedSum) {
  const auto g = build_grid(8, 5.0);
  const auto& t = maxwell_table_n8();
  const auto fhat = forward_transform(anisotropic_gaussian_ic(g), g);
  const auto fast = collide(fhat, t, g);
  const int h = g.n() / 2 - 1;
  const auto axis_w = [&](int k) { return std::abs(k) > h ? 0.0 : (std::abs(k) == h ? 0.5 : 1.0) * g.dzeta(); };
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto k = pick(rng);
    const auto kv = g.wavenumbers(k);
    cplx s = 0.0;
    if (std::abs(kv[0]) <= h && std::abs(kv[1]) <= h && std::abs(kv[2]) <= h) {
      for (std::size_t m = 0; m < g.size(); ++m) {
        const auto mv = g.wavenumbers(m);
        const MultiIndex d{kv[0] - mv[0], kv[1] - mv[1], kv[2] - mv[2]};
        if (std::abs(d[0]) > h || std::abs(d[1]) > h || std::abs(d[2]) > h) continue;
        const double w = axis_w(mv[0]) * axis_w(mv[1]) * axis_w(mv[2]);
        s += t(k, m) * fhat[m] * fhat[g.index_of_wavenumbers(d)] * w;
      }
    }
    EXPECT_LT(std::abs(fast[k] - s), 1e-13 * (std::abs(s) + 1e-8));
  }
}

TEST(Collide, FrequencyWeights) {
  const auto g = build_grid(8, 5.0);
  const auto w = frequency_weights(g);
  const double d3 = std::pow(g.dzeta(), 3);
  EXPECT_EQ(w[g.index_of_wavenumbers({-4, 0, 0})], 0.0);
  EXPECT_DOUBLE_EQ(w[g.index_of_wavenumbers({0, 0, 0})], d3);
  EXPECT_DOUBLE_EQ(w[g.index_of_wavenumbers({3, 0, 0})], 0.5 * d3);
  EXPECT_DOUBLE_EQ(w[g.index_of_wavenumbers({-3, 3, 1})], 0.25 * d3);
}

TEST(Collide, RejectsMismatchedTable) {
  const auto g = build_grid(8, 4.0);
  EXPECT_THROW(collide(std::vector<cplx>(g.size()), maxwell_table_n8(), g), MetadataMismatch);
  EXPECT_THROW(CollisionOperator(g, maxwell_table_n8()), MetadataMismatch);
}

TEST(CollisionOperator, RealOutputAndSpectralMassIdentity) {
  const auto g = build_grid(8, 5.0);
  CollisionOperator op(g, maxwell_table_n8());
  for (const auto& f : {two_maxwellian_ic(g), anisotropic_gaussian_ic(g), shell_ic(g)}) {
    const auto r = op.evaluate(f);
    EXPECT_EQ(r.qhat_zero, cplx(0.0));
    EXPECT_LE(r.relative_imag_residue, 1e-8);
    EXPECT_LE(std::abs(r.mass_residue), 1e-10);
    double l1 = 0.0;
    for (std::size_t j = 0; j < r.q.size(); ++j) l1 += g.quad_weights()[j] * std::abs(r.q[j]);
    EXPECT_LE(std::abs(r.mass_residue), 1e-13 * l1 + 1e-18);
  }
}

// ---------------------------------------------------------------- direct oracle

TEST(DirectOracle, VanishesOnMaxwellian) {
  const auto g = build_grid(8, 5.0);
  const auto m = [](const Vec3& v) { return std::pow(2 * pi, -1.5) * std::exp(-0.5 * norm2(v)); };
  const auto q = direct_collision_oracle(m, make_kernel(0.0, IsotropicConstant{}), g,
                                         {.v_panels = 3, .v_order = 6, .theta_order = 10, .psi_order = 10});
  EXPECT_LE(max_abs(q), 1e-3 * std::pow(2 * pi, -1.5));
}

TEST(DirectOracle, ConservesMassOfTwoMaxwellians) {
  const auto g = build_grid(8, 5.0);
  const auto f = [](const Vec3& v) { return two_maxwellian_value(v); };
  const auto q = direct_collision_oracle(f, make_kernel(0.0, IsotropicConstant{}), g,
                                         {.v_panels = 3, .v_order = 6, .theta_order = 10, .psi_order = 10});
  double mass = 0.0, l1 = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    mass += g.quad_weights()[j] * q[j];
    l1 += g.quad_weights()[j] * std::abs(q[j]);
  }
  // the node sum of Q on a dv = 1.25 grid is itself only a few-percent quadrature
  EXPECT_LE(std::abs(mass), 3e-2 * l1);
  EXPECT_GT(max_abs(q), 1e-3);  // a genuinely non-equilibrium state
}

TEST(DirectOracle, TrilinearFieldReproducesNodesAndVanishesOutside) {
  const auto g = build_grid(8, 3.0);
  const auto v = random_values(g.size(), 4);
  const TrilinearField f(g, v);
  for (std::size_t j = 0; j < g.size(); j += 37) EXPECT_NEAR(f(g.velocity(j)), v[j], 1e-14);
  EXPECT_EQ(f({3.5, 0, 0}), 0.0);
  EXPECT_EQ(f({0, -3.1, 0}), 0.0);
  // linear in between two nodes along an axis
  const Vec3 a = g.velocity(g.index_of({2, 3, 4})), b = g.velocity(g.index_of({3, 3, 4}));
  EXPECT_NEAR(f(0.5 * (a + b)), 0.5 * (v[g.index_of({2, 3, 4})] + v[g.index_of({3, 3, 4})]), 1e-14);
}

TEST(DirectOracle, RefusesStrongGrazing) {
  const auto g = build_grid(4, 3.0);
  const std::vector<double> f(g.size(), 1.0);
  EXPECT_THROW(direct_collision_oracle(f, make_kernel(-3.0, GrazingRutherford{1e-3}), g), InvalidArgument);
}
