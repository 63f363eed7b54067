#include <gtest/gtest.h>

#include <clocale>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <specboltz/config.hpp>
#include <specboltz/diagnostics.hpp>

using namespace specboltz;
constexpr double pi = std::numbers::pi;

// Discrete trapezoid moments of the unit Maxwellian on N = 16, L = 5 (numpy).
// The node set -L, ..., L - dv is one-sided, so the discrete mean velocity is
// -4.04e-5 per axis rather than 0 and the temperature is 1 - 1.9e-4.
TEST(Moments, UnitMaxwellianOnDeskGrid) {
  const auto g = build_grid(16, 5.0);
  const auto m = moments(maxwellian(1.0, {}, 1.0, g), g);
  EXPECT_NEAR(m.mass, 0.9999695179978123, 1e-14);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(m.velocity[a], -4.03777531836239e-05, 1e-15);
  EXPECT_NEAR(m.temperature, 0.9998066338157472, 1e-13);
  // against the continuous values
  EXPECT_NEAR(m.mass, 1.0, 1e-4);
  EXPECT_LE(norm(m.velocity), 1e-4);
  EXPECT_NEAR(m.temperature, 1.0, 5e-4);
  EXPECT_FALSE(m.degenerate);
}

TEST(Moments, ZeroStateIsDegenerate) {
  const auto g = build_grid(8, 5.0);
  const auto m = moments(std::vector<double>(g.size(), 0.0), g);
  EXPECT_EQ(m.mass, 0.0);
  EXPECT_TRUE(m.degenerate);
  EXPECT_TRUE(std::isnan(m.temperature));
  EXPECT_TRUE(std::isnan(m.velocity.x));
}

TEST(Moments, ShellMass) {
  const auto g = build_grid(16, 5.0);
  const auto m = moments(shell_ic(g), g);
  EXPECT_NEAR(m.mass, 0.24959431319227965, 1e-15);      // numpy trapezoid sum
  EXPECT_NEAR(m.mass, 0.24960189032328177792, 1e-4 * 0.2496);  // mpmath radial integral
}

TEST(Moments, LinearInState) {
  const auto g = build_grid(8, 5.0);
  const auto a = two_maxwellian_ic(g), b = anisotropic_gaussian_ic(g);
  std::vector<double> c(a.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 2.0 * a[i] - 0.5 * b[i];
  const auto ma = moments(a, g), mb = moments(b, g), mc = moments(c, g);
  EXPECT_NEAR(mc.mass, 2.0 * ma.mass - 0.5 * mb.mass, 1e-14);
  EXPECT_NEAR(mc.energy, 2.0 * ma.energy - 0.5 * mb.energy, 1e-13);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(mc.momentum[k], 2.0 * ma.momentum[k] - 0.5 * mb.momentum[k], 1e-14);
}

TEST(Entropy, SkipsNonPositiveValues) {
  const auto g = build_grid(4, 2.0);
  std::vector<double> f(g.size(), 0.5);
  f[3] = -0.25;
  f[7] = 0.0;
  const auto w = g.quad_weights();
  double expected = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    if (f[j] > 0) expected += w[j] * f[j] * std::log(f[j]);
  const auto h = entropy(f, g);
  EXPECT_NEAR(h.value, expected, 1e-15);
  EXPECT_NEAR(h.skipped_mass, w[3] * 0.25, 1e-16);
  const auto m = moments(f, g);
  EXPECT_EQ(m.min_f, -0.25);
  EXPECT_EQ(m.entropy, h.value);
}

TEST(Maxwellian, PeakScalingAndErrors) {
  const auto g = build_grid(8, 4.0);
  const auto f = maxwellian(1.0, {}, 1.0, g);
  EXPECT_NEAR(f[g.index_of({4, 4, 4})], 0.0634936359342410, 1e-15);
  const auto f2 = maxwellian(2.0, {}, 1.0, g);
  for (std::size_t j = 0; j < f.size(); ++j) EXPECT_EQ(f2[j], 2.0 * f[j]);
  const auto shifted = maxwellian(1.0, {1.0, 0.0, -1.0}, 0.5, g);
  EXPECT_NEAR(shifted[g.index_of({5, 4, 3})], std::pow(pi, -1.5), 1e-15);
  EXPECT_THROW(maxwellian(0.0, {}, 1.0, g), InvalidArgument);
  EXPECT_THROW(maxwellian(1.0, {}, -1.0, g), InvalidArgument);
}

TEST(Maxwellian, DistanceToOwnEquilibriumIsTiny) {
  const auto g = build_grid(16, 5.0);
  const auto f = maxwellian(1.0, {}, 1.0, g);
  EXPECT_LT(distance_to_maxwellian(f, g), 1e-4);
  EXPECT_GT(distance_to_maxwellian(shell_ic(g), g), 1e-3);
  EXPECT_THROW(distance_to_maxwellian(std::vector<double>(g.size(), 0.0), g), NumericalError);
}

TEST(ShellIc, FormulaValues) {
  EXPECT_NEAR(shell_value({1.5, 0.0, 0.0}), 0.01, 1e-17);
  EXPECT_NEAR(shell_value({0.0, 0.9, 1.2}), 0.01, 1e-17);
  EXPECT_NEAR(shell_value({}), 4.5399929762484851536e-7, 1e-21);
  const auto g = build_grid(8, 4.0);
  const auto f = shell_ic(g);
  // nodes related by an axis permutation / sign flip that stays on the grid share |v|
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto m = g.multi_index(j);
    EXPECT_EQ(f[j], f[g.index_of({m[2], m[0], m[1]})]);
    if (m[0] > 0) {
      EXPECT_EQ(f[j], f[g.index_of({8 - m[0], m[1], m[2]})]);
    }
  }
}

TEST(Slice, MaxwellianAndShellProfiles) {
  const auto g = build_grid(16, 5.0);
  const auto f = maxwellian(1.0, {}, 1.0, g);
  const auto rows = slice(f, g, 0, {8, 8});
  ASSERT_EQ(rows.size(), 16u);
  for (int d = 1; d < 8; ++d) EXPECT_EQ(rows[8 + d].f, rows[8 - d].f);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_LE(rows[i].f, rows[8].f);
  EXPECT_EQ(rows[8].v, 0.0);

  const auto s = slice(shell_ic(g), g, 0, {8, 8});
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    if (s[i].f > s[i - 1].f && s[i].f > s[i + 1].f) peaks.push_back(s[i].v);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks[0], -1.5, g.dv());
  EXPECT_NEAR(peaks[1], 1.5, g.dv());
}

TEST(Slice, ValuesAreNodeLookups) {
  const auto g = build_grid(8, 3.0);
  std::vector<double> f(g.size());
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = static_cast<double>(j);
  for (int axis = 0; axis < 3; ++axis) {
    const auto rows = slice(f, g, axis, {2, 5});
    for (int j = 0; j < 8; ++j) {
      MultiIndex m{};
      int o = 0;
      for (int a = 0; a < 3; ++a) m[a] = a == axis ? j : (o++ == 0 ? 2 : 5);
      EXPECT_EQ(rows[j].f, f[g.index_of(m)]);
      EXPECT_EQ(rows[j].v, g.node(j));
    }
  }
  EXPECT_THROW(slice(f, g, 3, {0, 0}), InvalidArgument);
  EXPECT_THROW(slice(f, g, 0, {8, 0}), InvalidArgument);
  EXPECT_THROW(slice(f, g, 0, {0, -1}), InvalidArgument);
}

TEST(Csv, ShortestRoundTripFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.5e-10), "-2.5e-10");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  std::ostringstream o;
  write_csv_row(o, {1.5, -2.0, 3e-7});
  EXPECT_EQ(o.str(), "1.5,-2,3e-07\n");
}

TEST(Csv, LocaleIndependent) {
  const char* prev = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = prev ? prev : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) GTEST_SKIP() << "de_DE locale not installed";
  EXPECT_EQ(format_double(0.25), "0.25");
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(Csv, MomentsRowAndSlice) {
  const auto g = build_grid(8, 5.0);
  const auto f = two_maxwellian_ic(g);
  std::ostringstream o;
  write_moments_row(o, 0.5, moments(f, g));
  std::string line = o.str();
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
  EXPECT_EQ(std::string(moments_csv_header), "t,rho,Vx,Vy,Vz,energy,T,H,min_f");
  std::ostringstream s;
  const auto rows = slice(f, g, 1, {4, 4});
  write_slice_csv(s, rows);
  EXPECT_EQ(s.str().substr(0, 4), "v,f\n");
  const std::string text = s.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}

// ---------------------------------------------------------------- config

TEST(Config, ParsesAllKeys) {
  const auto c = parse_config_string(R"(# paper run
N = 16
L = 5
lambda = -3
beta = 1
kernel = grazing
eps = 1e-4
kernel_value = 0.1
operator = boltzmann
Kn = 2
dt = 0.001
t_final = 5   # comment
scheme = rk2
ic = shell
output_dir = out/paper
cache_path = /tmp/x.bwt
output_every = 250
threads = 3
)");
  EXPECT_EQ(c.n, 16);
  EXPECT_EQ(c.lambda, -3.0);
  EXPECT_EQ(c.kernel, "grazing");
  EXPECT_EQ(c.eps, 1e-4);
  EXPECT_EQ(c.kn, 2.0);
  EXPECT_EQ(c.solver().scheme, Scheme::RK2);
  EXPECT_EQ(c.solver().steps(), 5000);
  EXPECT_EQ(c.output_dir, "out/paper");
  EXPECT_EQ(c.resolved_cache_path(), "/tmp/x.bwt");
  EXPECT_EQ(c.output_every, 250);
  EXPECT_EQ(c.threads, 3);
  EXPECT_NO_THROW(c.validate());
  const auto k = c.kernel_spec();
  EXPECT_EQ(k.family(), AngularFamily::GrazingRutherford);
  EXPECT_EQ(k.family_parameter(), 1e-4);
}

TEST(Config, EchoRoundTrips) {
  auto c = parse_config_string("N = 8\nlambda = -1.5\nkernel = grazing\neps = 0.01\ncache_path = c.bwt\n");
  const auto again = parse_config_string(c.echo());
  EXPECT_EQ(again.echo(), c.echo());
  EXPECT_EQ(again.lambda, -1.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config_string("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("N = 8\nN = 16\n"), ConfigError);
  EXPECT_THROW(parse_config_string("N 8\n"), ConfigError);
  EXPECT_THROW(parse_config_string("N = eight\n"), ConfigError);
  EXPECT_THROW(parse_config_string("L = 5x\n"), ConfigError);
  EXPECT_THROW(parse_config_string("= 5\n"), ConfigError);
  EXPECT_THROW(parse_config_string("kernel = wobbly\n").validate(), ConfigError);
  EXPECT_THROW(parse_config_string("scheme = rk4\n").validate(), ConfigError);
  EXPECT_THROW(parse_config_string("operator = fp\n").validate(), ConfigError);
  EXPECT_THROW(parse_config_string("ic = blob\n").validate(), ConfigError);
  EXPECT_THROW(parse_config_string("kernel = tabulated\n").validate(), ConfigError);
  EXPECT_THROW(parse_config_string("N = 7\n").validate(), InvalidArgument);
  EXPECT_THROW(parse_config_string("Kn = 0\n").validate(), InvalidArgument);
  EXPECT_THROW(parse_config_string("lambda = 2\n").validate(), InvalidArgument);
  EXPECT_THROW(load_config("/nonexistent/specboltz.conf"), ConfigError);
  try {
    parse_config_string("N = 8\n\nfoo = 1\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Config, CachePathFromEnvironment) {
  auto c = parse_config_string("N = 8\nkernel = grazing\neps = 0.001\nlambda = -3\n");
  ::setenv(cache_dir_env, "/tmp/sbcache", 1);
  const auto p = c.resolved_cache_path();
  ::unsetenv(cache_dir_env);
  EXPECT_EQ(p.rfind("/tmp/sbcache/", 0), 0u);
  EXPECT_NE(p.find("N8"), std::string::npos);
  EXPECT_NE(p.find("eps0.001"), std::string::npos);
  EXPECT_NE(c.resolved_cache_path(), p);
}

TEST(Config, InitialStates) {
  const auto g = build_grid(8, 5.0);
  for (const char* ic : {"shell", "maxwellian", "two_maxwellian", "anisotropic"}) {
    auto c = parse_config_string(std::string("ic = ") + ic + "\n");
    const auto f = c.initial_state(g);
    EXPECT_EQ(f.size(), g.size());
    EXPECT_GT(moments(f, g).mass, 0.0);
  }
}
