#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "error.hpp"

namespace specboltz::quad {

/// 21-point Kronrod extension of the 10-point Gauss-Legendre rule on [-1, 1]
/// (QUADPACK qk21 constants). Abscissae are listed for x >= 0, descending;
/// odd positions 1, 3, ..., 9 are the Gauss nodes.
struct GaussKronrod21 {
  static constexpr std::array<double, 11> xgk = {
      0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
      0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
      0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
      0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
      0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
      0.000000000000000000000000000000000};
  static constexpr std::array<double, 11> wgk = {
      0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
      0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
      0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
      0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
      0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
      0.149445554002916905664936468389821};
  static constexpr std::array<double, 5> wg = {
      0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
      0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
      0.295524224714752870173892994651338};

  /// The 21 nodes of [-1, 1] in ascending order with Kronrod and Gauss weights
  /// (Gauss weight 0 on Kronrod-only nodes).
  struct Node {
    double x, wk, wg;
  };
  static std::array<Node, 21> nodes() {
    std::array<Node, 21> out{};
    for (int j = 0; j < 10; ++j) {
      const double g = (j % 2 == 1) ? wg[j / 2] : 0.0;
      out[j] = {-xgk[j], wgk[j], g};
      out[20 - j] = {xgk[j], wgk[j], g};
    }
    out[10] = {0.0, wgk[10], 0.0};
    return out;
  }
};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) {
  return std::max(std::abs(v.real()), std::abs(v.imag()));
}
template <std::size_t K>
double magnitude(const std::array<double, K>& v) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::abs(c));
  return m;
}

/// Convergence target: max(abs, rel*|I|, rel_abs_integrand * integral of |f|).
/// The last term keeps integrals that cancel to ~0 from chasing a relative
/// tolerance they cannot reach.
struct Tolerance {
  double abs = 0.0;
  double rel = 1e-8;
  double rel_abs_integrand = 0.0;
  int max_intervals = 500;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  double abs_integral = 0.0;
  int evaluations = 0;
  int intervals = 0;
  bool converged = false;
};

template <class T>
struct Segment {
  double a = 0.0, b = 0.0;
  T value{};
  double error = 0.0;
  double abs_integral = 0.0;
};

/// One G10/K21 panel with the QUADPACK error heuristic.
template <class F>
auto gk21(F& f, double a, double b) {
  using T = std::decay_t<decltype(f(a))>;
  constexpr auto& xgk = GaussKronrod21::xgk;
  constexpr auto& wgk = GaussKronrod21::wgk;
  constexpr auto& wg = GaussKronrod21::wg;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<T, 21> fv;
  for (int j = 0; j < 10; ++j) {
    fv[2 * j] = f(center - half * xgk[j]);
    fv[2 * j + 1] = f(center + half * xgk[j]);
  }
  fv[20] = f(center);

  T resk = fv[20] * wgk[10];
  T resg{};
  double resabs = wgk[10] * magnitude(fv[20]);
  for (int j = 0; j < 10; ++j) {
    const T pair = fv[2 * j] + fv[2 * j + 1];
    resk = resk + pair * wgk[j];
    resabs += wgk[j] * (magnitude(fv[2 * j]) + magnitude(fv[2 * j + 1]));
    if (j % 2 == 1) resg = resg + pair * wg[j / 2];
  }
  const T mean = resk * 0.5;
  double resasc = wgk[10] * magnitude(fv[20] - mean);
  for (int j = 0; j < 10; ++j)
    resasc += wgk[j] * (magnitude(fv[2 * j] - mean) + magnitude(fv[2 * j + 1] - mean));

  const double h = std::abs(half);
  resasc *= h;
  resabs *= h;
  double err = magnitude(resk - resg) * h;
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return Segment<T>{a, b, resk * half, err, resabs};
}

/// Globally adaptive bisection over the panels delimited by `points`
/// (ascending, at least two entries).
template <class F>
auto integrate(F&& f, std::span<const double> points, const Tolerance& tol) {
  using T = std::decay_t<decltype(f(points[0]))>;
  if (points.size() < 2) throw InvalidArgument("quad: need at least two breakpoints");
  std::vector<Segment<T>> heap;
  heap.reserve(points.size() + 64);
  Result<T> out;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) {
      if (points[i + 1] == points[i]) continue;
      throw InvalidArgument("quad: breakpoints must be ascending");
    }
    heap.push_back(gk21(f, points[i], points[i + 1]));
    out.evaluations += 21;
  }
  const auto by_error = [](const Segment<T>& x, const Segment<T>& y) { return x.error < y.error; };
  std::make_heap(heap.begin(), heap.end(), by_error);

  const auto totals = [&] {
    T v{};
    double e = 0.0, s = 0.0;
    for (const auto& seg : heap) {
      v = v + seg.value;
      e += seg.error;
      s += seg.abs_integral;
    }
    out.value = v;
    out.error = e;
    out.abs_integral = s;
  };
  const auto target = [&] {
    return std::max({tol.abs, tol.rel * magnitude(out.value), tol.rel_abs_integrand * out.abs_integral});
  };

  totals();
  while (!heap.empty() && out.error > target() && static_cast<int>(heap.size()) < tol.max_intervals) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const Segment<T> worst = heap.back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // cannot split further
      std::push_heap(heap.begin(), heap.end(), by_error);
      break;
    }
    const auto left = gk21(f, worst.a, mid);
    const auto right = gk21(f, mid, worst.b);
    heap.back() = left;
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    out.evaluations += 42;
    // incremental update, refreshed periodically against drift
    if (heap.size() % 32 == 0) {
      totals();
    } else {
      out.value = out.value + (left.value + right.value - worst.value);
      out.error += left.error + right.error - worst.error;
      out.abs_integral += left.abs_integral + right.abs_integral - worst.abs_integral;
    }
  }
  totals();
  out.intervals = static_cast<int>(heap.size());
  out.converged = out.error <= target();
  return out;
}

template <class F>
auto integrate(F&& f, double a, double b, const Tolerance& tol) {
  const std::array<double, 2> pts{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(pts), tol);
}

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace specboltz::quad
