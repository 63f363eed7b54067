#pragma once

#include <cmath>

namespace specboltz {

/// Bessel function of the first kind, order zero.
///
/// Delegates to the C library's j0 (rational approximations on [0, 8],
/// Hankel asymptotic form beyond), absolute accuracy ~1e-16.
inline double bessel_j0(double x) { return ::j0(x); }

/// J0(x) - 1 without cancellation for small |x|.
inline double bessel_j0m1(double x) {
  const double q = 0.25 * x * x;
  if (q >= 0.25) return ::j0(x) - 1.0;
  // sum_{k>=1} (-q)^k / (k!)^2; q < 1/4 so 12 terms reach full precision
  double term = -q;
  double sum = term;
  for (int k = 2; k <= 12; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

}  // namespace specboltz
