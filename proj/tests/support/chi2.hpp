#pragma once

// Chi-square survival function via the regularized incomplete gamma function
// (series for x < a + 1, continued fraction otherwise; Numerical Recipes
// style). Accurate to ~1e-10, far tighter than the p > 0.01 uses here.

#include <cmath>
#include <stdexcept>

namespace support {

inline double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-14)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gamma series failed to converge");
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14)
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw std::runtime_error("gamma continued fraction failed to converge");
}

// P(X > x) for X ~ chi-square with df degrees of freedom.
inline double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  const double a = df / 2.0, xh = x / 2.0;
  if (xh < a + 1.0) return 1.0 - gamma_p_series(a, xh);
  return gamma_q_contfrac(a, xh);
}

}  // namespace support
