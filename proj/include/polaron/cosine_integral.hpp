#pragma once

// Cosine integral Ci(x) = gamma + ln x + int_0^x (cos t - 1)/t dt for x > 0.
//
// Power series up to the switch point x = 4; beyond it the large-argument
// regime is evaluated through the Lentz continued fraction of E1(ix), which
// reaches ~1e-15 absolute error where a truncated asymptotic series could
// not meet the 1e-12 contract near the switch.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace polaron {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;
inline constexpr double ci_switch_point = 4.0;

namespace detail {

// sum_{n>=1} (-1)^n x^{2n} / (2n (2n)!)  ==  Ci(x) - gamma - ln x
inline double ci_series_tail(double x) {
  const double x2 = x * x;
  double term = 1.0;  // (-1)^n x^{2n} / (2n)!
  double sum = 0.0;
  for (int n = 1; n <= 120; ++n) {
    term *= -x2 / ((2.0 * n - 1.0) * (2.0 * n));
    const double add = term / (2.0 * n);
    sum += add;
    if (std::abs(add) < 1e-18 * (std::abs(sum) + 1e-30)) break;
  }
  return sum;
}

// E1(z) by modified Lentz continued fraction; valid away from the negative
// real axis, used here with z = i x, x > 0.
inline std::complex<double> e1_continued_fraction(std::complex<double> z) {
  const double tiny = 1e-300;
  std::complex<double> b = z + 1.0;
  std::complex<double> c = 1.0 / tiny;
  std::complex<double> d = 1.0 / b;
  std::complex<double> h = d;
  for (int i = 1; i <= 300; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const std::complex<double> del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-z);
}

}  // namespace detail

inline double cosine_integral(double x) {
  if (!(x > 0)) throw std::invalid_argument("cosine_integral: x must be > 0");
  if (x <= ci_switch_point)
    return euler_gamma + std::log(x) + detail::ci_series_tail(x);
  const std::complex<double> e1 = detail::e1_continued_fraction({0.0, x});
  return -e1.real();  // Ci(x) = -Re E1(ix)
}

// log x - Ci(x) + gamma, the building block of the closed-form norm;
// evaluated by its series x^2/4 - x^4/96 + ... for small x so the s -> 0
// limit is exact instead of a cancellation.
inline double log_minus_ci_plus_gamma(double x) {
  if (x < 0) throw std::invalid_argument("log_minus_ci_plus_gamma: x must be >= 0");
  if (x == 0) return 0.0;
  if (x <= ci_switch_point) return -detail::ci_series_tail(x);
  return std::log(x) - cosine_integral(x) + euler_gamma;
}

}  // namespace polaron
