#pragma once

// Small numeric utilities shared across modules: compensated summation,
// adaptive Simpson quadrature and Gauss-Legendre nodes.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace polaron {

// Kahan-compensated accumulator; makes sums independent of grouping to
// ~1 ulp so reported norms are reproducible.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0, c_ = 0;
};

namespace detail {
inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-12,
                        int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = detail::simpson(a, b, fa, fm, fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integrate with forced breakpoints (branch points of the integrand).
template <class F>
double adaptive_simpson_split(const F& f, double a, double b, std::vector<double> breaks,
                              double tol = 1e-12) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = std::max(a, breaks[i]);
    const double hi = std::min(b, breaks[i + 1]);
    if (hi > lo) total += adaptive_simpson(f, lo, hi, tol);
  }
  return total;
}

// 20-point Gauss-Legendre rule on [0,1]; exact for polynomial degree 39 and
// ~1e-15 for the entire integrands used in the shift-property checks.
struct GaussLegendre01 {
  static constexpr int n = 20;
  std::array<double, n> x{}, w{};
  GaussLegendre01() {
    // Nodes/weights on [-1,1] (Abramowitz-Stegun), mapped to [0,1].
    static const double xs[10] = {
        0.0765265211334973, 0.2277858511416451, 0.3737060887154195, 0.5108670019508271,
        0.6360536807265150, 0.7463319064601508, 0.8391169718222188, 0.9122344282513259,
        0.9639719272779138, 0.9931285991850949};
    static const double ws[10] = {
        0.1527533871307258, 0.1491729864726037, 0.1420961093183820, 0.1316886384491766,
        0.1181945319615184, 0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
        0.0406014298003869, 0.0176140071391521};
    for (int i = 0; i < 10; ++i) {
      x[static_cast<std::size_t>(9 - i)] = 0.5 * (1.0 - xs[i]);
      x[static_cast<std::size_t>(10 + i)] = 0.5 * (1.0 + xs[i]);
      w[static_cast<std::size_t>(9 - i)] = 0.5 * ws[i];
      w[static_cast<std::size_t>(10 + i)] = 0.5 * ws[i];
    }
  }
};

inline const GaussLegendre01& gauss_legendre_01() {
  static const GaussLegendre01 rule;
  return rule;
}

}  // namespace polaron
