#pragma once

// Computable endpoints of the lower-bound argument: theta, the error scale
// d, the drive b_t with its derivative, f(t) = e^{-t} + t - 1, the integral
// solution h_t and the final floor. All unnamed constants are set to 1 and
// every output is a scale with constants suppressed.
//
// k-sums run over the full interaction support (both +-k); see the
// per-direction convention note in patches.hpp.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "polaron/coherent.hpp"
#include "polaron/lattice.hpp"
#include "polaron/numeric.hpp"

namespace polaron {

enum class ThetaMode { Exact, ClosedForm };

struct FloorParams {
  double lambda = 1.0;
  double kF = 0;
  double beta = 0;
  double M = 0;
  double N = 0;
  double delta = 0;
  Potential V;
  ThetaMode theta_mode = ThetaMode::ClosedForm;
  const PairWeightTable* weights = nullptr;  // required for ThetaMode::Exact
};

// ||h_y||^2: exact from the pair table, or the closed form
// lambda^2 pi kF^2 sum_{supp V} V(k)^2 |k|.
inline double coupling_norm_sq(const FloorParams& p) {
  if (p.theta_mode == ThetaMode::Exact) {
    if (!p.weights) throw std::invalid_argument("coupling_norm_sq: exact mode needs weights");
    KahanSum acc;
    for (std::size_t gi = 0; gi < p.weights->gamma.size(); ++gi) {
      const double v = p.V(p.weights->gamma[gi]);
      for (const auto& e : p.weights->entries[gi])
        acc.add(p.lambda * p.lambda * v * v * static_cast<double>(e.count_sq));
    }
    return acc.value();
  }
  KahanSum acc;
  for (const auto& k : p.V.support())
    if (!k.is_zero()) acc.add(p.V(k) * p.V(k) * k.norm());
  return p.lambda * p.lambda * std::numbers::pi * p.kF * p.kF * acc.value();
}

// theta = ||h_y|| + (2/kF) ||h_y||^2
inline double theta_of(const FloorParams& p) {
  const double h2 = coupling_norm_sq(p);
  return std::sqrt(h2) + 2.0 * h2 / p.kF;
}

// d = max{ M N^{-2/3+delta}, beta / (kF lambda) }, constants set to 1.
inline double d_of(const FloorParams& p) {
  const double lattice_term = p.M * std::pow(p.N, -2.0 / 3.0 + p.delta);
  const double impurity_term = (p.beta == 0) ? 0.0 : p.beta / (p.kF * p.lambda);
  return std::max(lattice_term, impurity_term);
}

// db/dt = pi lambda^2 kF sum_k V(k)^2 [ chi(2 kF |k| t > pi/2) / (2 kF |k| t)
//                                     + chi(<=) 8 kF |k| t / pi^2 ]
inline double b_dot(const FloorParams& p, double t) {
  if (t < 0) throw std::invalid_argument("b_dot: t must be >= 0");
  if (t == 0) return 0.0;
  KahanSum acc;
  for (const auto& k : p.V.support()) {
    if (k.is_zero()) continue;
    const double v2 = p.V(k) * p.V(k);
    const double x = 2.0 * p.kF * k.norm() * t;
    if (x > std::numbers::pi / 2.0)
      acc.add(v2 / x);
    else
      acc.add(v2 * 4.0 * x / (std::numbers::pi * std::numbers::pi));
  }
  return std::numbers::pi * p.lambda * p.lambda * p.kF * acc.value();
}

// Closed antiderivative of b_dot, continuous across each branch point
// t*_k = pi / (4 kF |k|): quadratic below, logarithmic above.
inline double b_of(const FloorParams& p, double t) {
  if (t < 0) throw std::invalid_argument("b_of: t must be >= 0");
  KahanSum acc;
  for (const auto& k : p.V.support()) {
    if (k.is_zero()) continue;
    const double v2 = p.V(k) * p.V(k);
    const double a = 2.0 * p.kF * k.norm();  // x = a t
    const double tstar = std::numbers::pi / (2.0 * a);
    if (t <= tstar) {
      acc.add(v2 * 2.0 * a * t * t / (std::numbers::pi * std::numbers::pi));
    } else {
      const double quad = v2 * 2.0 * a * tstar * tstar / (std::numbers::pi * std::numbers::pi);
      acc.add(quad + v2 * std::log(t / tstar) / a);
    }
  }
  return std::numbers::pi * p.lambda * p.lambda * p.kF * acc.value();
}

// f(t) = e^{-t} + t - 1, via expm1 so small t does not cancel.
inline double f_of(double t) {
  if (t < 0) throw std::invalid_argument("f_of: t must be >= 0");
  return std::expm1(-t) + t;
}

inline std::vector<double> branch_points(const FloorParams& p, double t) {
  std::vector<double> pts;
  for (const auto& k : p.V.support()) {
    if (k.is_zero()) continue;
    const double tstar = std::numbers::pi / (4.0 * p.kF * k.norm());
    if (tstar < t) pts.push_back(tstar);
  }
  return pts;
}

// h_t = e^{-theta t} int_0^t b_dot(s) e^{theta s} ds - d,
// the stated solution of h = b - theta int_0^t h with h_0 = -d. The stated
// formula solves dh/dt = db/dt - theta (h + d); differentiating the integral
// equation directly instead gives dh/dt = db/dt - theta h, which differs by
// -theta d. Both residuals are exposed for reporting.
inline double h_of(const FloorParams& p, double t, double tol = 1e-12) {
  if (t < 0) throw std::invalid_argument("h_of: t must be >= 0");
  const double theta = theta_of(p);
  const double d = d_of(p);
  if (t == 0) return -d;
  const double integral = adaptive_simpson_split(
      [&](double s) { return b_dot(p, s) * std::exp(theta * (s - t)); }, 0.0, t,
      branch_points(p, t), tol);
  return integral - d;
}

struct OdeResiduals {
  double stated = 0;   // dh/dt - db/dt + theta (h + d)
  double integral = 0; // dh/dt - db/dt + theta h
};

inline OdeResiduals h_ode_residuals(const FloorParams& p, double t, double fd_step = 1e-5) {
  const double theta = theta_of(p);
  const double d = d_of(p);
  const double hm = h_of(p, t - fd_step), hp = h_of(p, t + fd_step);
  const double dh = (hp - hm) / (2.0 * fd_step);
  const double h = h_of(p, t);
  const double db = b_dot(p, t);
  return {dh - db + theta * (h + d), dh - db + theta * h};
}

// Displayed floor (lambda^2 kF^2 / theta^2 pi) sum_k V^2 |k|
// min{ f(theta t), f(pi theta / (4 kF |k|)) } - d, plus the pieces callers
// need to confirm the O(1) behavior at t ~ 1/(lambda kF).
struct FloorResult {
  double floor = 0;      // main - d
  double main = 0;       // constant-suppressed C(t) scale
  double d = 0;
  double theta = 0;
  double theta_t = 0;
};

inline FloorResult corollary_floor(const FloorParams& p, double t) {
  if (t < 0) throw std::invalid_argument("corollary_floor: t must be >= 0");
  FloorResult r;
  r.theta = theta_of(p);
  r.d = d_of(p);
  r.theta_t = r.theta * t;
  KahanSum acc;
  for (const auto& k : p.V.support()) {
    if (k.is_zero()) continue;
    const double v2 = p.V(k) * p.V(k);
    const double cap = std::numbers::pi * r.theta / (4.0 * p.kF * k.norm());
    acc.add(v2 * k.norm() * std::min(f_of(r.theta_t), f_of(cap)));
  }
  r.main = p.lambda * p.lambda * p.kF * p.kF / (r.theta * r.theta * std::numbers::pi) *
           acc.value();
  r.floor = r.main - r.d;
  return r;
}

}  // namespace polaron
