#pragma once

// Unitary propagation e^{-iHt} psi for hermitian generators: dense
// eigendecomposition below a dimension threshold (cached for reuse across a
// time grid), Lanczos/Krylov with adaptive substeps above it. The same
// machinery exponentiates anti-hermitian Weyl generators through
// e^{B} = e^{-i (iB)}.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "polaron/fock.hpp"

namespace polaron {

struct KrylovOptions {
  int subspace = 30;
  double tol = 1e-10;       // local error target per step
  int max_substeps = 4096;
};

namespace detail {

// One Lanczos pass from v (assumed normalized); returns the Krylov basis V,
// tridiagonal coefficients (alpha, beta) and the happy-breakdown flag.
template <class Op>
struct LanczosData {
  std::vector<Vec> V;
  std::vector<double> alpha, beta;  // beta[j] couples j and j+1
  bool breakdown = false;
};

template <class Op>
LanczosData<Op> lanczos(const Op& H, const Vec& v, int m) {
  LanczosData<Op> d;
  d.V.push_back(v);
  Vec w;
  for (int j = 0; j < m; ++j) {
    H.apply(d.V[static_cast<std::size_t>(j)], w);
    if (j > 0) w -= d.beta[static_cast<std::size_t>(j - 1)] * d.V[static_cast<std::size_t>(j - 1)];
    const double a = std::real(d.V[static_cast<std::size_t>(j)].dot(w));
    d.alpha.push_back(a);
    w -= a * d.V[static_cast<std::size_t>(j)];
    // full reorthogonalization keeps the basis clean at desk scale
    for (std::size_t i = 0; i < d.V.size(); ++i) w -= d.V[i].dot(w) * d.V[i];
    const double b = w.norm();
    if (b < 1e-14) {
      d.breakdown = true;
      break;
    }
    d.beta.push_back(b);
    d.V.push_back(w / b);
  }
  return d;
}

inline Eigen::VectorXcd tridiag_expv(const std::vector<double>& alpha,
                                     const std::vector<double>& beta, double t) {
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  Eigen::VectorXcd phases(m);
  for (int i = 0; i < m; ++i)
    phases[i] = std::exp(cplx(0.0, -t * es.eigenvalues()[i]));
  return es.eigenvectors().cast<cplx>() * phases.asDiagonal() *
         es.eigenvectors().row(0).transpose().cast<cplx>();
}

}  // namespace detail

// e^{-iHt} v by Lanczos with adaptive substeps. Throws when the step count
// budget is exhausted, reporting the tolerance actually achieved.
template <class Op>
Vec krylov_expv(const Op& H, const Vec& v, double t, const KrylovOptions& opt = {}) {
  const double vnorm = v.norm();
  if (vnorm == 0 || t == 0) return v;
  Vec cur = v / vnorm;
  double remaining = t;
  double dt = t;
  int steps = 0;
  double last_err = 0;
  const double sign = (t >= 0) ? 1.0 : -1.0;
  while (std::abs(remaining) > 1e-15 * std::abs(t)) {
    if (++steps > opt.max_substeps)
      throw std::runtime_error(
          "krylov_expv: substep budget exhausted at t remaining " +
          std::to_string(remaining) + ", achieved local error " +
          std::to_string(last_err) + " against tolerance " + std::to_string(opt.tol));
    if (std::abs(dt) > std::abs(remaining)) dt = remaining;
    auto lan = detail::lanczos(H, cur, opt.subspace);
    const int m = static_cast<int>(lan.alpha.size());
    if (lan.breakdown) {
      // exact propagation inside the invariant subspace
      const auto y = detail::tridiag_expv(lan.alpha, lan.beta, remaining);
      Vec next = Vec::Zero(cur.size());
      for (int i = 0; i < m; ++i) next += y[i] * lan.V[static_cast<std::size_t>(i)];
      cur = next;
      break;
    }
    for (;;) {
      const auto y = detail::tridiag_expv(lan.alpha, lan.beta, dt);
      // residual estimate: coupling through the last Krylov vector
      const double err = lan.beta.back() * std::abs(y[m - 1]) * std::abs(dt);
      last_err = err;
      if (err <= opt.tol || std::abs(dt) < 1e-15 * std::abs(t)) {
        Vec next = Vec::Zero(cur.size());
        for (int i = 0; i < m; ++i) next += y[i] * lan.V[static_cast<std::size_t>(i)];
        cur = next;
        cur.normalize();  // Lanczos preserves the norm; renormalize roundoff only
        remaining -= dt;
        if (err < 0.1 * opt.tol) dt *= 1.5;  // cautious growth
        break;
      }
      dt *= 0.5;
      if (sign * dt <= 0) throw std::runtime_error("krylov_expv: step underflow");
    }
  }
  return vnorm * cur;
}

// Dense propagator with a cached eigendecomposition; reusable across a grid.
class DensePropagator {
 public:
  explicit DensePropagator(const DMat& H) {
    Eigen::SelfAdjointEigenSolver<DMat> es(H);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("DensePropagator: eigendecomposition failed");
    U_ = es.eigenvectors();
    evals_ = es.eigenvalues();
  }
  explicit DensePropagator(const SpMat& H) : DensePropagator(DMat(H)) {}

  // e^{-iHt} v
  Vec apply(double t, const Vec& v) const {
    Vec w = U_.adjoint() * v;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w[i] *= std::exp(cplx(0.0, -t * evals_[i]));
    return U_ * w;
  }

  DMat matrix(double t) const {
    Eigen::VectorXcd phases(evals_.size());
    for (Eigen::Index i = 0; i < evals_.size(); ++i)
      phases[i] = std::exp(cplx(0.0, -t * evals_[i]));
    return U_ * phases.asDiagonal() * U_.adjoint();
  }

 private:
  DMat U_;
  Eigen::VectorXd evals_;
};

inline constexpr std::size_t dense_propagation_threshold = 2000;

// One-shot e^{-iHt} psi: dense below the threshold, Krylov above.
template <class Op>
Vec propagate(const Op& H, const Vec& psi, double t, const KrylovOptions& opt = {}) {
  if (H.dim() != static_cast<std::size_t>(psi.size()))
    throw std::invalid_argument("propagate: dimension mismatch");
  if (t == 0) return psi;
  if (H.dim() <= dense_propagation_threshold) {
    DMat Hd(static_cast<Eigen::Index>(H.dim()), static_cast<Eigen::Index>(H.dim()));
    Vec e = Vec::Zero(static_cast<Eigen::Index>(H.dim()));
    Vec col;
    for (std::size_t j = 0; j < H.dim(); ++j) {
      e[static_cast<Eigen::Index>(j)] = 1.0;
      H.apply(e, col);
      Hd.col(static_cast<Eigen::Index>(j)) = col;
      e[static_cast<Eigen::Index>(j)] = 0.0;
    }
    return DensePropagator(Hd).apply(t, psi);
  }
  return krylov_expv(H, psi, t, opt);
}

// e^{B} v for anti-hermitian B: e^{B} = e^{-i(iB)} with iB hermitian.
struct ScaledHermitian {
  const SpMat* B;  // anti-hermitian
  std::size_t dim() const { return static_cast<std::size_t>(B->rows()); }
  void apply(const Vec& x, Vec& y) const { y = cplx(0, 1) * (*B * x); }
};

inline Vec weyl_apply(const SpMat& B, const Vec& v, const KrylovOptions& opt = {}) {
  ScaledHermitian op{&B};
  return krylov_expv(op, v, 1.0, opt);
}

// Dense Weyl matrix e^{B} for desk dimensions.
inline DMat weyl_dense(const SpMat& B) {
  const DMat iB = cplx(0, 1) * DMat(B);
  return DensePropagator(iB).matrix(1.0);
}

}  // namespace polaron
