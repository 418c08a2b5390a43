#pragma once

// Builders for every operator in play: the microscopic Hamiltonian restricted
// to a mode set, its particle-hole pieces (H_0, b, b*, non-bosonizable E),
// the bosonized kinetic energy D_B, the linear coupling Phi(h_y), the
// effective Hamiltonians and the Weyl operator, plus the commutator
// extractions E^lin and E^B.
//
// Static impurity (y = 0) is the default: e^{iky} = 1 and the beta term is
// absent. The Truncated impurity tensors the Fock space with a momentum
// basis {q : |q| <= q_cut}; e^{iky} acts as the shift q -> q+k and shifts
// leaving the cutoff annihilate the state (truncation weight is reported).

#include <optional>
#include <stdexcept>
#include <vector>

#include "polaron/fock.hpp"
#include "polaron/propagate.hpp"

namespace polaron {

struct TermBundle {
  std::vector<Monomial> terms;
  double dropped_weight = 0;  // total |coupling| of hops leaving the mode set
};

// H = sum |p|^2 a*_p a_p + lambda sum_{k in supp V} V(k) sum_p a*_p a_{p-k},
// both momenta inside the mode set. Requires the set to represent every
// V-hop out of the ball.
inline TermBundle micro_terms(const FockSpace& space, const FermiBall& ball,
                              const Potential& V, double lambda,
                              bool require_shell_closure = true) {
  if (require_shell_closure && !covers_interaction_shell(space.modes(), ball, V))
    throw std::invalid_argument(
        "micro_terms: mode set cannot represent a V-hop out of the Fermi ball");
  TermBundle b;
  for (std::size_t i = 0; i < space.n_modes(); ++i) {
    const double e = static_cast<double>(space.modes().modes[i].norm2());
    if (e != 0) b.terms.push_back({e, {{true, i}, {false, i}}});
  }
  for (const auto& k : V.support())
    for (std::size_t i = 0; i < space.n_modes(); ++i) {
      const Momentum p = space.modes().modes[i];
      const Momentum q = p - k;
      const std::size_t j = space.modes().index_of(q);
      if (j == ModeSet::npos) {
        b.dropped_weight += std::abs(lambda * V(k));
        continue;
      }
      b.terms.push_back({lambda * V(k), {{true, i}, {false, j}}});
    }
  return b;
}

// H_0 = sum e(p) a*_p a_p with e = +|p|^2 outside the ball, -|p|^2 inside.
inline std::vector<Monomial> h0_terms(const FockSpace& space, const FermiBall& ball) {
  std::vector<Monomial> t;
  for (std::size_t i = 0; i < space.n_modes(); ++i) {
    const Momentum p = space.modes().modes[i];
    const double e = (ball.contains(p) ? -1.0 : 1.0) * static_cast<double>(p.norm2());
    if (e != 0) t.push_back({e, {{true, i}, {false, i}}});
  }
  return t;
}

inline double dispersion_e(const FermiBall& ball, const Momentum& p) {
  return (ball.contains(p) ? -1.0 : 1.0) * static_cast<double>(p.norm2());
}

// D_B = sum_{k in Gamma, alpha in I_k} eps_alpha(k) c*_alpha(k) c_alpha(k)
inline std::vector<Monomial> db_terms(const FockSpace& space, const PairWeightTable& table) {
  std::vector<Monomial> t;
  for (std::size_t gi = 0; gi < table.gamma.size(); ++gi)
    for (const auto& e : table.entries[gi]) {
      const auto cre = pair_creator_terms(space, e);
      const auto ann = adjoint_terms(cre);
      for (const auto& mc : cre)
        for (const auto& ma : ann) {
          Monomial m;
          m.coef = e.eps * mc.coef * ma.coef;
          m.ops = mc.ops;
          m.ops.insert(m.ops.end(), ma.ops.begin(), ma.ops.end());
          t.push_back(std::move(m));
        }
    }
  return t;
}

// Phi(h) = c*(h) + c(h) with h_alpha(k) = lambda V(k) n_alpha(k) (static).
inline std::vector<Monomial> phi_terms(const FockSpace& space, const CoherentParams& p) {
  std::vector<Monomial> t;
  for (std::size_t gi = 0; gi < p.weights.gamma.size(); ++gi)
    for (const auto& e : p.weights.entries[gi]) {
      const double h = p.coupling(gi, e);
      auto cre = pair_creator_terms(space, e);
      auto ann = adjoint_terms(cre);
      for (auto m : cre) {
        m.coef *= h;
        t.push_back(std::move(m));
      }
      for (auto m : ann) {
        m.coef *= h;
        t.push_back(std::move(m));
      }
    }
  return t;
}

inline std::vector<Monomial> constant_term(double c) {
  if (c == 0) return {};
  return {Monomial{c, {}}};
}

// H_eff = D_B + Phi(h_y) + E_N^pw (static impurity: h_0 = 0)
inline std::vector<Monomial> heff_terms(const FockSpace& space, const CoherentParams& p) {
  auto t = db_terms(space, p.weights);
  auto phi = phi_terms(space, p);
  t.insert(t.end(), phi.begin(), phi.end());
  auto c = constant_term(p.EpW);
  t.insert(t.end(), c.begin(), c.end());
  return t;
}

// H_eff without the linear coupling
inline std::vector<Monomial> heff_tilde_terms(const FockSpace& space, const CoherentParams& p) {
  auto t = db_terms(space, p.weights);
  auto c = constant_term(p.EpW);
  t.insert(t.end(), c.begin(), c.end());
  return t;
}

// Non-bosonizable remainder: hole-hole + particle-particle pieces of the
// transformed interaction,
//   E = lambda sum_k V(k) [ sum_{p,p-k in B_F} a_p a*_{p-k}
//                         + sum_{p,p-k in B_F^c} a*_p a_{p-k} ].
inline TermBundle nonbosonizable_terms(const FockSpace& space, const FermiBall& ball,
                                       const Potential& V, double lambda) {
  TermBundle b;
  for (const auto& k : V.support())
    for (std::size_t i = 0; i < space.n_modes(); ++i) {
      const Momentum p = space.modes().modes[i];
      const Momentum q = p - k;
      const bool p_in = ball.contains(p);
      const std::size_t j = space.modes().index_of(q);
      if (j == ModeSet::npos) {
        if (!p_in) b.dropped_weight += std::abs(lambda * V(k));
        continue;
      }
      const bool q_in = ball.contains(q);
      if (p_in && q_in)
        b.terms.push_back({lambda * V(k), {{false, i}, {true, j}}});  // a_p a*_{p-k}
      else if (!p_in && !q_in)
        b.terms.push_back({lambda * V(k), {{true, i}, {false, j}}});
    }
  return b;
}

// b*(phi) = sum_k phi(k) sum_{p in B_F^c, p-k in B_F} a*_p a*_{p-k} over the
// mode set; for the transformed interaction phi = lambda V (static).
inline std::vector<Monomial> b_dagger_terms(const FockSpace& space, const FermiBall& ball,
                                            const Potential& V, double lambda) {
  std::vector<Monomial> t;
  for (const auto& k : V.support())
    for (std::size_t i = 0; i < space.n_modes(); ++i) {
      const Momentum p = space.modes().modes[i];
      if (ball.contains(p)) continue;
      const Momentum q = p - k;
      if (!ball.contains(q)) continue;
      const std::size_t j = space.modes().index_of(q);
      if (j == ModeSet::npos) continue;
      t.push_back({lambda * V(k), {{true, i}, {true, j}}});
    }
  return t;
}

// Single-k pair sum b(k) = sum_{p in B_F^c, p-k in B_F} a_{p-k} a_p.
inline std::vector<Monomial> b_of_k_terms(const FockSpace& space, const FermiBall& ball,
                                          const Momentum& k) {
  std::vector<Monomial> t;
  for (std::size_t i = 0; i < space.n_modes(); ++i) {
    const Momentum p = space.modes().modes[i];
    if (ball.contains(p)) continue;
    const std::size_t j = space.modes().index_of(p - k);
    if (j == ModeSet::npos || !ball.contains(p - k)) continue;
    t.push_back({1.0, {{false, j}, {false, i}}});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Commutator extractions.

struct CommutatorResidual {
  SparseOperator residual_dagger;  // E* = [A, c*] - eps c*
  double eps = 0;
};

inline CommutatorResidual commutator_residual(const SpMat& A, const SpMat& c_dagger,
                                              double eps) {
  CommutatorResidual r;
  r.eps = eps;
  r.residual_dagger =
      SparseOperator(SpMat(SpMat(A * c_dagger) - SpMat(c_dagger * A) - eps * c_dagger));
  return r;
}

// E^lin from [H_0, c*_alpha(k)] = eps c*_alpha(k) + E^lin*
inline CommutatorResidual commutator_residual_lin(const FockSpace& space,
                                                  const FermiBall& ball,
                                                  const WeightEntry& e) {
  const SpMat H0 = make_sparse(space, h0_terms(space, ball)).mat;
  const SpMat cd = pair_creator(space, e).mat;
  return commutator_residual(H0, cd, e.eps);
}

// E^B from [D_B, c*_alpha(k)] = eps c*_alpha(k) + E^B*
inline CommutatorResidual commutator_residual_bos(const FockSpace& space,
                                                  const PairWeightTable& table,
                                                  const WeightEntry& e) {
  const SpMat DB = make_sparse(space, db_terms(space, table)).mat;
  const SpMat cd = pair_creator(space, e).mat;
  return commutator_residual(DB, cd, e.eps);
}

// ---------------------------------------------------------------------------
// Weyl operator.

inline constexpr std::size_t weyl_dense_threshold = 4000;

inline SparseOperator weyl_generator(const FockSpace& space, const PairWeightTable& table,
                                     const EtaField& eta) {
  SparseOperator B = make_sparse(space, weyl_generator_terms(space, table, eta));
  if (!B.certify_anti_hermitian())
    throw std::runtime_error("weyl_generator: generator is not anti-hermitian");
  return B;
}

// W(eta) = e^{c*(eta) - c(eta)} as an explicit matrix (desk dimensions).
inline SparseOperator weyl_operator(const FockSpace& space, const PairWeightTable& table,
                                    const EtaField& eta) {
  if (space.dim() > weyl_dense_threshold)
    throw std::invalid_argument("weyl_operator: use weyl_apply beyond dense threshold");
  const SparseOperator B = weyl_generator(space, table, eta);
  const DMat W = weyl_dense(B.mat);
  return SparseOperator(W.sparseView());
}

// ---------------------------------------------------------------------------
// Truncated impurity: Fock space tensored with {q : |q| <= q_cut}.

class ImpuritySpace {
 public:
  ImpuritySpace(const FockSpace& fock, double q_cut)
      : fock_(&fock), qmodes_(detail::enumerate_ball(squared_radius_limit(q_cut))) {}

  std::size_t n_q() const { return qmodes_.size(); }
  std::size_t dim() const { return qmodes_.size() * fock_->dim(); }
  const std::vector<Momentum>& qmodes() const { return qmodes_; }
  const FockSpace& fock() const { return *fock_; }

  std::size_t q_index(const Momentum& q) const {
    auto it = std::lower_bound(qmodes_.begin(), qmodes_.end(), q);
    if (it == qmodes_.end() || !(*it == q))
      throw std::invalid_argument("ImpuritySpace: q outside cutoff");
    return static_cast<std::size_t>(it - qmodes_.begin());
  }

  // e^{iky} as the shift q -> q + k; shifts leaving the cutoff annihilate.
  SpMat shift(const Momentum& k) const {
    std::vector<Triplet> trip;
    for (std::size_t qi = 0; qi < qmodes_.size(); ++qi) {
      const Momentum target = qmodes_[qi] + k;
      auto it = std::lower_bound(qmodes_.begin(), qmodes_.end(), target);
      if (it == qmodes_.end() || !(*it == target)) continue;
      trip.emplace_back(static_cast<int>(it - qmodes_.begin()), static_cast<int>(qi), 1.0);
    }
    SpMat S(static_cast<Eigen::Index>(qmodes_.size()),
            static_cast<Eigen::Index>(qmodes_.size()));
    S.setFromTriplets(trip.begin(), trip.end());
    return S;
  }

  // -Delta_y: diagonal |q|^2 on the impurity factor
  SpMat minus_laplacian_y() const {
    std::vector<Triplet> trip;
    for (std::size_t qi = 0; qi < qmodes_.size(); ++qi)
      trip.emplace_back(static_cast<int>(qi), static_cast<int>(qi),
                        cplx(static_cast<double>(qmodes_[qi].norm2()), 0));
    SpMat L(static_cast<Eigen::Index>(qmodes_.size()),
            static_cast<Eigen::Index>(qmodes_.size()));
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
  }

  // A (impurity) tensor B (fock), index = qi * fock_dim + fi
  SpMat kron(const SpMat& A, const SpMat& B) const {
    const auto fd = static_cast<Eigen::Index>(fock_->dim());
    std::vector<Triplet> trip;
    for (int ak = 0; ak < A.outerSize(); ++ak)
      for (SpMat::InnerIterator ai(A, ak); ai; ++ai)
        for (int bk = 0; bk < B.outerSize(); ++bk)
          for (SpMat::InnerIterator bi(B, bk); bi; ++bi)
            trip.emplace_back(static_cast<int>(ai.row() * fd + bi.row()),
                              static_cast<int>(ai.col() * fd + bi.col()),
                              ai.value() * bi.value());
    SpMat C(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
    C.setFromTriplets(trip.begin(), trip.end());
    return C;
  }

  SpMat identity_impurity() const {
    SpMat I(static_cast<Eigen::Index>(qmodes_.size()),
            static_cast<Eigen::Index>(qmodes_.size()));
    I.setIdentity();
    return I;
  }

  SpMat lift_fock(const SpMat& B) const { return kron(identity_impurity(), B); }

  // plane wave q0 tensor a Fock vector
  Vec product_state(const Momentum& q0, const Vec& fock_vec) const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(dim()));
    const std::size_t qi = q_index(q0);
    const auto fd = static_cast<Eigen::Index>(fock_->dim());
    v.segment(static_cast<Eigen::Index>(qi) * fd, fd) = fock_vec;
    return v;
  }

 private:
  const FockSpace* fock_;
  std::vector<Momentum> qmodes_;
};

// Weyl generator with the plane-wave shift acting on the impurity:
// B = sum eta_alpha(k) shift(k) (x) c*_alpha(k) - h.c.
inline SpMat weyl_generator_impurity(const ImpuritySpace& sp, const PairWeightTable& table,
                                     const EtaField& eta) {
  SpMat B(static_cast<Eigen::Index>(sp.dim()), static_cast<Eigen::Index>(sp.dim()));
  for (std::size_t gi = 0; gi < eta.gamma.size(); ++gi) {
    const Momentum k = eta.gamma[gi];
    const SpMat Sk = sp.shift(k);
    const SpMat Sk_dag = SpMat(Sk.adjoint());
    for (std::size_t j = 0; j < eta.alphas[gi].size(); ++j) {
      const cplx amp = eta.amplitudes[gi][j];
      if (amp == cplx{}) continue;
      const WeightEntry& e = find_entry(table, k, eta.alphas[gi][j]);
      const SpMat cd = pair_creator(sp.fock(), e).mat;
      const SpMat c = SpMat(cd.adjoint());
      B = SpMat(B + amp * sp.kron(Sk, cd) - std::conj(amp) * sp.kron(Sk_dag, c));
    }
  }
  return B;
}

// Full effective Hamiltonian in Truncated mode:
// beta (-Delta_y) (x) 1 + 1 (x) (D_B + EpW) + sum lambda V n [shift(k) (x) c* + h.c.]
inline SpMat heff_impurity(const ImpuritySpace& sp, const CoherentParams& p, double beta) {
  SpMat H = sp.kron(beta * sp.minus_laplacian_y(), SpMat(identity_op(sp.fock()).mat));
  SpMat fockPart = make_sparse(sp.fock(), heff_tilde_terms(sp.fock(), p)).mat;
  H = SpMat(H + sp.lift_fock(fockPart));
  for (std::size_t gi = 0; gi < p.weights.gamma.size(); ++gi) {
    const Momentum k = p.weights.gamma[gi];
    const SpMat Sk = sp.shift(k);
    for (const auto& e : p.weights.entries[gi]) {
      const double h = p.coupling(gi, e);
      const SpMat cd = pair_creator(sp.fock(), e).mat;
      const SpMat c = SpMat(cd.adjoint());
      H = SpMat(H + h * sp.kron(Sk, cd) + h * sp.kron(SpMat(Sk.adjoint()), c));
    }
  }
  return H;
}

}  // namespace polaron
