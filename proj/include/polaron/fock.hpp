#pragma once

// Finite-mode fermionic Fock space over a ModeSet, with occupation-bitstring
// basis states and sparse complex operators. Bit i of a basis word is the
// occupation of mode i in the fixed lexicographic mode order, and
//
//   |n> = (a*_0)^{n_0} (a*_1)^{n_1} ... (a*_{L-1})^{n_{L-1}} Omega
//
// fixes every Jordan-Wigner sign: a*_i |n> = (-1)^{popcount(n below i)} |n+e_i>.
// In particular the filled ball Omega_0 is the basis word with all B_F bits
// set, with global sign +1; the particle-hole unitary R below maps Omega to
// exactly that word.
//
// Operators are either materialized as Eigen sparse matrices or applied
// matrix-free from their normal-ordered monomial form (needed for the
// 2^19-dimensional full-space runs).

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "polaron/coherent.hpp"
#include "polaron/lattice.hpp"
#include "polaron/patches.hpp"

namespace polaron {

using SpMat = Eigen::SparseMatrix<cplx>;
using Vec = Eigen::VectorXcd;
using DMat = Eigen::MatrixXcd;
using Triplet = Eigen::Triplet<cplx>;

enum class SectorKind { Full, FixedParticleNumber, ExcitationCutoff };

struct Sector {
  SectorKind kind = SectorKind::Full;
  int param = 0;

  static Sector full() { return {SectorKind::Full, 0}; }
  static Sector fixed_n(int n) { return {SectorKind::FixedParticleNumber, n}; }
  static Sector excitation_cutoff(int m) { return {SectorKind::ExcitationCutoff, m}; }
};

class FockSpace {
 public:
  FockSpace(ModeSet modes, Sector sector, std::size_t dim_limit = (1ull << 21))
      : modes_(std::move(modes)), sector_(sector) {
    const std::size_t L = modes_.size();
    if (L > 63) throw std::invalid_argument("FockSpace: at most 63 modes");
    switch (sector_.kind) {
      case SectorKind::Full: {
        if (L > 28)
          throw std::invalid_argument("FockSpace: Full sector limited to 28 modes, got " +
                                      std::to_string(L));
        const std::size_t d = 1ull << L;
        check_size(d, dim_limit);
        dim_ = d;
        break;
      }
      case SectorKind::FixedParticleNumber: {
        basis_ = enumerate_popcount(L, sector_.param, sector_.param);
        check_size(basis_.size(), dim_limit);
        dim_ = basis_.size();
        break;
      }
      case SectorKind::ExcitationCutoff: {
        basis_ = enumerate_popcount(L, 0, sector_.param);
        check_size(basis_.size(), dim_limit);
        dim_ = basis_.size();
        break;
      }
    }
  }

  const ModeSet& modes() const { return modes_; }
  Sector sector() const { return sector_; }
  std::size_t n_modes() const { return modes_.size(); }
  std::size_t dim() const { return dim_; }

  uint64_t state(std::size_t idx) const {
    return sector_.kind == SectorKind::Full ? static_cast<uint64_t>(idx) : basis_[idx];
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t index(uint64_t word) const {
    if (sector_.kind == SectorKind::Full)
      return word < dim_ ? static_cast<std::size_t>(word) : npos;
    auto it = std::lower_bound(basis_.begin(), basis_.end(), word);
    if (it == basis_.end() || *it != word) return npos;
    return static_cast<std::size_t>(it - basis_.begin());
  }

  std::size_t mode_index(const Momentum& p) const {
    const std::size_t i = modes_.index_of(p);
    if (i == ModeSet::npos)
      throw std::invalid_argument("FockSpace: momentum " + to_string(p) + " not in mode set");
    return i;
  }

  Vec vacuum() const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(dim_));
    const std::size_t i = index(0);
    if (i == npos) throw std::logic_error("FockSpace: sector does not contain the vacuum");
    v[static_cast<Eigen::Index>(i)] = 1.0;
    return v;
  }

 private:
  static void check_size(std::size_t d, std::size_t limit) {
    if (d > limit)
      throw std::invalid_argument("FockSpace: basis size " + std::to_string(d) +
                                  " exceeds limit " + std::to_string(limit));
  }

  static std::vector<uint64_t> enumerate_popcount(std::size_t L, int lo, int hi) {
    std::vector<uint64_t> out;
    if (hi > static_cast<int>(L)) hi = static_cast<int>(L);
    for (int c = lo; c <= hi; ++c) {
      if (c == 0) {
        out.push_back(0);
        continue;
      }
      uint64_t v = (c >= 64) ? ~0ull : ((1ull << c) - 1);
      const uint64_t top = 1ull << L;
      while (v < top) {
        out.push_back(v);
        const uint64_t t = v | (v - 1);  // Gosper's hack
        v = (t + 1) | (((~t & -(~t)) - 1) >> (std::countr_zero(v) + 1));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  ModeSet modes_;
  Sector sector_;
  std::vector<uint64_t> basis_;
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// Normal monomials coef * op_1 op_2 ... op_r (ops act right to left).

struct FermiOp {
  bool dagger = false;
  std::size_t mode = 0;
};

struct Monomial {
  cplx coef{1.0, 0.0};
  std::vector<FermiOp> ops;
};

inline int jw_parity(uint64_t word, std::size_t mode) {
  const uint64_t below = (mode == 0) ? 0 : (word & ((1ull << mode) - 1));
  return (std::popcount(below) & 1) ? -1 : 1;
}

// Apply a monomial to a basis word; false when it annihilates the state.
inline bool apply_monomial(const Monomial& m, uint64_t word, uint64_t& out, cplx& amp) {
  cplx a = m.coef;
  uint64_t w = word;
  for (auto it = m.ops.rbegin(); it != m.ops.rend(); ++it) {
    const uint64_t bit = 1ull << it->mode;
    if (it->dagger) {
      if (w & bit) return false;
      a *= static_cast<double>(jw_parity(w, it->mode));
      w |= bit;
    } else {
      if (!(w & bit)) return false;
      a *= static_cast<double>(jw_parity(w, it->mode));
      w &= ~bit;
    }
  }
  out = w;
  amp = a;
  return true;
}

// A sum of monomials tied to a space: matrix-free application plus sparse
// materialization for desk-size spaces.
class FockOperator {
 public:
  FockOperator(const FockSpace& space, std::vector<Monomial> terms)
      : space_(&space), terms_(std::move(terms)) {}

  const FockSpace& space() const { return *space_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  std::size_t dim() const { return space_->dim(); }

  void apply(const Vec& x, Vec& y) const {
    y.setZero(static_cast<Eigen::Index>(space_->dim()));
    uint64_t out;
    cplx amp;
    for (const auto& m : terms_)
      for (std::size_t col = 0; col < space_->dim(); ++col) {
        const cplx xc = x[static_cast<Eigen::Index>(col)];
        if (xc == cplx{}) continue;
        if (!apply_monomial(m, space_->state(col), out, amp)) continue;
        const std::size_t row = space_->index(out);
        if (row == FockSpace::npos) continue;  // truncated by the sector
        y[static_cast<Eigen::Index>(row)] += amp * xc;
      }
  }

  Vec operator*(const Vec& x) const {
    Vec y;
    apply(x, y);
    return y;
  }

  SpMat to_sparse() const {
    std::vector<Triplet> trip;
    uint64_t out;
    cplx amp;
    for (const auto& m : terms_)
      for (std::size_t col = 0; col < space_->dim(); ++col) {
        if (!apply_monomial(m, space_->state(col), out, amp)) continue;
        const std::size_t row = space_->index(out);
        if (row == FockSpace::npos) continue;
        trip.emplace_back(static_cast<int>(row), static_cast<int>(col), amp);
      }
    SpMat A(static_cast<Eigen::Index>(space_->dim()), static_cast<Eigen::Index>(space_->dim()));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

 private:
  const FockSpace* space_;
  std::vector<Monomial> terms_;
};

// ---------------------------------------------------------------------------
// Sparse operators with verified symmetry certificates.

inline double max_abs(const SpMat& A) {
  double m = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

struct SparseOperator {
  SpMat mat;
  std::optional<bool> hermitian;
  std::optional<bool> anti_hermitian;

  SparseOperator() = default;
  explicit SparseOperator(SpMat m) : mat(std::move(m)) {}

  std::size_t dim() const { return static_cast<std::size_t>(mat.rows()); }

  void apply(const Vec& x, Vec& y) const { y = mat * x; }
  Vec operator*(const Vec& x) const { return mat * x; }

  bool certify_hermitian(double tol = 1e-12) {
    hermitian = max_abs(SpMat(mat - SpMat(mat.adjoint()))) <= tol;
    return *hermitian;
  }
  bool certify_anti_hermitian(double tol = 1e-12) {
    anti_hermitian = max_abs(SpMat(mat + SpMat(mat.adjoint()))) <= tol;
    return *anti_hermitian;
  }
};

inline SparseOperator make_sparse(const FockSpace& space, const std::vector<Monomial>& terms) {
  return SparseOperator(FockOperator(space, terms).to_sparse());
}

// ---------------------------------------------------------------------------
// Elementary operators.

inline SparseOperator a_dagger(const FockSpace& space, const Momentum& p) {
  return make_sparse(space, {Monomial{1.0, {{true, space.mode_index(p)}}}});
}

inline SparseOperator a_op(const FockSpace& space, const Momentum& p) {
  return make_sparse(space, {Monomial{1.0, {{false, space.mode_index(p)}}}});
}

inline std::vector<Monomial> number_terms(const FockSpace& space) {
  std::vector<Monomial> t;
  for (std::size_t i = 0; i < space.n_modes(); ++i)
    t.push_back({1.0, {{true, i}, {false, i}}});
  return t;
}

inline SparseOperator number_op(const FockSpace& space) {
  return make_sparse(space, number_terms(space));
}

inline SparseOperator identity_op(const FockSpace& space) {
  SpMat I(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
  I.setIdentity();
  return SparseOperator(std::move(I));
}

// ---------------------------------------------------------------------------
// Particle-hole transformation. R flips every B_F bit with phase
//
//   s(n) = (-1)^{ sum over set bits i of n of
//                 popcount(n below i) + popcount((n xor mask) below i) },
//
// the unique solution (up to a global phase) of a*_k R = R a_k on ball
// modes and a*_k R = R a*_k outside. The relations force
// R^2 = (-1)^{m(m-1)/2} with m = |B_F|, so for m = 2,3 mod 4 the whole
// matrix carries an extra factor i; that restores R^2 = 1 and R* = R while
// leaving every conjugation identity untouched. The documented convention
// is therefore R Omega = i^{m(m-1)/2 mod 2} Omega_0 with Omega_0 the
// filled-ball basis word.

inline int particle_hole_sign(uint64_t n, uint64_t mask) {
  int exponent = 0;
  uint64_t bits = n;
  while (bits) {
    const int i = std::countr_zero(bits);
    bits &= bits - 1;
    const uint64_t below = (i == 0) ? 0 : ((1ull << i) - 1);
    exponent += std::popcount(n & below) + std::popcount((n ^ mask) & below);
  }
  return (exponent & 1) ? -1 : 1;
}

inline cplx particle_hole_global_phase(const FermiBall& ball) {
  const std::size_t m = ball.N;
  return (m * (m - 1) / 2) % 2 ? cplx(0, 1) : cplx(1, 0);
}

inline SparseOperator particle_hole(const FockSpace& space, const FermiBall& ball) {
  uint64_t mask = 0;
  for (const auto& k : ball.modes) mask |= 1ull << space.mode_index(k);
  const cplx phase = particle_hole_global_phase(ball);
  std::vector<Triplet> trip;
  for (std::size_t col = 0; col < space.dim(); ++col) {
    const uint64_t n = space.state(col);
    const uint64_t target = n ^ mask;
    const std::size_t row = space.index(target);
    if (row == FockSpace::npos) continue;
    trip.emplace_back(static_cast<int>(row), static_cast<int>(col),
                      phase * static_cast<double>(particle_hole_sign(n, mask)));
  }
  SpMat R(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
  R.setFromTriplets(trip.begin(), trip.end());
  return SparseOperator(std::move(R));
}

// ---------------------------------------------------------------------------
// Almost-bosonic pair operators c*_alpha(k) = (1/n) sum a*_p a*_{p-k'};
// the hemisphere rule is already folded into the pair lists of the table.

// c*_alpha(k) restricted to the space: pairs with a momentum outside the
// mode set are dropped while the normalization keeps the lattice-exact
// n_alpha(k), so truncation weakens the operator instead of renormalizing it.
inline std::vector<Monomial> pair_creator_terms(const FockSpace& space, const WeightEntry& e) {
  if (e.count_sq <= 0) throw std::invalid_argument("pair operator: zero pair count");
  if (e.pairs.empty())
    throw std::invalid_argument("pair operator: weight table built without pair lists");
  std::vector<Monomial> t;
  const double w = 1.0 / e.n;
  for (const auto& pr : e.pairs) {
    const std::size_t i = space.modes().index_of(pr.p);
    const std::size_t j = space.modes().index_of(pr.q);
    if (i == ModeSet::npos || j == ModeSet::npos) continue;
    t.push_back({w, {{true, i}, {true, j}}});
  }
  return t;
}

// Fraction of the pair sum representable in the space (1 = no truncation).
inline double representable_fraction(const FockSpace& space, const WeightEntry& e) {
  std::size_t kept = 0;
  for (const auto& pr : e.pairs)
    if (space.modes().contains(pr.p) && space.modes().contains(pr.q)) ++kept;
  return static_cast<double>(kept) / static_cast<double>(e.pairs.size());
}

inline std::vector<Monomial> adjoint_terms(const std::vector<Monomial>& terms) {
  std::vector<Monomial> adj;
  for (const auto& m : terms) {
    Monomial a;
    a.coef = std::conj(m.coef);
    for (auto it = m.ops.rbegin(); it != m.ops.rend(); ++it)
      a.ops.push_back({!it->dagger, it->mode});
    adj.push_back(std::move(a));
  }
  return adj;
}

inline SparseOperator pair_creator(const FockSpace& space, const WeightEntry& e) {
  return make_sparse(space, pair_creator_terms(space, e));
}
inline SparseOperator pair_annihilator(const FockSpace& space, const WeightEntry& e) {
  return make_sparse(space, adjoint_terms(pair_creator_terms(space, e)));
}

inline const WeightEntry& find_entry(const PairWeightTable& table, const Momentum& k,
                                     int alpha) {
  for (const auto& e : table.entries[table.gamma_index(k)])
    if (e.alpha == alpha) return e;
  throw std::invalid_argument("no weight entry for alpha " + std::to_string(alpha) + " at k " +
                              to_string(k));
}

// c*(f) = sum_{k,alpha} f_alpha(k) c*_alpha(k) for an explicit coefficient
// field f; c(f) is its adjoint with coefficients conj(f). With this pairing
// a coherent state obeys c(delta_j) W(eta) Omega ~ eta_j W(eta) Omega and
// <f,g> = sum conj(f) g throughout.
inline std::vector<Monomial> c_dagger_field_terms(const FockSpace& space,
                                                  const PairWeightTable& table,
                                                  const EtaField& f) {
  std::vector<Monomial> t;
  for (std::size_t gi = 0; gi < f.gamma.size(); ++gi)
    for (std::size_t j = 0; j < f.alphas[gi].size(); ++j) {
      const cplx coef = f.amplitudes[gi][j];
      if (coef == cplx{}) continue;
      const WeightEntry& e = find_entry(table, f.gamma[gi], f.alphas[gi][j]);
      for (auto m : pair_creator_terms(space, e)) {
        m.coef *= coef;
        t.push_back(std::move(m));
      }
    }
  return t;
}

// B = c*(eta) - c(eta), the anti-hermitian Weyl generator.
inline std::vector<Monomial> weyl_generator_terms(const FockSpace& space,
                                                  const PairWeightTable& table,
                                                  const EtaField& eta) {
  auto plus = c_dagger_field_terms(space, table, eta);
  auto minus = adjoint_terms(plus);
  for (auto& m : minus) m.coef = -m.coef;
  plus.insert(plus.end(), minus.begin(), minus.end());
  return plus;
}

// CCR error E_alpha(k,k2) = [c_alpha(k), c*_alpha(k2)] - delta_{k,k2}.
inline SparseOperator ccr_error(const FockSpace& space, const PairWeightTable& table,
                                int alpha, const Momentum& k, const Momentum& k2) {
  const WeightEntry& e1 = find_entry(table, k, alpha);
  const WeightEntry& e2 = find_entry(table, k2, alpha);
  const SpMat c1 = pair_annihilator(space, e1).mat;
  const SpMat c2d = pair_creator(space, e2).mat;
  SpMat comm = SpMat(c1 * c2d) - SpMat(c2d * c1);
  if (k == k2) {
    SpMat I(comm.rows(), comm.cols());
    I.setIdentity();
    comm = SpMat(comm - I);
  }
  return SparseOperator(std::move(comm));
}

// ---------------------------------------------------------------------------
// Exactly-bosonic oracle: modes indexed by (k,alpha) with energies eps and
// couplings h, per-mode occupation cutoff n_max. N_fermion = 2 * boson count
// so expectation identities read the same in both models.

struct BosonicMode {
  Momentum k;
  int alpha = 0;
  double eps = 0;
  cplx h{};
};

class BosonicOracleSpace {
 public:
  BosonicOracleSpace(std::vector<BosonicMode> modes, int n_max,
                     std::size_t dim_limit = 1u << 20)
      : modes_(std::move(modes)), n_max_(n_max) {
    std::size_t d = 1;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      d *= static_cast<std::size_t>(n_max_ + 1);
      if (d > dim_limit)
        throw std::invalid_argument("BosonicOracleSpace: dimension exceeds limit " +
                                    std::to_string(dim_limit));
    }
    dim_ = d;
  }

  std::size_t dim() const { return dim_; }
  int n_max() const { return n_max_; }
  const std::vector<BosonicMode>& modes() const { return modes_; }

  int occupation(std::size_t idx, std::size_t mode) const {
    std::size_t d = idx;
    for (std::size_t i = 0; i < mode; ++i) d /= static_cast<std::size_t>(n_max_ + 1);
    return static_cast<int>(d % static_cast<std::size_t>(n_max_ + 1));
  }

  // annihilator for one mode
  SpMat lower(std::size_t mode) const {
    std::vector<Triplet> trip;
    std::size_t stride = 1;
    for (std::size_t i = 0; i < mode; ++i) stride *= static_cast<std::size_t>(n_max_ + 1);
    for (std::size_t idx = 0; idx < dim_; ++idx) {
      const int n = occupation(idx, mode);
      if (n == 0) continue;
      trip.emplace_back(static_cast<int>(idx - stride), static_cast<int>(idx),
                        cplx(std::sqrt(static_cast<double>(n)), 0));
    }
    SpMat A(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  SpMat number_fermion() const {  // 2 * boson number
    std::vector<Triplet> trip;
    for (std::size_t idx = 0; idx < dim_; ++idx) {
      int total = 0;
      for (std::size_t m = 0; m < modes_.size(); ++m) total += occupation(idx, m);
      trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx), cplx(2.0 * total, 0));
    }
    SpMat A(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  // H_eff = sum eps c+ c + sum (h c+ + conj(h) c) + EpW
  SpMat effective_hamiltonian(double EpW) const {
    SpMat H(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const SpMat c = lower(m);
      const SpMat cd = SpMat(c.adjoint());
      H = SpMat(H + modes_[m].eps * SpMat(cd * c) + modes_[m].h * cd +
                std::conj(modes_[m].h) * c);
    }
    SpMat I(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    I.setIdentity();
    return SpMat(H + EpW * I);
  }

  // B = sum eta c+ - conj(eta) c for amplitudes listed in mode order
  SpMat weyl_generator(const std::vector<cplx>& eta) const {
    if (eta.size() != modes_.size())
      throw std::invalid_argument("weyl_generator: amplitude count mismatch");
    SpMat B(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (std::size_t m = 0; m < modes_.size(); ++m) {
      const SpMat c = lower(m);
      B = SpMat(B + eta[m] * SpMat(c.adjoint()) - std::conj(eta[m]) * c);
    }
    return B;
  }

  Vec vacuum() const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(dim_));
    v[0] = 1.0;
    return v;
  }

  // Occupation-cutoff tail mass of the exact coherent state with the given
  // per-mode amplitudes: 1 - prod_j P(Poisson(|eta_j|^2) <= n_max).
  double coherent_tail_mass(const std::vector<cplx>& eta) const {
    double kept = 1.0;
    for (const cplx& a : eta) {
      const double mu = std::norm(a);
      double term = std::exp(-mu), cum = term;
      for (int n = 1; n <= n_max_; ++n) {
        term *= mu / n;
        cum += term;
      }
      kept *= cum;
    }
    return 1.0 - kept;
  }

 private:
  std::vector<BosonicMode> modes_;
  int n_max_ = 0;
  std::size_t dim_ = 0;
};

// Oracle modes drawn from a pair-weight table (static impurity: h real).
inline std::vector<BosonicMode> oracle_modes_from_table(const CoherentParams& p) {
  std::vector<BosonicMode> modes;
  for (std::size_t gi = 0; gi < p.weights.gamma.size(); ++gi)
    for (const auto& e : p.weights.entries[gi])
      modes.push_back({p.weights.gamma[gi], e.alpha, e.eps, cplx(p.coupling(gi, e), 0)});
  return modes;
}

// ---------------------------------------------------------------------------
// Seeded random states: complex Gaussian amplitudes, normalized.

inline std::uint64_t stream_seed(std::uint64_t seed, const std::string& name) {
  return fnv1a(name, seed * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull);
}

inline Vec random_state(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const double re = g(rng), im = g(rng);
    v[static_cast<Eigen::Index>(i)] = cplx(re, im);
  }
  v.normalize();
  return v;
}

}  // namespace polaron
