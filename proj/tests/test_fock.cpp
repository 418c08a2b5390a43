#include <catch2/catch.hpp>

#include "polaron/fock.hpp"
#include "polaron/hamiltonians.hpp"

using namespace polaron;

namespace {

FockSpace tiny_space(int n_modes, Sector sector = Sector::full()) {
  const auto ball = build_fermi_ball(1.0);
  std::vector<Momentum> modes;
  const std::vector<Momentum> pool = {{0, 0, 0},  {0, 0, 1},  {0, 0, -1}, {1, 0, 0},
                                      {-1, 0, 0}, {0, 1, 0},  {0, -1, 0}, {0, 0, 2},
                                      {0, 0, -2}, {1, 0, 1}};
  for (int i = 0; i < n_modes; ++i) modes.push_back(pool[static_cast<std::size_t>(i)]);
  return FockSpace(mode_set_from_list(std::move(modes), ball), sector);
}

struct DeskM1 {
  FermiBall ball = build_fermi_ball(1.0);
  PatchSet ps = build_patch_set(1, 1.0, 7.0, 0.0, 0.0);
  Potential V = Potential::from_pairs({{{0, 0, 1}, 1.0}, {{0, 0, -1}, 1.0}});
  CoherentParams params = make_coherent_params(1.0, ball, ps, V);
  FockSpace space;
  DeskM1() : space(make_space()) {}
  FockSpace make_space() {
    std::vector<Momentum> modes;
    for (const auto& row : params.weights.entries)
      for (const auto& e : row)
        for (const auto& pr : e.pairs) {
          modes.push_back(pr.p);
          modes.push_back(pr.q);
        }
    return FockSpace(mode_set_from_list(std::move(modes), ball), Sector::full());
  }
};

}  // namespace

TEST_CASE("basis dimensions per sector") {
  CHECK(tiny_space(3).dim() == 8);
  CHECK(tiny_space(7, Sector::fixed_n(7)).dim() == 1);
  CHECK(tiny_space(10, Sector::fixed_n(3)).dim() == 120);
  SECTION("19 choose 7") {
    const auto ball = build_fermi_ball(1.0);
    const auto ms = build_mode_set(ball, Potential::ball(1.0, 1.0), std::sqrt(2.0));
    FockSpace s(ms, Sector::fixed_n(7));
    CHECK(s.dim() == 50388);
  }
  SECTION("excitation cutoff") {
    FockSpace s = tiny_space(10, Sector::excitation_cutoff(2));
    CHECK(s.dim() == 1 + 10 + 45);
  }
  SECTION("oversize requests are rejected with the computed size") {
    const auto ball = build_fermi_ball(1.0);
    const auto ms = build_mode_set(ball, Potential::ball(1.0, 1.0), std::sqrt(2.0));
    try {
      FockSpace s(ms, Sector::full(), 1000);
      FAIL("expected a size rejection");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("524288") != std::string::npos);
    }
  }
}

TEST_CASE("canonical anticommutation relations hold exactly") {
  const auto space = tiny_space(6);
  std::vector<SpMat> ad, a;
  for (std::size_t i = 0; i < 6; ++i) {
    const Momentum p = space.modes().modes[i];
    ad.push_back(a_dagger(space, p).mat);
    a.push_back(a_op(space, p).mat);
  }
  SpMat I(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
  I.setIdentity();
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const SpMat anti = SpMat(a[i] * ad[j]) + SpMat(ad[j] * a[i]);
      if (i == j)
        CHECK(max_abs(SpMat(anti - I)) == 0.0);
      else
        CHECK(max_abs(anti) == 0.0);
      CHECK(max_abs(SpMat(SpMat(a[i] * a[j]) + SpMat(a[j] * a[i]))) == 0.0);
      CHECK(max_abs(SpMat(SpMat(ad[i] * ad[j]) + SpMat(ad[j] * ad[i]))) == 0.0);
    }
  SECTION("annihilators kill the vacuum") {
    const Vec vac = space.vacuum();
    for (const auto& m : a) CHECK((m * vac).norm() == 0.0);
  }
}

TEST_CASE("particle-hole transformation") {
  const auto ball = build_fermi_ball(1.0);
  std::vector<Momentum> modes = ball.modes;
  modes.push_back({0, 0, 2});
  modes.push_back({0, 0, -2});
  FockSpace space(mode_set_from_list(std::move(modes), ball), Sector::full());
  const SparseOperator R = particle_hole(space, ball);

  SECTION("R Omega is the filled ball up to the documented global phase") {
    const Vec v = R * space.vacuum();
    uint64_t mask = 0;
    for (const auto& k : ball.modes) mask |= 1ull << space.mode_index(k);
    const std::size_t idx = space.index(mask);
    // |B_F| = 7: m(m-1)/2 = 21 odd, so the phase is i
    CHECK(std::abs(v[static_cast<Eigen::Index>(idx)] - cplx(0.0, 1.0)) == 0.0);
    CHECK(v.norm() == Approx(1.0));
  }
  SECTION("R is an involution and unitary") {
    SpMat I(static_cast<Eigen::Index>(space.dim()), static_cast<Eigen::Index>(space.dim()));
    I.setIdentity();
    CHECK(max_abs(SpMat(SpMat(R.mat * R.mat) - I)) <= 1e-12);
    CHECK(max_abs(SpMat(SpMat(R.mat * SpMat(R.mat.adjoint())) - I)) <= 1e-12);
    CHECK(max_abs(SpMat(R.mat - SpMat(R.mat.adjoint()))) <= 1e-12);
  }
  SECTION("conjugation exchanges creation and annihilation inside the ball") {
    for (const auto& k : space.modes().modes) {
      const SpMat lhs = SpMat(R.mat * SpMat(a_dagger(space, k).mat * R.mat));
      const SpMat expect = ball.contains(k) ? a_op(space, k).mat : a_dagger(space, k).mat;
      CHECK(max_abs(SpMat(lhs - expect)) == 0.0);
    }
  }
}

TEST_CASE("pair operators") {
  DeskM1 d;
  const auto& e = d.params.weights.entries[0][0];
  const SparseOperator cd = pair_creator(d.space, e);
  const SparseOperator c = pair_annihilator(d.space, e);
  const SpMat N = number_op(d.space).mat;

  SECTION("annihilates the vacuum") {
    CHECK((c.mat * d.space.vacuum()).norm() == 0.0);
  }
  SECTION("changes the number operator by two") {
    const SpMat lhs = SpMat(c.mat * N);
    SpMat I(static_cast<Eigen::Index>(d.space.dim()),
            static_cast<Eigen::Index>(d.space.dim()));
    I.setIdentity();
    const SpMat rhs = SpMat(SpMat(N + 2.0 * I) * c.mat);
    CHECK(max_abs(SpMat(lhs - rhs)) <= 1e-12);
  }
  SECTION("creator norm bound against (N+1)^{1/2}") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
      const Vec psi = random_state(d.space.dim(), rng);
      Vec np = psi;
      for (std::size_t i = 0; i < d.space.dim(); ++i)
        np[static_cast<Eigen::Index>(i)] *=
            std::sqrt(static_cast<double>(std::popcount(d.space.state(i))) + 1.0);
      CHECK((cd.mat * psi).norm() <= np.norm() + 1e-10);
    }
  }
  SECTION("truncated spaces drop pairs but keep the normalization") {
    const auto ball = build_fermi_ball(1.0);
    std::vector<Momentum> modes = {{0, 0, 1}, {0, 0, 2}};
    FockSpace small(mode_set_from_list(std::move(modes), ball), Sector::full());
    CHECK(representable_fraction(small, e) == Approx(0.2));
    const auto terms = pair_creator_terms(small, e);
    CHECK(terms.size() == 1);
    CHECK(std::abs(terms[0].coef - cplx(1.0 / std::sqrt(5.0), 0)) < 1e-15);
  }
}

TEST_CASE("ccr error term") {
  DeskM1 d;
  const Momentum k{0, 0, 1};
  const SparseOperator E = ccr_error(d.space, d.params.weights, 1, k, k);
  SECTION("hermitian and negative semidefinite at equal momenta") {
    CHECK(max_abs(SpMat(E.mat - SpMat(E.mat.adjoint()))) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<DMat> es{DMat(E.mat)};
    CHECK(es.eigenvalues().maxCoeff() <= 1e-12);
  }
  SECTION("commutes with the number operator") {
    const SpMat N = number_op(d.space).mat;
    CHECK(max_abs(SpMat(SpMat(E.mat * N) - SpMat(N * E.mat))) <= 1e-12);
  }
  SECTION("norm bound 2/(n n') ||N psi||") {
    const SpMat N = number_op(d.space).mat;
    const double n = d.params.weights.entries[0][0].n;
    std::mt19937_64 rng(13);
    for (int t = 0; t < 100; ++t) {
      const Vec psi = random_state(d.space.dim(), rng);
      CHECK((E.mat * psi).norm() <= 2.0 / (n * n) * (N * psi).norm() + 1e-10);
    }
  }
}

TEST_CASE("weyl generator and operator") {
  DeskM1 d;
  const EtaField eta = eta_at(d.params, 0.6);
  SparseOperator B = weyl_generator(d.space, d.params.weights, eta);
  REQUIRE(B.anti_hermitian.value());

  SECTION("W(0) is the identity") {
    const EtaField zero = eta_at(d.params, 0.0);
    const SparseOperator W = weyl_operator(d.space, d.params.weights, zero);
    SpMat I(static_cast<Eigen::Index>(d.space.dim()),
            static_cast<Eigen::Index>(d.space.dim()));
    I.setIdentity();
    CHECK(max_abs(SpMat(W.mat - I)) <= 1e-12);
  }
  SECTION("unitarity") {
    const SparseOperator W = weyl_operator(d.space, d.params.weights, eta);
    SpMat I(static_cast<Eigen::Index>(d.space.dim()),
            static_cast<Eigen::Index>(d.space.dim()));
    I.setIdentity();
    CHECK(max_abs(SpMat(SpMat(W.mat * SpMat(W.mat.adjoint())) - I)) <= 1e-10);
  }
  SECTION("B commutes with W") {
    const SparseOperator W = weyl_operator(d.space, d.params.weights, eta);
    CHECK(max_abs(SpMat(SpMat(B.mat * W.mat) - SpMat(W.mat * B.mat))) <= 1e-10);
  }
  SECTION("krylov application matches the dense exponential") {
    const DMat W = weyl_dense(B.mat);
    std::mt19937_64 rng(5);
    const Vec psi = random_state(d.space.dim(), rng);
    CHECK((weyl_apply(B.mat, psi) - W * psi).norm() <= 1e-9);
  }
}

TEST_CASE("bosonic oracle space") {
  std::vector<BosonicMode> modes = {{{0, 0, 1}, 1, 2.0, cplx(0.8, 0)},
                                    {{0, 0, 1}, 2, 2.0, cplx(0.8, 0)}};
  BosonicOracleSpace oracle(modes, 6);
  CHECK(oracle.dim() == 49);

  SECTION("ladder algebra on the interior") {
    const SpMat c = oracle.lower(0);
    const SpMat comm = SpMat(SpMat(c * SpMat(c.adjoint())) - SpMat(SpMat(c.adjoint()) * c));
    // [c, c+] = 1 on occupations below the cutoff
    for (std::size_t idx = 0; idx < oracle.dim(); ++idx) {
      if (oracle.occupation(idx, 0) == oracle.n_max()) continue;
      CHECK(std::abs(comm.coeff(static_cast<Eigen::Index>(idx),
                                static_cast<Eigen::Index>(idx)) -
                     cplx(1.0, 0)) <= 1e-12);
    }
  }
  SECTION("weyl operator is unitary and coherent expectation matches") {
    const std::vector<cplx> amps = {cplx(0.4, 0.1), cplx(-0.2, 0.3)};
    const SpMat B = oracle.weyl_generator(amps);
    const Vec w = weyl_apply(B, oracle.vacuum());
    CHECK(w.norm() == Approx(1.0).margin(1e-10));
    double eta2 = 0;
    for (const auto& a : amps) eta2 += std::norm(a);
    const double expect = std::real(w.dot(oracle.number_fermion() * w));
    CHECK(expect == Approx(2.0 * eta2).margin(1e-6));
    CHECK(oracle.coherent_tail_mass(amps) < 1e-6);
  }
  SECTION("oversize oracle is rejected") {
    std::vector<BosonicMode> many(8, modes[0]);
    CHECK_THROWS(BosonicOracleSpace(many, 12));
  }
}

TEST_CASE("random states are seeded and normalized") {
  std::mt19937_64 a(stream_seed(42, "suite"));
  std::mt19937_64 b(stream_seed(42, "suite"));
  const Vec va = random_state(64, a);
  const Vec vb = random_state(64, b);
  CHECK((va - vb).norm() == 0.0);
  CHECK(va.norm() == Approx(1.0));
  std::mt19937_64 c(stream_seed(43, "suite"));
  CHECK((va - random_state(64, c)).norm() > 1e-3);
}
