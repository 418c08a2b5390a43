#include <catch2/catch.hpp>

#include "oracles.hpp"
#include "polaron/lattice.hpp"

using namespace polaron;

TEST_CASE("fermi ball counts match enumeration") {
  SECTION("kF = 0 holds only the origin") {
    const auto ball = build_fermi_ball(0.0);
    CHECK(ball.N == 1);
    CHECK(ball.EpW == 0);
    CHECK(ball.modes.front() == Momentum{0, 0, 0});
  }
  SECTION("kF = 1") {
    const auto ball = build_fermi_ball(1.0);
    CHECK(ball.N == 7);
    CHECK(ball.EpW == 6);
  }
  SECTION("kF = 2") {
    const auto ball = build_fermi_ball(2.0);
    CHECK(ball.N == 33);
    CHECK(ball.EpW == 78);
  }
  SECTION("independent loop order agrees across radii") {
    for (double kF : {1.5, 2.5, 3.0, 4.2}) {
      const auto ball = build_fermi_ball(kF);
      CHECK(static_cast<long long>(ball.N) == oracle::count_ball(ball.kF2));
      CHECK(ball.EpW == oracle::sum_norm2_ball(ball.kF2));
    }
  }
}

TEST_CASE("fermi ball is deterministic and lexicographically sorted") {
  const auto a = build_fermi_ball(3.0);
  const auto b = build_fermi_ball(3.0);
  REQUIRE(a.modes == b.modes);
  CHECK(std::is_sorted(a.modes.begin(), a.modes.end()));
}

TEST_CASE("ball count approaches the continuum volume") {
  double prev_err = 1e300;
  for (double kF : {5.0, 10.0, 20.0, 40.0}) {
    const auto ball = build_fermi_ball(kF);
    const double vol = 4.0 * std::numbers::pi / 3.0 * kF * kF * kF;
    const double err = std::abs(static_cast<double>(ball.N) / vol - 1.0);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.01);
}

TEST_CASE("gamma set halves an even support") {
  SECTION("single pair") {
    const auto V = Potential::from_pairs({{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}});
    const auto g = gamma_set(V);
    REQUIRE(g.size() == 1);
    CHECK(g[0] == Momentum{1, 0, 0});
  }
  SECTION("unit ball support") {
    const auto V = Potential::ball(1.0, 1.0);
    const auto g = gamma_set(V);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == Momentum{0, 0, 1});
    CHECK(g[1] == Momentum{0, 1, 0});
    CHECK(g[2] == Momentum{1, 0, 0});
  }
  SECTION("gamma and its negation partition the support") {
    const auto V = Potential::ball(2.0, 1.0);
    const auto g = gamma_set(V);
    CHECK(2 * g.size() == V.size());
    std::vector<Momentum> uni;
    for (const auto& k : g) {
      uni.push_back(k);
      uni.push_back(-k);
    }
    std::sort(uni.begin(), uni.end());
    CHECK(uni == V.support());
  }
  SECTION("zero mode is rejected") {
    const auto V = Potential::ball(1.0, 1.0, /*include_zero=*/true);
    CHECK_THROWS(gamma_set(V));
  }
}

TEST_CASE("potential validation") {
  CHECK_THROWS(Potential::from_pairs({{{1, 0, 0}, 1.0}}));  // odd support
  CHECK_THROWS(Potential::from_pairs({{{1, 0, 0}, 1.0}, {{-1, 0, 0}, 2.0}}));
  CHECK_THROWS(Potential::from_pairs({{{1, 0, 0}, -1.0}, {{-1, 0, 0}, -1.0}}));
  const auto V = Potential::ball(1.0, 0.25);
  CHECK(V.norm_l1() == Approx(1.5));
  CHECK(V.norm_l2() == Approx(std::sqrt(6 * 0.25 * 0.25)));
  CHECK(V.norm_sqrt_l2() == Approx(std::sqrt(1.5)));
  CHECK(V.support_radius() == Approx(1.0));
}

TEST_CASE("potential file round trip and validation") {
  const std::string path = "test_potential.txt";
  {
    std::ofstream out(path);
    out << "# test potential\n";
    out << "0 0 1 0.5\n0 0 -1 0.5\n";
    out << "1 0 0 0.25\n-1 0 0 0.25\n";
  }
  const auto V = Potential::load(path);
  CHECK(V.size() == 4);
  CHECK(V({0, 0, 1}) == 0.5);
  CHECK(V({1, 0, 0}) == 0.25);

  {
    std::ofstream out(path);
    out << "0 0 1 0.5\n";  // evenness violated
  }
  CHECK_THROWS(Potential::load(path));

  {
    std::ofstream out(path);
    out << "0 0 x 0.5\n";
  }
  CHECK_THROWS(Potential::load(path));
  std::remove(path.c_str());
}

TEST_CASE("mode sets") {
  const auto ball = build_fermi_ball(1.0);
  const auto V = Potential::ball(1.0, 1.0);
  SECTION("p_cut^2 = 2 gives 19 modes") {
    const auto ms = build_mode_set(ball, V, std::sqrt(2.0));
    CHECK(ms.size() == 19);
  }
  SECTION("degenerate truncation equals the ball") {
    const auto ms = build_mode_set(ball, V, 1.0);
    CHECK(ms.size() == 7);
    CHECK(ms.modes == ball.modes);
  }
  SECTION("kF = 2 with p_cut = 2") {
    const auto ball2 = build_fermi_ball(2.0);
    const auto ms = build_mode_set(ball2, V, 2.0);
    CHECK(ms.size() == 33);
  }
  SECTION("p_cut below kF is rejected") {
    CHECK_THROWS(build_mode_set(ball, V, 0.5));
  }
  SECTION("interaction shell coverage") {
    CHECK_FALSE(covers_interaction_shell(build_mode_set(ball, V, 1.0), ball, V));
    CHECK(covers_interaction_shell(build_mode_set(ball, V, 2.0), ball, V));
  }
}
