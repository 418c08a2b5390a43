#include <catch2/catch.hpp>

#include "oracles.hpp"
#include "polaron/cosine_integral.hpp"

using namespace polaron;

TEST_CASE("Ci against the quadrature oracle") {
  for (double x : {0.1, 0.5, 1.0, std::numbers::pi / 2, 2.0, 3.9, 4.0, 4.1, 6.0, 10.0, 25.0}) {
    CHECK(cosine_integral(x) == Approx(oracle::cosine_integral(x)).margin(1e-11));
  }
}

TEST_CASE("Ci(pi/2) is positive, about 0.47200") {
  const double v = cosine_integral(std::numbers::pi / 2);
  CHECK(v > 0);
  CHECK(v == Approx(0.47200).margin(5e-6));
}

TEST_CASE("Ci tends to gamma + ln x at the origin") {
  for (double x : {1e-3, 1e-5, 1e-7}) {
    CHECK(std::abs(cosine_integral(x) - (euler_gamma + std::log(x))) < x * x);
  }
}

TEST_CASE("Ci decays like 1/x for large arguments") {
  CHECK(std::abs(cosine_integral(100.0)) <= 1.1 / 100.0);
  CHECK(std::abs(cosine_integral(1000.0)) <= 1.1 / 1000.0);
}

TEST_CASE("series and continued-fraction branches agree at the switch point") {
  const double left = cosine_integral(std::nextafter(ci_switch_point, 0.0));
  const double right = cosine_integral(std::nextafter(ci_switch_point, 8.0));
  CHECK(left == Approx(right).margin(1e-11));
}

TEST_CASE("nonpositive arguments are rejected") {
  CHECK_THROWS(cosine_integral(0.0));
  CHECK_THROWS(cosine_integral(-1.0));
}

TEST_CASE("log x - Ci x + gamma building block") {
  CHECK(log_minus_ci_plus_gamma(0.0) == 0.0);
  for (double x : {1e-4, 0.3, 2.0, 5.0, 40.0}) {
    const double direct = std::log(x) - oracle::cosine_integral(x) + euler_gamma;
    CHECK(log_minus_ci_plus_gamma(x) == Approx(direct).margin(1e-11));
  }
  SECTION("small-x series") {
    for (double x : {1e-3, 1e-2, 0.1}) {
      CHECK(log_minus_ci_plus_gamma(x) ==
            Approx(oracle::log_minus_ci_series(x)).epsilon(1e-10));
    }
  }
}
