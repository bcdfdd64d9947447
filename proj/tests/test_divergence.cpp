#include <cmath>

#include "doctest.h"
#include "matchkit/divergence.hpp"
#include "support.hpp"

using namespace matchkit;
using namespace matchkit::testing;

TEST_CASE("phi") {
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(1.0) == 0.0);
  CHECK(phi(std::exp(1.0)) == doctest::Approx(std::exp(1.0)));
  CHECK(phi(2.0) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK_THROWS_AS(phi(-0.1), Error);
  CHECK_THROWS_AS(phi(std::nan("")), Error);
}

TEST_CASE("KL of a sample against itself is zero") {
  Rng rng(31);
  const auto x = random_points(rng, 64, 2, false);
  const auto est = kl_estimate(x, x, 1);
  CHECK(est.value == 0.0);
  CHECK(est.m == 1);
}

TEST_CASE("KL from uniform counts is zero") {
  // each z lands on a distinct x with m = 1: counts all equal N1*M/N0 = 1
  CHECK(kl_estimate(points_1d({0, 10, 20}), points_1d({0.1, 10.1, 19.9}), 1).value == 0.0);
}

TEST_CASE("KL on the three-point example") {
  // ratios 1.5, 0, 1.5
  const double expect = (2.0 * 1.5 * std::log(1.5)) / 3.0;
  CHECK(kl_estimate(points_1d({0, 1, 2}), points_1d({0.4, 1.6}), 1).value == doctest::Approx(expect));
}

TEST_CASE("M selection rule for KL") {
  CHECK(select_m_kl(1024, 1024, 1, 1.0) == 32);
  CHECK(select_m_kl(10000, 100, 1, 1.0) == 1000);
  CHECK(select_m_kl(1024, 1024, 1, 1e-9) == 1);
}
