#include <cmath>

#include "doctest.h"
#include "matchkit/ratio.hpp"
#include "matchkit/simulate.hpp"
#include "support.hpp"

using namespace matchkit;
using namespace matchkit::testing;

TEST_CASE("ratio at sample points") {
  const auto est = density_ratio_at_sample(points_1d({0, 1, 2}), points_1d({0.4, 1.6}), 1);
  REQUIRE(est.values.size() == 3);
  CHECK(est.values(0) == 1.5);
  CHECK(est.values(1) == 0.0);
  CHECK(est.values(2) == 1.5);
  CHECK(est.mean() == 1.0);
  CHECK(est.eval_kind == EvalKind::SamplePoints);
}

TEST_CASE("self matching gives unit ratios") {
  Rng rng(1);
  const auto x = random_points(rng, 40, 3, false);
  const auto est = density_ratio_at_sample(x, x, 1);
  for (Index i = 0; i < est.values.size(); ++i) CHECK(est.values(i) == 1.0);
}

TEST_CASE("ratio at new points") {
  const auto est = density_ratio_at_points(points_1d({0, 1, 2}), points_1d({0.4}), 1, points_1d({0.5, 40}));
  CHECK(est.at_points.values(0) == 3.0);
  CHECK(est.at_points.values(1) == 0.0);
  CHECK(est.at_points.eval_kind == EvalKind::NewPoints);
  CHECK(est.at_sample.values.size() == 3);
}

TEST_CASE("M selection rule for the ratio") {
  CHECK(select_m_ratio(4096, 4096, 2, 1.0) == 64);
  CHECK(select_m_ratio(1000000, 100, 2, 1.0) == 100000);
  CHECK(select_m_ratio(4096, 4096, 2, 1e-9) == 1);
  CHECK(select_m_ratio(10, 10, 1, 1e6) == 10);
}

TEST_CASE("unit ball volume") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
}

TEST_CASE("two-step baseline") {
  const auto eq = two_step_ratio(points_1d({0, 1}), points_1d({0, 1}), 1, points_1d({0.3}));
  CHECK(eq.values(0) == 1.0);
  // both radii zero at a shared point: 0/0 reads as 0
  const auto zero = two_step_ratio(points_1d({0, 1}), points_1d({1, 0}), 1, points_1d({1}));
  CHECK(zero.values(0) == 0.0);
  CHECK_THROWS_AS(two_step_ratio(points_1d({0, 1, 2}), points_1d({0}), 2, points_1d({0})), Error);
}

TEST_CASE("two-step baseline is near one for identical uniforms on average") {
  const auto spec = TwoSampleSpec::uniform_cube(1);
  double total = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto [x, z] = generate_two_sample(spec, 5000, 5000, static_cast<std::uint64_t>(s));
    total += two_step_ratio(x, z, 50, points_1d({0.5})).values(0);
  }
  const double mean = total / seeds;
  CHECK(mean >= 0.8);
  CHECK(mean <= 1.2);
}

TEST_CASE("Noshad baseline") {
  const auto x = points_1d({0, 1, 2});
  const auto z = points_1d({0.4, 1.6});
  CHECK(noshad_ratio(x, z, 3, points_1d({0.45})).values(0) == doctest::Approx(0.5));
  // all pooled neighbors from z
  CHECK(noshad_ratio(points_1d({100, 101}), points_1d({0, 0.1}), 2, points_1d({0.05})).values(0) ==
        doctest::Approx(1.0 * 2.0 / 1.0));
  // all pooled neighbors from x
  CHECK(noshad_ratio(x, points_1d({50}), 2, points_1d({0.9})).values(0) == 0.0);
}

TEST_CASE("property: mean ratio over the sample is one") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_two_sample(rng);
    const auto est = density_ratio_at_sample(inst.x, inst.z, inst.m);
    CHECK(std::abs(est.mean() - 1.0) <= 1e-12);
    const auto oracle = oracle_counts(inst.x, inst.z, inst.m);
    const double scale = static_cast<double>(inst.x.size()) / static_cast<double>(inst.z.size() * inst.m);
    for (Index i = 0; i < inst.x.size(); ++i) {
      CHECK(est.values(i) == doctest::Approx(scale * static_cast<double>(oracle[static_cast<std::size_t>(i)])));
    }
  }
}

TEST_CASE("property: ratio is invariant to translating both samples") {
  Rng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_two_sample(rng, 80, 3, 10);
    RowMatrix<double> xs = inst.x.matrix();
    RowMatrix<double> zs = inst.z.matrix();
    // shift by a power of two so coordinates stay exactly representable
    xs.array() += 8.0;
    zs.array() += 8.0;
    const auto a = density_ratio_at_sample(inst.x, inst.z, inst.m);
    const auto b = density_ratio_at_sample(PointSet(xs), PointSet(zs), inst.m);
    CHECK(a.values == b.values);
  }
}
