#include <cmath>

#include "doctest.h"
#include "matchkit/kdtree.hpp"
#include "support.hpp"

using namespace matchkit;
using namespace matchkit::testing;

TEST_CASE("single point index") {
  const NnIndex tree(points_1d({3.0}));
  CHECK(tree.size() == 1);
  CHECK(tree.depth() == 1);
  const auto nn = tree.knn(std::vector<double>{10.0}, 1);
  REQUIRE(nn.size() == 1);
  CHECK(nn[0].id == 0);
  CHECK(nn[0].distance() == doctest::Approx(7.0));
}

TEST_CASE("median split of three points") {
  const NnIndex tree(points_1d({2, 0, 1}), 1);
  const auto& root = tree.nodes().front();
  REQUIRE_FALSE(root.is_leaf());
  CHECK(root.split_dim == 0);
  CHECK(root.split_value == 1.0);
}

TEST_CASE("knn examples over X = [0,1,2]") {
  const NnIndex tree(points_1d({0, 1, 2}));
  const auto a = tree.knn(std::vector<double>{0.4}, 1);
  REQUIRE(a.size() == 1);
  CHECK(a[0].id == 0);
  CHECK(a[0].distance() == doctest::Approx(0.4));

  const auto b = tree.knn(std::vector<double>{1.6}, 2);
  REQUIRE(b.size() == 2);
  CHECK(b[0].id == 2);
  CHECK(b[0].distance() == doctest::Approx(0.4));
  CHECK(b[1].id == 1);
  CHECK(b[1].distance() == doctest::Approx(0.6));

  const auto c = tree.knn(std::vector<double>{1.0}, 1);
  CHECK(c[0].id == 1);
  CHECK(c[0].squared_distance == 0.0);
}

TEST_CASE("knn argument checks") {
  const NnIndex tree(points_1d({0, 1, 2}));
  CHECK_THROWS_AS(tree.knn(std::vector<double>{0.0}, 0), Error);
  CHECK_THROWS_AS(tree.knn(std::vector<double>{0.0}, 4), Error);
  CHECK_THROWS_AS(tree.knn(std::vector<double>{0.0, 1.0}, 1), Error);
  CHECK_THROWS_AS(NnIndex(PointSet::from_rows({}, 2)), Error);
}

TEST_CASE("every point is its own nearest neighbor") {
  Rng rng(7);
  const auto pts = random_points(rng, 1000, 3, false);
  const NnIndex tree(pts);
  for (Index i = 0; i < pts.size(); ++i) {
    const auto nn = tree.knn(pts.row(i), 1);
    CHECK(nn[0].id == i);
    CHECK(nn[0].squared_distance == 0.0);
  }
}

TEST_CASE("ties resolve to the smaller id") {
  const NnIndex tree(points_1d({1, -1, 1, -1}));
  const auto nn = tree.knn(std::vector<double>{0.0}, 4);
  REQUIRE(nn.size() == 4);
  for (Index i = 0; i < 4; ++i) CHECK(nn[static_cast<std::size_t>(i)].id == i);
}

TEST_CASE("property: knn equals brute force") {
  Rng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(200));
    const Index d = 1 + static_cast<Index>(rng.below(5));
    const bool grid = rng.bernoulli(0.4);
    const auto pts = random_points(rng, n, d, grid);
    const auto queries = random_points(rng, 10, d, grid);
    const Index leaf = 1 + static_cast<Index>(rng.below(20));
    const NnIndex tree(pts, leaf);
    for (Index q = 0; q < queries.size(); ++q) {
      const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min<Index>(20, n))));
      const auto expect = ranked(queries, q, pts);
      const auto got = tree.knn(queries.row(q), k);
      REQUIRE(static_cast<Index>(got.size()) == k);
      for (Index s = 0; s < k; ++s) {
        CHECK(got[static_cast<std::size_t>(s)].id == expect[static_cast<std::size_t>(s)].second);
        CHECK(got[static_cast<std::size_t>(s)].squared_distance == expect[static_cast<std::size_t>(s)].first);
      }
    }
  }
}

TEST_CASE("property: neighbor stream yields all points in brute-force order") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(150));
    const Index d = 1 + static_cast<Index>(rng.below(4));
    const bool grid = rng.bernoulli(0.5);
    const auto pts = random_points(rng, n, d, grid);
    const auto query = random_points(rng, 1, d, grid);
    const NnIndex tree(pts, 1 + static_cast<Index>(rng.below(8)));
    const auto expect = ranked(query, 0, pts);
    auto stream = tree.stream(query.row(0));
    for (const auto& [d2, id] : expect) {
      const auto peek = stream.peek_squared_distance();
      REQUIRE(peek.has_value());
      CHECK(*peek == d2);
      const auto nb = stream.next();
      REQUIRE(nb.has_value());
      CHECK(nb->id == id);
      CHECK(nb->squared_distance == d2);
    }
    CHECK_FALSE(stream.next().has_value());
    CHECK_FALSE(stream.peek_squared_distance().has_value());
  }
}

TEST_CASE("single precision tree") {
  BasicPointSet<float> pts = BasicPointSet<float>::from_values({0.f, 1.f, 2.f});
  const KdTree<float> tree(pts);
  const auto nn = tree.knn(std::vector<float>{1.6f}, 1);
  CHECK(nn[0].id == 2);
}
