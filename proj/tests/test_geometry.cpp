#include <doctest.h>

#include "spanner/geometry.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace spanner;

namespace {

PointSet line(std::initializer_list<double> xs) {
  Matrix m(1, static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return PointSet(m);
}

}  // namespace

TEST_CASE("aspect ratio examples") {
  CHECK(aspect_ratio(line({0.0, 5.0})) == doctest::Approx(1.0));
  CHECK(aspect_ratio(line({0.0, 1.0, 3.0})) == doctest::Approx(3.0));
  CHECK_THROWS_AS(aspect_ratio(line({2.0, 2.0, 2.0})), AspectUndefined);
  const PointSet s = random_sphere_dataset(200, 8, 3);
  CHECK(aspect_ratio(s) >= 1.0);
}

TEST_CASE("point set validation") {
  Matrix m = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(PointSet(Matrix(2, 0)), EmptyInput);
  CHECK_THROWS_AS(PointSet(m, {1, 1}), DomainError);
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(PointSet{m}, DomainError);
}

TEST_CASE("sphere dataset") {
  const PointSet one = random_sphere_dataset(1, 3, 0);
  CHECK(std::abs(one.point(0).norm() - 1.0) <= 1e-9);

  const PointSet p = random_sphere_dataset(1000, 200, 7);
  Index inside = 0, total = 0;
  for (Index i = 0; i < p.size(); ++i)
    for (Index j = i + 1; j < p.size(); ++j, ++total)
      if (std::abs(p.distance(i, j) - std::sqrt(2.0)) <= 0.15) ++inside;
  CHECK(static_cast<double>(inside) >= 0.99 * static_cast<double>(total));
  CHECK(random_sphere_dataset(1000, 200, 7) == p);
  CHECK_FALSE(random_sphere_dataset(1000, 200, 8) == p);
}

TEST_CASE("two spheres dataset radii") {
  const Index n = 101;
  const PointSet p = two_spheres_dataset(n, 16, 5);
  const Index split = two_spheres_split(n);
  CHECK(split == 51);
  for (Index i = 0; i < n; ++i)
    CHECK(p.point(i).norm() == doctest::Approx(i < split ? 2.0 : 1.0).epsilon(1e-12));
}

TEST_CASE("deduplicate keeps first ids and multiplicities") {
  const PointSet p = line({1.0, 2.0, 1.0, 3.0, 2.0, 1.0});
  const Deduplicated d = deduplicate(p);
  REQUIRE(d.points.size() == 3);
  CHECK(d.multiplicity == std::vector<std::int64_t>{3, 2, 1});
  CHECK(d.points.ids() == std::vector<std::int64_t>{0, 1, 3});
  CHECK(d.representative == std::vector<Index>{0, 1, 0, 2, 1, 0});
  CHECK(d.first_position == std::vector<Index>{0, 1, 3});
}

TEST_CASE("distance extremes and double sweep") {
  const PointSet p = line({0.0, 0.5, 4.0, 9.0});
  const DistanceExtremes e = distance_extremes(p);
  CHECK(e.exact);
  CHECK(e.min_nonzero == doctest::Approx(0.5));
  CHECK(e.max == doctest::Approx(9.0));
  const std::vector<Index> all{0, 1, 2, 3};
  const double l = double_sweep(p, all);
  CHECK(l <= 9.0 + 1e-12);
  CHECK(2.0 * l >= 9.0);
}

TEST_CASE("scale ladder covers the distance range") {
  const ScaleLadder lad = scale_ladder(0.1, 10.0, 0.25);
  REQUIRE(!lad.levels.empty());
  CHECK(lad.levels.front() <= 0.1 + 1e-12);
  CHECK(lad.levels.back() >= 10.0 - 1e-12);
  for (std::size_t i = 1; i < lad.levels.size(); ++i)
    CHECK(lad.levels[i] / lad.levels[i - 1] <= 1.25 + 1e-12);
  const auto expected = static_cast<std::size_t>(std::ceil(std::log(100.0) / std::log(1.25))) + 1;
  CHECK(lad.levels.size() <= expected);
  CHECK_THROWS_AS(scale_ladder(0.0, 1.0, 0.25), InvalidScale);
}

TEST_CASE("sphere reduction: small diameter gives one instance") {
  const PointSet p = random_sphere_dataset(50, 10, 1);
  const auto inst = to_sphere_instances(p, 2.5, 0.5, 11);
  REQUIRE(inst.size() == 1);
  CHECK(inst[0].points.cols() == 50);
}

TEST_CASE("sphere reduction: single point") {
  const PointSet p = random_sphere_dataset(1, 4, 2);
  const auto inst = to_sphere_instances(p, 1.0, 0.5, 3);
  REQUIRE(inst.size() == 1);
  CHECK(inst[0].points.cols() == 1);
  CHECK(std::abs(inst[0].points.col(0).norm() - 1.0) <= 1e-9);
}

TEST_CASE("sphere reduction: unit norms and distance preservation") {
  const double eps = 0.5;
  const PointSet p = gaussian_dataset(400, 12, 9);
  const double r = 1.5;
  CHECK_THROWS_AS(to_sphere_instances(p, 0.0, eps, 1), InvalidScale);
  const auto inst = to_sphere_instances(p, r, eps, 17);
  std::map<Index, int> appearances;
  Index checked = 0;
  for (const auto& s : inst) {
    CHECK(s.scaled_radius > 0.0);
    CHECK(s.scaled_radius <= 0.5);
    for (Index c = 0; c < s.points.cols(); ++c) {
      CHECK(std::abs(s.points.col(c).norm() - 1.0) <= 1e-9);
      ++appearances[s.origin[static_cast<std::size_t>(c)]];
    }
    for (Index i = 0; i < s.points.cols() && checked < 1000; ++i)
      for (Index j = i + 1; j < s.points.cols() && checked < 1000; ++j) {
        const double orig = p.distance(s.origin[static_cast<std::size_t>(i)], s.origin[static_cast<std::size_t>(j)]);
        if (orig < r / 2 || orig > 2 * r) continue;
        const double scaled = (s.points.col(i) - s.points.col(j)).norm() * s.scale_factor;
        CHECK(std::abs(scaled - orig) <= eps / 10.0 * orig);
        ++checked;
      }
  }
  CHECK(checked > 100);
}

TEST_CASE("sphere reduction: pair at distance r usually shares an instance") {
  const double eps = 0.5, r = 1.0;
  Matrix m = Matrix::Zero(6, 2);
  m(0, 1) = r;
  const PointSet p(m);
  int shared = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const auto inst = to_sphere_instances(p, r, eps, static_cast<std::uint64_t>(t));
    for (const auto& s : inst)
      if (s.points.cols() == 2) {
        const double d = (s.points.col(0) - s.points.col(1)).norm();
        CHECK(std::abs(d - s.scaled_radius) <= eps / 10.0 * s.scaled_radius);
        ++shared;
        break;
      }
  }
  // Success probability >= 1 - eps/10 = 0.95; allow 3 standard errors.
  const double se = std::sqrt(0.95 * 0.05 / trials);
  CHECK(static_cast<double>(shared) / trials >= 0.95 - 3.0 * se);
}

TEST_CASE("counter rng is reproducible") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}
