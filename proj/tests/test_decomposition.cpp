#include <doctest.h>

#include "oracles.hpp"
#include "spanner/decomposition.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace spanner;

namespace {

std::vector<Index> iota_vec(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

// Two balls of radius `rad` around 0 and sep * e_0; label = i >= n/2.
PointSet two_balls(Index n, Index d, double rad, double sep, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix m(d, n);
  for (Index i = 0; i < n; ++i) {
    Vector v(d);
    for (Index k = 0; k < d; ++k) v[k] = rng.normal();
    v *= rad * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / v.norm();
    if (i >= n / 2) v[0] += sep;
    m.col(i) = v;
  }
  return PointSet(m);
}

void check_clusters_within(const DistanceTable& t, const std::vector<Cluster>& cl, double bound) {
  for (const auto& c : cl) CHECK(exact_diameter(t, c) <= bound + 1e-12);
}

bool single_ball(const Cluster& c, Index n) {
  return std::all_of(c.begin(), c.end(), [&](Index p) { return p < n / 2; }) ||
         std::all_of(c.begin(), c.end(), [&](Index p) { return p >= n / 2; });
}

}  // namespace

TEST_CASE("average distance examples") {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 3.0;
  const PointSet p(m);
  const DistanceTable t(p);
  const std::vector<Index> both{0, 1}, one{1};
  CHECK(avg_squared_exact(t, both) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(avg_exact(t, one) == 0.0);
  CHECK(avg_estimate(t, one, 0.2, 1) == 0.0);
  CHECK(exact_diameter(t, both) == 3.0);
}

TEST_CASE("avg estimate lies in its band") {
  const PointSet p = gaussian_dataset(500, 8, 3);
  const DistanceTable t(p);
  const auto all = iota_vec(500);
  const double exact = avg_exact(t, all);
  const double dia_ub = 2.0 * double_sweep(p, all);
  for (double eps : {0.3, 0.5}) {
    const double est = avg_estimate(t, all, eps, 9);
    CHECK(est >= exact);
    CHECK(est <= exact + eps * dia_ub);
  }
  CHECK(avg_sample_count(500, 0.5) > 0);
}

TEST_CASE("fraction of pairs within (1+eps) avg is at least eps") {
  CounterRng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto n = static_cast<Index>(30 + rng.below(300));
    const PointSet p = i % 2 ? gaussian_dataset(n, 6, 100 + i) : clustered_dataset(n, 6, 100 + i, 3);
    const DistanceTable t(p);
    const auto all = iota_vec(n);
    const double avg = avg_exact(t, all);
    for (double eps : {0.1, 0.3}) {
      Index close = 0;
      for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) close += t(a, b) <= (1 + eps) * avg;
      CHECK(static_cast<double>(close) >= eps * static_cast<double>(n * n));
    }
  }
}

TEST_CASE("negative type check") {
  Matrix m(2, 2);
  m << 0.0, 0.7, 0.0, 0.0;
  const PointSet two(m);
  const DistanceTable t2(two);
  const std::vector<Index> a{0}, b{1};
  CHECK(negative_type_check(t2, a, b, 1.0));

  CounterRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 10 + static_cast<Index>(rng.below(40));
    const PointSet p = trial % 3 == 0 ? two_balls(n, 5, 0.5, 0.0, trial) : gaussian_dataset(n, 4, 500 + trial);
    const DistanceTable t(p);
    std::vector<Index> sa, sb;
    for (Index i = 0; i < n; ++i) (rng.below(2) ? sa : sb).push_back(i);
    if (sa.empty() || sb.empty()) continue;
    double r = 0.0;
    for (Index x : sa)
      for (Index y : sb) r = std::max(r, t(x, y));
    CHECK(negative_type_check(t, sa, sb, r));
  }
}

TEST_CASE("extraction config") {
  ExtractionConfig cfg;
  cfg.a = 1.0;
  cfg.eps = 0.1;
  cfg.c = 0.1;
  cfg.t = 0.02;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg.t = 0.005;
  CHECK_NOTHROW(validate(cfg));
  CHECK(effective_t(0.1, 0.1, 0.02) == doctest::Approx(0.005));
  CHECK(effective_t(0.1, 0.1, 0.001) == 0.001);
  CHECK(decomposition_t(100, 0.1) == doctest::Approx(0.5));
}

TEST_CASE("extraction on identical points") {
  const PointSet p(Matrix::Ones(3, 40));
  const DistanceTable t(p);
  ExtractionConfig cfg;
  cfg.a = 0.0;
  const auto cl = extract_clusters(t, iota_vec(40), cfg, 1);
  REQUIRE(!cl.empty());
  check_clusters_within(t, cl, 0.0);
}

TEST_CASE("extraction respects planted balls") {
  const Index n = 200;
  const PointSet p = two_balls(n, 6, 0.1, 10.0, 5);
  const DistanceTable t(p);
  ExtractionConfig cfg;
  cfg.a = 1.0;
  cfg.eps = 0.2;
  cfg.c = 0.1;
  cfg.t = effective_t(cfg.eps, cfg.c, decomposition_t(n, cfg.eps));
  const auto all = iota_vec(n);
  const auto cl = extract_clusters(t, all, cfg, 3);
  REQUIRE(!cl.empty());
  std::set<Index> seen;
  for (const auto& c : cl) {
    CHECK(single_ball(c, n));
    for (Index x : c) CHECK(seen.insert(x).second);
  }
  check_clusters_within(t, cl, (1 + cfg.eps) * cfg.a);
  const auto again = extract_clusters(t, all, cfg, 3);
  CHECK(again == cl);
}

TEST_CASE("low diameter decomposition") {
  SUBCASE("singleton") {
    const PointSet p(Matrix::Zero(2, 1));
    const DistanceTable t(p);
    const Decomposition d = low_diameter_decomposition(t, iota_vec(1), 0.2, 1);
    CHECK(d.clusters.size() == 1);
  }
  SUBCASE("tight core inside a wide set") {
    // 95 points within 1e-3 of the origin, 5 spread out at distance ~1.
    Matrix m = two_balls(100, 4, 1e-3, 0.0, 8).coords();
    for (Index i = 95; i < 100; ++i) m(i % 4, i) += 1.0 + 0.1 * static_cast<double>(i - 95);
    const PointSet p(m);
    const DistanceTable t(p);
    const Decomposition d = low_diameter_decomposition(t, iota_vec(100), 0.2, 2);
    CHECK(d.clusters.size() <= 9 + 5);
    for (std::size_t c = 0; c < d.clusters.size(); ++c)
      CHECK(exact_diameter(t, d.clusters[c]) <= d.cluster_diameter[c] + 1e-12);
  }
  SUBCASE("two balls, 1000 points") {
    const Index n = 1000;
    // At eps = 0.1 the extraction threshold (1+eps)^2 avg stays below the
    // ball separation, so a cluster cannot straddle the two balls.
    const PointSet p = two_balls(n, 6, 0.05, 10.0, 9);
    const DistanceTable t(p);
    const Decomposition d = low_diameter_decomposition(t, iota_vec(n), 0.1, 4);
    CHECK(d.clusters.size() <= 48);
    Index covered = 0;
    for (std::size_t c = 0; c < d.clusters.size(); ++c) {
      CHECK(single_ball(d.clusters[c], n));
      CHECK(exact_diameter(t, d.clusters[c]) <= d.cluster_diameter[c] + 1e-12);
      CHECK(d.cluster_diameter[c] <= d.certified_diameter);
      covered += static_cast<Index>(d.clusters[c].size());
    }
    CHECK(covered == n);
  }
  const PointSet p(Matrix::Zero(2, 3));
  const DistanceTable t(p);
  CHECK_THROWS(low_diameter_decomposition(t, iota_vec(3), 0.7, 1));
}

TEST_CASE("query side decomposition") {
  const double r = 1.0, eps = 0.2;
  const Index n = 160;
  // Q: a diffuse set plus a tight cluster, all within radius 1.
  CounterRng rng(3);
  Matrix m(5, n);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < 5; ++k) m(k, i) = (i < 60 ? 0.005 : 0.35) * rng.normal();
  const PointSet p(m);
  const DistanceTable t(p);
  const auto q = iota_vec(n);
  QuerySideDecomposer dec(t, q, r, eps, 7);
  CHECK(dec.grid_size() == 11);
  CHECK(dec.grid_value(10) == doctest::Approx(2.0));

  std::vector<Index> tight(q.begin(), q.begin() + 60);
  const int g = dec.select(tight);
  CHECK(dec.grid_value(g) <= 2 * eps * r + 1e-12);
  const Decomposition dt = dec.restrict_to(tight, g);
  CHECK(dt.clusters.size() <= 9);

  const std::vector<Index> one{100};
  CHECK(dec.restrict_to(one, dec.select(one)).clusters.size() == 1);

  for (int gi = 0; gi < dec.grid_size(); ++gi) {
    const auto& layer = dec.layer(gi);
    for (const auto& c : layer.clusters) CHECK(exact_diameter(t, c) <= layer.diameter + 1e-12);
  }

  const std::vector<std::vector<Index>> vs{tight, one};
  const auto ds = decompose_query_side(t, q, vs, r, eps, 7);
  REQUIRE(ds.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<Index> flat;
    for (const auto& c : ds[i].clusters) flat.insert(flat.end(), c.begin(), c.end());
    std::sort(flat.begin(), flat.end());
    CHECK(flat == vs[i]);
  }
  const std::vector<Index> not_subset{0, 1};
  const std::vector<Index> small_q{0};
  CHECK_THROWS_AS(decompose_query_side(t, small_q, {not_subset}, r, eps, 1), DomainError);
}

TEST_CASE("whole query side within eps r is one cluster") {
  const PointSet p = two_balls(50, 4, 0.05, 0.0, 3);
  const DistanceTable t(p);
  const auto q = iota_vec(50);
  QuerySideDecomposer dec(t, q, 1.0, 0.2, 2);
  const Decomposition d = dec.restrict_to(q, dec.select(q));
  CHECK(d.clusters.size() == 1);
}
