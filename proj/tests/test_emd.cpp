#include <doctest.h>

#include "oracles.hpp"
#include "spanner/emd.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace spanner;

namespace {

PointSet gaussians(Index n, Index d, CounterRng& rng) {
  Matrix m(d, n);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return PointSet(m);
}

// Exhaustive search over integral flows on a small network.
double enumerate_min_cost(const FlowNetwork& net) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> f(net.arcs.size(), 0);
  const auto feasible = [&] {
    std::vector<std::int64_t> excess(net.supply.begin(), net.supply.end());
    for (std::size_t i = 0; i < f.size(); ++i) {
      excess[static_cast<std::size_t>(net.arcs[i].from)] -= f[i];
      excess[static_cast<std::size_t>(net.arcs[i].to)] += f[i];
    }
    return std::all_of(excess.begin(), excess.end(), [](std::int64_t e) { return e == 0; });
  };
  while (true) {
    if (feasible()) {
      double c = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) c += net.arcs[i].cost * static_cast<double>(f[i]);
      best = std::min(best, c);
    }
    std::size_t i = 0;
    while (i < f.size() && f[i] == net.arcs[i].capacity) f[i++] = 0;
    if (i == f.size()) break;
    ++f[i];
  }
  return best;
}

}  // namespace

TEST_CASE("exact emd examples") {
  CounterRng rng(1);
  const PointSet a = gaussians(7, 3, rng);
  const Assignment self = emd_exact(a, a);
  CHECK(self.cost == 0.0);
  for (Index i = 0; i < 7; ++i) CHECK(self.match[static_cast<std::size_t>(i)] == i);

  Matrix o = Matrix::Zero(4, 1), u = Matrix::Zero(4, 1);
  u(2, 0) = 1.0;
  CHECK(emd_exact(PointSet(o), PointSet(u)).cost == doctest::Approx(1.0));

  for (int trial = 0; trial < 10; ++trial) {
    const PointSet x = gaussians(8, 4, rng), y = gaussians(8, 4, rng);
    const Assignment as = emd_exact(x, y);
    CHECK(as.cost == doctest::Approx(oracle::brute_force_emd(x, y)).epsilon(1e-12));
    double check = 0.0;
    for (Index i = 0; i < 8; ++i) check += (x.point(i) - y.point(as.match[static_cast<std::size_t>(i)])).norm();
    CHECK(check / 8 == doctest::Approx(as.cost).epsilon(1e-12));
  }
  CHECK_THROWS_AS(emd_exact(gaussians(3, 2, rng), gaussians(4, 2, rng)), SizeError);
  CHECK_THROWS_AS(emd_exact(gaussians(513, 1, rng), gaussians(513, 1, rng)), TooLarge);
}

TEST_CASE("hungarian agrees with min cost flow at n = 10") {
  CounterRng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const PointSet x = gaussians(10, 5, rng), y = gaussians(10, 5, rng);
    FlowNetwork net;
    net.nodes = 20;
    net.supply.assign(20, 0);
    for (Index i = 0; i < 10; ++i) {
      net.supply[static_cast<std::size_t>(i)] = 1;
      net.supply[static_cast<std::size_t>(10 + i)] = -1;
      for (Index j = 0; j < 10; ++j) net.arcs.push_back({i, 10 + j, (x.point(i) - y.point(j)).norm(), 1});
    }
    CHECK(min_cost_flow(net).cost / 10 == doctest::Approx(emd_exact(x, y).cost).epsilon(1e-12));
  }
}

TEST_CASE("min cost flow toy networks") {
  FlowNetwork one{2, {1, -1}, {{0, 1, 2.5, 1}}};
  const FlowSolution s1 = min_cost_flow(one);
  CHECK(s1.cost == 2.5);
  CHECK(s1.flow == std::vector<std::int64_t>{1});

  FlowNetwork zero{3, {0, 0, 0}, {{0, 1, 1.0, 4}, {1, 2, 1.0, 4}}};
  const FlowSolution s0 = min_cost_flow(zero);
  CHECK(s0.cost == 0.0);
  CHECK(s0.flow == std::vector<std::int64_t>{0, 0});

  CounterRng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    // Sources 0,1, sinks 2,3, relay 4; crossing arcs and a relay path.
    FlowNetwork net;
    net.nodes = 5;
    const std::int64_t s0 = 1 + static_cast<std::int64_t>(rng.below(2));
    const std::int64_t s1 = 1 + static_cast<std::int64_t>(rng.below(2));
    const std::int64_t t0 = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s0 + s1 + 1)));
    net.supply = {s0, s1, -t0, -(s0 + s1 - t0), 0};
    for (Index u : {0, 1})
      for (Index v : {2, 3}) net.arcs.push_back({u, v, std::floor(10 * rng.uniform()), 2});
    net.arcs.push_back({0, 4, rng.uniform(), 3});
    net.arcs.push_back({1, 4, rng.uniform(), 3});
    net.arcs.push_back({4, 2, rng.uniform(), 3});
    net.arcs.push_back({4, 3, rng.uniform(), 3});
    const double expected = enumerate_min_cost(net);
    const FlowSolution sol = min_cost_flow(net);
    CHECK(sol.cost == doctest::Approx(expected).epsilon(1e-12));
  }

  FlowNetwork cut{3, {1, 0, -1}, {{0, 1, 1.0, 1}}};
  CHECK_THROWS_AS(min_cost_flow(cut), Infeasible);
  FlowNetwork unbalanced{2, {2, -1}, {{0, 1, 1.0, 2}}};
  CHECK_THROWS_AS(min_cost_flow(unbalanced), DomainError);
  FlowNetwork negative{2, {1, -1}, {{0, 1, -1.0, 1}}};
  CHECK_THROWS_AS(min_cost_flow(negative), DomainError);
}

TEST_CASE("spanner emd: identical sets cost nothing") {
  CounterRng rng(4);
  const PointSet a = gaussians(20, 4, rng);
  const EmdResult res = emd_spanner(a, a, {});
  CHECK(res.cost == 0.0);
  CHECK(res.prematched == 20);
}

TEST_CASE("spanner emd: forced pair") {
  Matrix o = Matrix::Zero(3, 1), u = Matrix::Zero(3, 1);
  u(0, 0) = 2.0;
  const EmdResult res = emd_spanner(PointSet(o), PointSet(u), {});
  CHECK(res.cost >= 2.0 - 1e-12);
  CHECK(res.cost <= 2.0 * 1.25 + 1e-12);
}

TEST_CASE("spanner emd sandwich") {
  CounterRng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const PointSet a = gaussians(64, 16, rng), b = gaussians(64, 16, rng);
    EmdOptions o;
    o.seed = static_cast<std::uint64_t>(trial);
    o.threads = 1;
    const double exact = emd_exact(a, b).cost;
    for (EmdOrientation orient : {EmdOrientation::QueryToBuild, EmdOrientation::Symmetric}) {
      o.orientation = orient;
      const EmdResult res = emd_spanner(a, b, o);
      CHECK(res.cost >= exact - 1e-9);
      CHECK(res.cost <= 1.25 * exact);
      CHECK(res.total_supply == 64);
    }
  }
  CHECK(parse_orientation(to_string(EmdOrientation::Symmetric)) == EmdOrientation::Symmetric);
  CHECK_THROWS(parse_orientation("sideways"));
}

TEST_CASE("weighted spanner emd") {
  Matrix a(1, 2), b(1, 2);
  a << 0.0, 10.0;
  b << 1.0, 10.0;
  // 3 units at 0 -> 1, 1 unit coincident at 10.
  const EmdResult res = emd_spanner_weighted(PointSet(a), {3, 1}, PointSet(b), {3, 1}, {});
  CHECK(res.prematched == 1);
  CHECK(res.total_supply == 4);
  CHECK(res.cost >= 0.75 - 1e-12);
  CHECK(res.cost <= 0.75 * 1.25 + 1e-12);
  CHECK_THROWS_AS(emd_spanner_weighted(PointSet(a), {3, 1}, PointSet(b), {3, 2}, {}), SizeError);
  CHECK_THROWS_AS(emd_spanner_weighted(PointSet(a), {-1, 1}, PointSet(b), {-1, 1}, {}), DomainError);
}
