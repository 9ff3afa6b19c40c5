#include <doctest.h>

#include "spanner/geometry.hpp"
#include "spanner/lsh.hpp"
#include "spanner/random.hpp"

#include <cmath>

using namespace spanner;

namespace {

// tau - (tau + sigma - 2 alpha(cr) sqrt(tau sigma)) / beta(cr)^2, in long
// double: at small cr, 1 - alpha^2 cancels badly in double.
double identity_residual(double tau, double sigma, double c, double r) {
  const long double cr = static_cast<long double>(c) * r;
  const long double al = 1.0L - cr * cr / 2.0L;
  const long double be2 = 1.0L - al * al;
  const long double t = tau, s = sigma;
  return static_cast<double>(t - (t + s - 2.0L * al * std::sqrt(t * s)) / be2);
}

}  // namespace

// Reference values come from tests/oracles/lsh_pins.py (mpmath, 40 digits).

TEST_CASE("alpha and beta") {
  CHECK(alpha(0.0) == 1.0);
  CHECK(std::abs(alpha(std::sqrt(2.0))) <= 1e-15);
  CHECK(beta(std::sqrt(2.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(alpha(2.0) == -1.0);
  CHECK_THROWS_AS(beta(2.0), DomainError);
  CHECK_THROWS_AS(beta(0.0), DomainError);
}

TEST_CASE("normal tail") {
  CHECK(tail_F(0.0) == 0.5);
  CHECK(std::abs(tail_F(1.0) - 0.15865525393145705) <= 1e-15);
  CHECK(log_tail_F(30.0) == doctest::Approx(-454.3212439563432).epsilon(1e-12));
  for (double eta : {8.0, 12.0}) CHECK(std::abs(log_tail_F(eta) / (-eta * eta / 2) - 1.0) <= 0.1);
  for (double lp : {-0.1, -3.0, -50.0, -1300.0})
    CHECK(log_tail_F(inverse_log_tail(lp)) == doctest::Approx(lp).epsilon(1e-10));
}

TEST_CASE("bivariate collision probability") {
  for (double eta : {-0.5, 0.3, 1.0, 2.2})
    CHECK(std::abs(collision_G(std::sqrt(2.0), eta, 0.7) - tail_F(eta) * tail_F(0.7)) <= 1e-9);
  double prev = 2.0;
  for (int i = 1; i <= 19; ++i) {
    const double g = collision_G(0.1 * i, 1.0, 1.0);
    CHECK(g < prev);
    prev = g;
  }
  CHECK(collision_G(1.0, 1.0, 1.0) == doctest::Approx(0.062514094709663834).epsilon(1e-9));
  CHECK(collision_G(0.5, 0.3, -0.2) == doctest::Approx(0.36515044251697278).epsilon(1e-9));
  CHECK(collision_G(1.9, 2.0, 2.5) == doctest::Approx(9.7712760587811964e-15).epsilon(1e-7));
  CHECK(log_collision_G(1.0, 1.0, 1.0) == doctest::Approx(std::log(0.062514094709663834)).epsilon(1e-9));
}

TEST_CASE("pinned thresholds for r = 0.1, eps = 0.5, n = 1024") {
  const LshSolution s = solve_thresholds(0.1, 0.5, 1024);
  CHECK(s.tau == doctest::Approx(572.76).epsilon(1e-12));
  CHECK(s.sigma == doctest::Approx(567.046719).epsilon(1e-12));
  CHECK(s.K == 3);
  CHECK(s.eta_u == doctest::Approx(51.09409212369582).epsilon(1e-10));
  CHECK(s.eta_q == doctest::Approx(51.35170068607566).epsilon(1e-10));
  CHECK(s.log_G == doctest::Approx(-1323.9047959834518).epsilon(1e-10));
  CHECK(s.log_T == doctest::Approx(3972.8130002390234).epsilon(1e-10));
  CHECK_THROWS_AS(solve_params(0.1, 0.5, 1024), TooManyParts);
}

TEST_CASE("closed-form identities on random configurations") {
  CounterRng rng(99);
  for (int i = 0; i < 20; ++i) {
    const double r = 0.05 + 0.4 * rng.uniform();
    const double eps = 0.1 + 0.9 * rng.uniform();
    const auto n = static_cast<Index>(64 + rng.below(8000));
    const LshSolution s = solve_thresholds(r, eps, n);
    CHECK(std::abs(s.sigma / s.tau - alpha(r) * alpha(r)) <= 1e-12);
    CHECK(std::abs(identity_residual(s.tau, s.sigma, s.c, r) + 1.0) <= 1e-9);
  }
}

TEST_CASE("budgeted parameters respect the part cap") {
  const LshParams p = solve_params_budgeted(0.3, 0.5, 512, 2048);
  CHECK(p.T <= 2048);
  CHECK(p.T >= 1);
  CHECK(std::abs(p.sigma / p.tau - alpha(0.3) * alpha(0.3)) <= 1e-12);
  const double g = collision_G(0.3, p.eta_u, p.eta_q);
  CHECK(static_cast<double>(p.T) >= 3.0 / std::pow(g, p.K) - 1.0);
}

TEST_CASE("bucket assignment") {
  const PointSet ps = random_sphere_dataset(30, 8, 4);
  LshParams p;
  p.r = 0.3;
  p.c = 1.5;
  p.K = 2;
  p.T = 25;
  p.seed = 5;
  p.eta_u = -1e6;
  p.eta_q = -1e6;
  const BucketAssignment all = assign_buckets(ps.coords(), p, Side::A);
  for (const auto& list : all) CHECK(static_cast<std::int64_t>(list.size()) == p.T);

  p.eta_u = 0.4;
  p.eta_q = 0.6;
  Matrix twin(8, 2);
  twin.col(0) = ps.point(0);
  twin.col(1) = ps.point(0);
  const BucketAssignment t = assign_buckets(twin, p, Side::B);
  CHECK(t[0] == t[1]);
  CHECK(assign_buckets(ps.coords(), p, Side::A, 1) == assign_buckets(ps.coords(), p, Side::A, 4));
  for (const auto& list : assign_buckets(ps.coords(), p, Side::A))
    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1] < list[i]);

  Matrix off = ps.coords();
  off.col(3) *= 1.5;
  CHECK_THROWS_AS(assign_buckets(off, p, Side::A), NotOnSphere);
}

TEST_CASE("side containment frequency matches tail_F^K") {
  const PointSet ps = random_sphere_dataset(1, 6, 8);
  LshParams p;
  p.r = 0.5;
  p.c = 1.5;
  p.K = 2;
  p.T = 100000;
  p.seed = 21;
  p.eta_u = 0.8;
  p.eta_q = 1.1;
  const auto members = assign_buckets(ps.coords(), p, Side::A);
  const double expected = std::pow(tail_F(p.eta_u), p.K);
  const double freq = static_cast<double>(members[0].size()) / static_cast<double>(p.T);
  CHECK(std::abs(freq - expected) <= 3.0 * std::sqrt(expected * (1 - expected) / p.T));
}
