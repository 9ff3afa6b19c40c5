#pragma once

#include "spanner/common.hpp"

#include <cstdint>
#include <vector>

namespace spanner {

double alpha(double s);
double beta(double s);

// Standard normal upper tail and its logarithm (accurate far into the tail).
double tail_F(double eta);
double log_tail_F(double eta);
// Smallest-error eta with log_tail_F(eta) == log_p, for log_p <= 0.
double inverse_log_tail(double log_p);

// Pr[X >= eta, Y >= sigma] for standard normals with correlation alpha(s).
double collision_G(double s, double eta, double sigma);
double log_collision_G(double s, double eta, double sigma);

// The closed-form parameter choice before T is materialized. `exponent_scale`
// multiplies both tau and sigma (1 gives the unscaled choice).
struct LshSolution {
  double r = 0.0;
  double c = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  double sqrt_tau = 0.0;
  double sqrt_sigma = 0.0;
  double exponent_scale = 1.0;
  int K = 1;
  double eta_u = 0.0;
  double eta_q = 0.0;
  double log_G = 0.0;  // log collision_G(r, eta_u, eta_q)
  double log_T = 0.0;  // log(3 / G^K)
};

LshSolution solve_thresholds(double r, double eps, Index n, double exponent_scale = 1.0);

struct LshParams {
  double r = 0.0;
  double c = 0.0;
  double eta_u = 0.0;
  double eta_q = 0.0;
  int K = 1;
  std::int64_t T = 1;
  std::uint64_t seed = 0;
  double tau = 0.0;
  double sigma = 0.0;
  double exponent_scale = 1.0;
};

inline constexpr std::int64_t kMaxParts = 10'000'000;

LshParams solve_params(double r, double eps, Index n);
// Shrinks tau and sigma by a common factor (keeping sigma = alpha(r)^2 tau)
// until T fits in max_parts.
LshParams solve_params_budgeted(double r, double eps, Index n, std::int64_t max_parts);

enum class Side { A, B };

// Per point, the strictly increasing list of parts containing it.
using BucketAssignment = std::vector<std::vector<std::int32_t>>;

// The K raw Gaussian directions of a part, as a dim x K matrix.
Matrix part_directions(const LshParams& params, std::int64_t part, Index dim);

BucketAssignment assign_buckets(const Matrix& points, const LshParams& params, Side side,
                                int threads = 1);

// Inverted view: for each part, the increasing list of member columns.
std::vector<std::vector<Index>> part_members(const Matrix& points, const LshParams& params,
                                             Side side, int threads = 1);

// Both sides in one pass (they share directions).
struct PartMembership {
  std::vector<std::vector<Index>> a;
  std::vector<std::vector<Index>> b;
};
PartMembership part_members_both(const Matrix& points, const LshParams& params, int threads = 1);

}  // namespace spanner
