#include "spanner/lsh.hpp"

#include "spanner/parallel.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace spanner {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_phi(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

// 20-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
constexpr std::array<double, 10> kGlNodes = {
    0.0765265211334973338, 0.2277858511416450781, 0.3737060887154195607, 0.5108670019508270980,
    0.6360536807265150254, 0.7463319064601507926, 0.8391169718222188234, 0.9122344282513259059,
    0.9639719272779137913, 0.9931285991850949247};
constexpr std::array<double, 10> kGlWeights = {
    0.1527533871307258507, 0.1491729864726037468, 0.1420961093183820513, 0.1316886384491766269,
    0.1181945319615184174, 0.1019301198172404351, 0.0832767415767047487, 0.0626720483341090636,
    0.0406014298003869413, 0.0176140071391521183};

template <typename F>
double gauss_legendre(F&& f, double lo, double hi, int panels) {
  double total = 0.0;
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    const double half = 0.5 * h;
    double acc = 0.0;
    for (std::size_t k = 0; k < kGlNodes.size(); ++k) {
      acc += kGlWeights[k] * (f(mid - half * kGlNodes[k]) + f(mid + half * kGlNodes[k]));
    }
    total += acc * half;
  }
  return total;
}

// Bisection for the boundary of a concave function's super-level set.
template <typename F>
double find_level(F&& g, double inside, double outside, double level) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (inside + outside);
    if (g(mid) >= level) {
      inside = mid;
    } else {
      outside = mid;
    }
    if (std::abs(outside - inside) <= 1e-14 * (1.0 + std::abs(inside))) break;
  }
  return 0.5 * (inside + outside);
}

}  // namespace

double alpha(double s) {
  if (!(s >= 0.0 && s <= 2.0)) throw DomainError("alpha(s) needs s in [0, 2]");
  return 1.0 - 0.5 * s * s;
}

double beta(double s) {
  if (!(s > 0.0 && s < 2.0)) throw DomainError("beta(s) needs s in (0, 2)");
  // 1 - alpha^2 = s^2 (1 - s^2/4), which avoids cancellation for small s.
  return s * std::sqrt(1.0 - 0.25 * s * s);
}

double tail_F(double eta) { return 0.5 * std::erfc(eta / std::numbers::sqrt2); }

double log_tail_F(double eta) {
  if (eta < -5.0) return std::log1p(-0.5 * std::erfc(-eta / std::numbers::sqrt2));
  if (eta <= 25.0) return std::log(0.5 * std::erfc(eta / std::numbers::sqrt2));
  const double z2 = 1.0 / (eta * eta);
  const double series = 1.0 - z2 * (1.0 - z2 * (3.0 - z2 * (15.0 - z2 * 105.0)));
  return log_phi(eta) - std::log(eta) + std::log(series);
}

double inverse_log_tail(double log_p) {
  if (!(log_p <= 0.0)) throw DomainError("inverse_log_tail needs log_p <= 0");
  if (log_p == 0.0) return -std::numeric_limits<double>::infinity();
  double lo = -1.0;
  double hi = 1.0;
  while (log_tail_F(lo) < log_p) lo *= 2.0;
  while (log_tail_F(hi) > log_p) hi *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (log_tail_F(mid) > log_p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double log_collision_G(double s, double eta, double sigma) {
  if (!(s > 0.0 && s < 2.0)) throw DomainError("collision_G needs s in (0, 2)");
  const double rho = alpha(s);
  const double b = beta(s);
  // G = int_eta^inf phi(x) * Fbar((sigma - rho x) / b) dx; the log-integrand g
  // is concave, so locate its peak and integrate over the region where it is
  // within exp(-60) of the peak.
  auto g = [&](double x) { return log_phi(x) + log_tail_F((sigma - rho * x) / b); };
  auto dg = [&](double x) {
    const double z = (sigma - rho * x) / b;
    const double mills = std::exp(log_phi(z) - log_tail_F(z));
    return -x + (rho / b) * mills;
  };

  double peak = eta;
  if (dg(eta) > 0.0) {
    double step = 1.0;
    double hi = eta + step;
    while (dg(hi) > 0.0) {
      step *= 2.0;
      hi = eta + step;
    }
    double lo = eta;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (dg(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo <= 1e-15 * (1.0 + std::abs(lo))) break;
    }
    peak = 0.5 * (lo + hi);
  }
  const double g_peak = g(peak);
  const double level = g_peak - 60.0;

  double left = eta;
  if (peak > eta && g(eta) < level) {
    left = find_level(g, peak, eta, level);
  }
  double step = 1.0;
  double outside = peak + step;
  while (g(outside) >= level) {
    step *= 2.0;
    outside = peak + step;
  }
  const double right = find_level(g, peak, outside, level);

  auto f = [&](double x) { return std::exp(g(x) - g_peak); };
  double integral = 0.0;
  if (peak > left) integral += gauss_legendre(f, left, peak, 48);
  integral += gauss_legendre(f, peak, right, 48);
  return g_peak + std::log(integral);
}

double collision_G(double s, double eta, double sigma) {
  return std::exp(log_collision_G(s, eta, sigma));
}

LshSolution solve_thresholds(double r, double eps, Index n, double exponent_scale) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (n < 2) throw DomainError("solve_params needs n >= 2");
  const double c = 1.0 + eps;
  if (!(r > 0.0 && c * r < 2.0)) throw DomainError("solve_params needs 0 < r < c r < 2");
  const double a_r = alpha(r);
  const double a_cr = alpha(c * r);
  if (!(a_r > 0.0)) throw DomainError("solve_params needs alpha(r) > 0, i.e. r < sqrt(2)");
  const double denom = a_r - a_cr;
  if (denom < 1e-12) throw IllConditioned("alpha(r) - alpha(cr) is below 1e-12");

  LshSolution sol;
  sol.r = r;
  sol.c = c;
  sol.exponent_scale = exponent_scale;
  sol.sqrt_tau = beta(c * r) / denom;
  sol.sqrt_sigma = a_r * sol.sqrt_tau;
  sol.tau = sol.sqrt_tau * sol.sqrt_tau;
  sol.sigma = a_r * a_r * sol.tau;

  const double log_n = std::log(static_cast<double>(n));
  sol.K = std::max(1, static_cast<int>(std::ceil(std::sqrt(log_n))));
  sol.eta_u = inverse_log_tail(-exponent_scale * sol.sigma * log_n / sol.K);
  sol.eta_q = inverse_log_tail(-exponent_scale * sol.tau * log_n / sol.K);
  sol.log_G = log_collision_G(r, sol.eta_u, sol.eta_q);
  sol.log_T = std::log(3.0) - sol.K * sol.log_G;
  return sol;
}

namespace {

LshParams to_params(const LshSolution& sol) {
  LshParams p;
  p.r = sol.r;
  p.c = sol.c;
  p.eta_u = sol.eta_u;
  p.eta_q = sol.eta_q;
  p.K = sol.K;
  p.T = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::exp(sol.log_T) - 1e-9)));
  p.tau = sol.tau;
  p.sigma = sol.sigma;
  p.exponent_scale = sol.exponent_scale;
  return p;
}

}  // namespace

LshParams solve_params(double r, double eps, Index n) {
  const LshSolution sol = solve_thresholds(r, eps, n);
  if (sol.log_T > std::log(static_cast<double>(kMaxParts))) {
    throw TooManyParts("required part count exceeds 1e7 (log T = " + std::to_string(sol.log_T) + ")");
  }
  return to_params(sol);
}

LshParams solve_params_budgeted(double r, double eps, Index n, std::int64_t max_parts) {
  if (max_parts < 3) throw ConfigError("part budget must be at least 3");
  const double log_budget = std::log(static_cast<double>(std::min(max_parts, kMaxParts)));
  LshSolution full = solve_thresholds(r, eps, n, 1.0);
  if (full.log_T <= log_budget) return to_params(full);
  double lo = 0.0;
  double hi = 1.0;
  LshSolution best = solve_thresholds(r, eps, n, 1e-12);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    LshSolution sol = solve_thresholds(r, eps, n, mid);
    if (sol.log_T <= log_budget) {
      lo = mid;
      best = sol;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-6 * hi) break;
  }
  return to_params(best);
}

Matrix part_directions(const LshParams& params, std::int64_t part, Index dim) {
  Matrix g(dim, params.K);
  for (int k = 0; k < params.K; ++k) {
    CounterRng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(part), static_cast<std::uint64_t>(k)}));
    for (Index i = 0; i < dim; ++i) g(i, k) = rng.normal();
  }
  return g;
}

namespace {

void check_on_sphere(const Matrix& points) {
  for (Index j = 0; j < points.cols(); ++j) {
    if (std::abs(points.col(j).norm() - 1.0) > 1e-9) throw NotOnSphere("point is not unit norm");
  }
}

constexpr std::int64_t kPartBlock = 64;

// Calls visit(part, side_a, side_b, column) for every containment, per block
// of parts; blocks are independent.
template <typename Visit>
void scan_block(const Matrix& points, const LshParams& params, std::int64_t block, Visit&& visit) {
  const std::int64_t begin = block * kPartBlock;
  const std::int64_t end = std::min<std::int64_t>(begin + kPartBlock, params.T);
  const Index dim = points.rows();
  const int K = params.K;
  Matrix dirs(dim, (end - begin) * K);
  for (std::int64_t part = begin; part < end; ++part) {
    dirs.middleCols((part - begin) * K, K) = part_directions(params, part, dim);
  }
  const Matrix proj = dirs.transpose() * points;
  for (std::int64_t part = begin; part < end; ++part) {
    const Index row = (part - begin) * K;
    for (Index j = 0; j < points.cols(); ++j) {
      double lowest = proj(row, j);
      for (int k = 1; k < K; ++k) lowest = std::min(lowest, proj(row + k, j));
      visit(part, lowest >= params.eta_u, lowest >= params.eta_q, j);
    }
  }
}

std::int64_t block_count(const LshParams& params) {
  return (params.T + kPartBlock - 1) / kPartBlock;
}

}  // namespace

PartMembership part_members_both(const Matrix& points, const LshParams& params, int threads) {
  check_on_sphere(points);
  PartMembership out;
  out.a.resize(static_cast<std::size_t>(params.T));
  out.b.resize(static_cast<std::size_t>(params.T));
  parallel_for(block_count(params), threads, [&](std::int64_t block) {
    scan_block(points, params, block, [&](std::int64_t part, bool in_a, bool in_b, Index j) {
      if (in_a) out.a[static_cast<std::size_t>(part)].push_back(j);
      if (in_b) out.b[static_cast<std::size_t>(part)].push_back(j);
    });
  });
  return out;
}

std::vector<std::vector<Index>> part_members(const Matrix& points, const LshParams& params,
                                             Side side, int threads) {
  PartMembership both = part_members_both(points, params, threads);
  return side == Side::A ? std::move(both.a) : std::move(both.b);
}

BucketAssignment assign_buckets(const Matrix& points, const LshParams& params, Side side,
                                int threads) {
  const auto members = part_members(points, params, side, threads);
  BucketAssignment out(static_cast<std::size_t>(points.cols()));
  for (std::int64_t part = 0; part < params.T; ++part) {
    for (Index j : members[static_cast<std::size_t>(part)]) {
      out[static_cast<std::size_t>(j)].push_back(static_cast<std::int32_t>(part));
    }
  }
  return out;
}

}  // namespace spanner
