#include "spanner/decomposition.hpp"

#include "spanner/lsh.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <unordered_map>

namespace spanner {

double avg_squared_exact(const DistanceTable& table, std::span<const Index> set) {
  if (set.empty()) throw EmptyInput("average distance of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      const double d = table(set[i], set[j]);
      sum += d * d;
    }
  const double n = static_cast<double>(set.size());
  return 2.0 * sum / (n * n);
}

double avg_exact(const DistanceTable& table, std::span<const Index> set) {
  return std::sqrt(avg_squared_exact(table, set));
}

double exact_diameter(const DistanceTable& table, std::span<const Index> set) {
  double best = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j) best = std::max(best, table(set[i], set[j]));
  return best;
}

Index avg_sample_count(Index n, double eps) {
  // Hoeffding on squared distances (range dia^2) at additive eps^2 dia^2 / 2,
  // failure probability n^-3.
  const double nn = static_cast<double>(std::max<Index>(n, 2));
  const double e2 = eps * eps;
  return static_cast<Index>(std::ceil(2.0 * std::log(2.0 * nn * nn * nn) / (e2 * e2)));
}

double avg_estimate(const DistanceTable& table, std::span<const Index> set, double eps,
                    std::uint64_t seed) {
  if (set.empty()) throw EmptyInput("average distance of an empty set");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  const Index n = static_cast<Index>(set.size());
  const Index samples = avg_sample_count(n, eps);
  if (n * n <= samples) return avg_exact(table, set);

  const double dia_ub = 2.0 * double_sweep(table.points(), set);
  CounterRng rng(derive_seed(seed, {0x617667}));
  double sum = 0.0;
  for (Index s = 0; s < samples; ++s) {
    const double d = table(set[rng.below(static_cast<std::uint64_t>(n))],
                           set[rng.below(static_cast<std::uint64_t>(n))]);
    sum += d * d;
  }
  const double slack = eps * dia_ub;
  return std::sqrt(sum / static_cast<double>(samples) + 0.5 * slack * slack);
}

bool negative_type_check(const DistanceTable& table, std::span<const Index> a,
                         std::span<const Index> b, double r) {
  return avg_exact(table, a) + avg_exact(table, b) <= 2.0 * r + 1e-9;
}

void validate(const ExtractionConfig& cfg) {
  if (!(cfg.c > 0.0 && cfg.c <= 0.2)) throw ConfigError("c must lie in (0, 0.2]");
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(cfg.a >= 0.0) || !std::isfinite(cfg.a)) throw ConfigError("a must be finite and >= 0");
  if (!(cfg.eps * cfg.c > cfg.t)) throw ConfigError("extraction needs eps * c > t");
  if (!(cfg.time_budget > 0.0)) throw ConfigError("time budget must be positive");
}

double decomposition_t(Index n, double eps) {
  if (n < 2) return 0.0;
  return std::log(1.0 / eps) / std::log(static_cast<double>(n));
}

double effective_t(double eps, double c, double t) {
  return eps * c > t ? t : 0.5 * eps * c;
}

namespace {

// Symmetric cap threshold: "first cap containing the point" collides a pair
// at lifted distance s with probability G / (2F - G).
double log_cap_collision(double s, double eta) {
  const double lg = log_collision_G(s, eta, eta);
  const double lf = log_tail_F(eta);
  const double ratio = std::min(std::exp(lg - lf), 1.0);
  return lg - (lf + std::log(2.0 - ratio));
}

// Largest eta whose close-pair collision probability is still >= p1. Inputs
// are quantized so the cache stays small across many extraction calls.
double cap_threshold(double& s, double p1, double eta_max) {
  const long ks = std::lround(std::log(s) * 64.0);
  const long kp = std::lround(std::log(p1) * 1024.0);
  s = std::exp(static_cast<double>(ks) / 64.0);
  const double log_p1 = static_cast<double>(kp) / 1024.0;

  static std::mutex mu;
  static std::unordered_map<long, double> cache;
  const long ke = std::lround(eta_max * 64.0);
  eta_max = static_cast<double>(ke) / 64.0;
  const long key = (ks * 1'000'003L + kp) * 4099L + ke;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  double lo = -8.0, hi = eta_max;
  if (log_cap_collision(s, hi) >= log_p1) {
    lo = hi;
  } else if (log_cap_collision(s, lo) >= log_p1) {
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      (log_cap_collision(s, mid) >= log_p1 ? lo : hi) = mid;
    }
  }
  std::lock_guard lock(mu);
  cache.emplace(key, lo);
  return lo;
}

struct Lifted {
  Matrix z;  // (d+1) x |set|
  double scale = 1.0;
};

Lifted lift(const PointSet& points, std::span<const Index> set, double a, double rho) {
  const Index k = static_cast<Index>(set.size());
  Matrix x(points.dim(), k);
  for (Index c = 0; c < k; ++c) x.col(c) = points.point(set[static_cast<std::size_t>(c)]);
  const Vector center = x.rowwise().mean();
  x.colwise() -= center;
  const double m = k > 0 ? x.colwise().norm().maxCoeff() : 0.0;
  Lifted out;
  out.scale = std::max({m, a, std::numeric_limits<double>::min()}) / rho;
  out.z.resize(points.dim() + 1, k);
  out.z.topRows(points.dim()) = x / out.scale;
  for (Index c = 0; c < k; ++c) {
    const double sq = out.z.col(c).head(points.dim()).squaredNorm();
    out.z(points.dim(), c) = std::sqrt(std::max(0.0, 1.0 - sq));
  }
  return out;
}

struct PairCounts {
  double close = 0.0;  // ordered pairs, p = q included
  double far = 0.0;
};

PairCounts count_pairs(const DistanceTable& table, const std::vector<Index>& bucket, double a,
                       double far_at, Index samples, CounterRng& rng) {
  const Index b = static_cast<Index>(bucket.size());
  PairCounts out;
  if (b * b <= samples) {
    out.close = static_cast<double>(b);
    for (Index i = 0; i < b; ++i)
      for (Index j = i + 1; j < b; ++j) {
        const double d = table(bucket[i], bucket[j]);
        if (d <= a) out.close += 2.0;
        if (d > far_at) out.far += 2.0;
      }
    return out;
  }
  Index close = 0, far = 0;
  for (Index s = 0; s < samples; ++s) {
    const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(b)));
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(b)));
    const double d = i == j ? 0.0 : table(bucket[i], bucket[j]);
    if (d <= a) ++close;
    if (d > far_at) ++far;
  }
  const double scale = static_cast<double>(b) * static_cast<double>(b) / static_cast<double>(samples);
  out.close = close * scale;
  out.far = far * scale;
  return out;
}

}  // namespace

std::vector<Cluster> extract_clusters(const DistanceTable& table, std::span<const Index> set,
                                      const ExtractionConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::vector<Cluster> clusters;
  const Index n = static_cast<Index>(set.size());
  if (n == 0) return clusters;

  const double nn = static_cast<double>(std::max<Index>(n, 2));
  const double p1 = std::pow(nn, -cfg.c);
  const double p2 = std::pow(nn, -(1.0 + cfg.eps) * cfg.c);
  const double far_at = (1.0 + cfg.eps) * cfg.a;
  const std::uint64_t groups = static_cast<std::uint64_t>(std::ceil(1.0 / p2));
  const double nt = std::pow(nn, cfg.t);
  const double log_n = std::log(nn);
  const Index samples = static_cast<Index>(
      std::max(std::ceil(8.0 * nt * log_n / (p1 * p2)), std::ceil(8.0 * log_n / (p2 * p2))));
  const double need_close = 0.25 * p1 * p2 * std::pow(nn, 2.0 - cfg.t);
  const double far_ratio = 16.0 * (p2 / p1) * nt;
  const std::int64_t draws = static_cast<std::int64_t>(std::ceil(cfg.time_budget * nt / p1));

  const double rho = default_cap_radius(cfg.eps);
  const Lifted lifted = lift(table.points(), set, cfg.a, rho);
  double s = std::clamp(cfg.a / lifted.scale, 1e-6, 1.9);
  // Caps are limited to kMaxCaps, which bounds how fine the partition gets.
  constexpr double kMaxCaps = 1024.0;
  const double eta = cap_threshold(s, p1, inverse_log_tail(std::log(3.0 * log_n / kMaxCaps)));
  const double cover = tail_F(eta);
  const Index caps = static_cast<Index>(
      std::ceil(3.0 * log_n / std::max(-std::log1p(-std::min(cover, 1.0 - 1e-12)), 1e-12)));

  for (std::int64_t h = 0; h < draws; ++h) {
    const std::uint64_t key = derive_seed(seed, {static_cast<std::uint64_t>(h)});
    CounterRng rng(key);
    Matrix g(lifted.z.rows(), caps);
    for (Index c = 0; c < caps; ++c)
      for (Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
    const Matrix dots = g.transpose() * lifted.z;

    std::vector<std::vector<Index>> buckets(groups);
    for (Index p = 0; p < n; ++p) {
      Index first = -1;
      for (Index c = 0; c < caps; ++c)
        if (dots(c, p) >= eta) {
          first = c;
          break;
        }
      if (first < 0) continue;
      const std::uint64_t bucket =
          splitmix64(key ^ static_cast<std::uint64_t>(first)) % groups;
      buckets[bucket].push_back(set[static_cast<std::size_t>(p)]);
    }

    for (auto& bucket : buckets) {
      if (bucket.empty()) continue;
      const PairCounts counts = count_pairs(table, bucket, cfg.a, far_at, samples, rng);
      if (!(counts.close >= need_close && counts.far <= far_ratio * counts.close)) continue;

      // Clusters grow greedily around random pivots: a point joins when it
      // is far_at-close to every member. Random k-subsets would shrink to
      // singletons whenever the bucket mixes distant caps.
      const std::int64_t attempts = 2 * static_cast<std::int64_t>(bucket.size()) + 16;
      std::int64_t formed = 0;
      shuffle(bucket, rng);
      for (std::int64_t t = 0; t < attempts && !bucket.empty(); ++t) {
        std::swap(bucket.front(), bucket[rng.below(bucket.size())]);
        std::vector<Index> pick{bucket.front()};
        std::vector<Index> rest;
        for (std::size_t i = 1; i < bucket.size(); ++i) {
          const Index q = bucket[i];
          const bool fits = std::all_of(pick.begin(), pick.end(),
                                        [&](Index m) { return table(q, m) <= far_at; });
          (fits ? pick : rest).push_back(q);
        }
        if (pick.size() < 2 && bucket.size() > 1) {
          // Isolated pivot: leave it for later rounds.
          rest.push_back(pick.front());
          bucket = std::move(rest);
          continue;
        }
        std::sort(pick.begin(), pick.end());
        clusters.push_back(std::move(pick));
        bucket = std::move(rest);
        ++formed;
      }
      if (formed > 0) return clusters;
    }
  }
  throw ExtractionStalled("no bucket passed the extraction test within the draw budget");
}

namespace {

void remove_members(std::vector<Index>& remaining, const std::vector<Cluster>& clusters) {
  std::vector<Index> gone;
  for (const auto& c : clusters) gone.insert(gone.end(), c.begin(), c.end());
  std::sort(gone.begin(), gone.end());
  std::erase_if(remaining,
                [&](Index p) { return std::binary_search(gone.begin(), gone.end(), p); });
}

}  // namespace

Decomposition low_diameter_decomposition(const DistanceTable& table, std::span<const Index> set,
                                         double eps, std::uint64_t seed) {
  if (set.empty()) throw EmptyInput("cannot decompose an empty set");
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("eps must lie in (0, 1/2)");
  Decomposition out;
  out.source = "low_diameter";
  std::vector<Index> remaining(set.begin(), set.end());
  constexpr double c = 0.05;
  for (std::uint64_t iter = 0; !remaining.empty(); ++iter) {
    if (remaining.size() == 1) {
      out.clusters.push_back(remaining);
      out.cluster_diameter.push_back(0.0);
      break;
    }
    const Index n = static_cast<Index>(remaining.size());
    const double avg = avg_estimate(table, remaining, eps, derive_seed(seed, {iter, 0}));
    ExtractionConfig cfg;
    cfg.a = (1.0 + eps) * avg;
    cfg.eps = eps;
    cfg.c = c;
    cfg.t = effective_t(eps, c, decomposition_t(n, eps));
    std::vector<Cluster> found;
    try {
      found = extract_clusters(table, remaining, cfg, derive_seed(seed, {iter, 1}));
    } catch (const ExtractionStalled&) {
      for (Index p : remaining) {
        out.clusters.push_back({p});
        out.cluster_diameter.push_back(0.0);
      }
      break;
    }
    for (auto& cl : found) {
      out.cluster_diameter.push_back(cl.size() > 1 ? (1.0 + eps) * cfg.a : 0.0);
      out.clusters.push_back(std::move(cl));
    }
    remove_members(remaining, out.clusters);
  }
  for (double d : out.cluster_diameter) out.certified_diameter = std::max(out.certified_diameter, d);
  return out;
}

QuerySideDecomposer::QuerySideDecomposer(const DistanceTable& table, std::vector<Index> q_set,
                                         double r, double eps, std::uint64_t seed)
    : table_(&table), q_(std::move(q_set)), r_(r), eps_(eps), seed_(seed) {
  if (q_.empty()) throw EmptyInput("query side is empty");
  if (!(r > 0.0)) throw DomainError("radius must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  grid_ = static_cast<int>(std::floor(2.0 / eps + 1e-9)) + 1;
}

const QuerySideDecomposer::Layer& QuerySideDecomposer::layer(int g) {
  if (g < 0 || g >= grid_) throw DomainError("grid index out of range");
  if (auto it = layers_.find(g); it != layers_.end()) return it->second;

  Layer out;
  const double r0 = grid_value(g);
  if (g == 0) {
    // Threshold zero: clusters of coincident points.
    std::vector<bool> used(q_.size(), false);
    for (std::size_t i = 0; i < q_.size(); ++i) {
      if (used[i]) continue;
      Cluster cl{q_[i]};
      for (std::size_t j = i + 1; j < q_.size(); ++j)
        if (!used[j] && (*table_)(q_[i], q_[j]) == 0.0) {
          used[j] = true;
          cl.push_back(q_[j]);
        }
      if (cl.size() > 1) out.clusters.push_back(std::move(cl));
      else out.remainder.push_back(cl.front());
    }
  } else {
    std::vector<Index> remaining = q_;
    ExtractionConfig cfg;
    cfg.a = r0;
    cfg.eps = eps_;
    cfg.c = 0.1;
    cfg.t = effective_t(eps_, cfg.c, 0.1 * eps_);
    for (std::uint64_t iter = 0; !remaining.empty(); ++iter) {
      std::vector<Cluster> found;
      try {
        found = extract_clusters(*table_, remaining, cfg,
                                 derive_seed(seed_, {static_cast<std::uint64_t>(g), iter}));
      } catch (const ExtractionStalled&) {
        break;
      }
      remove_members(remaining, found);
      for (auto& cl : found) out.clusters.push_back(std::move(cl));
    }
    out.remainder = std::move(remaining);
  }
  out.diameter = g == 0 ? 0.0 : (1.0 + eps_) * r0;
  out.cluster_of.assign(static_cast<std::size_t>(table_->size()), -1);
  for (std::size_t c = 0; c < out.clusters.size(); ++c)
    for (Index p : out.clusters[c]) out.cluster_of[static_cast<std::size_t>(p)] = static_cast<std::int32_t>(c);
  return layers_.emplace(g, std::move(out)).first->second;
}

Decomposition QuerySideDecomposer::restrict_to(std::span<const Index> v, int g) {
  const Layer& l = layer(g);
  Decomposition out;
  out.source = "query_side";
  std::unordered_map<std::int32_t, std::size_t> slot;
  for (Index p : v) {
    const std::int32_t c = l.cluster_of[static_cast<std::size_t>(p)];
    if (c < 0) {
      out.clusters.push_back({p});
      out.cluster_diameter.push_back(0.0);
      continue;
    }
    auto [it, fresh] = slot.emplace(c, out.clusters.size());
    if (fresh) {
      out.clusters.emplace_back();
      out.cluster_diameter.push_back(0.0);
    }
    out.clusters[it->second].push_back(p);
  }
  for (std::size_t i = 0; i < out.clusters.size(); ++i)
    if (out.clusters[i].size() > 1) out.cluster_diameter[i] = l.diameter;
  for (double d : out.cluster_diameter) out.certified_diameter = std::max(out.certified_diameter, d);
  return out;
}

int QuerySideDecomposer::select(std::span<const Index> v) {
  for (int g = 0; g < grid_; ++g) {
    const Layer& l = layer(g);
    std::vector<Index> rest;
    for (Index p : v)
      if (l.cluster_of[static_cast<std::size_t>(p)] < 0) rest.push_back(p);
    const double avg = rest.empty() ? 0.0 : avg_exact(*table_, rest);
    if (grid_value(g) + 1e-12 >= (1.0 + eps_) * avg) return g;
  }
  return grid_ - 1;
}

std::vector<Decomposition> decompose_query_side(const DistanceTable& table,
                                                std::span<const Index> q_set,
                                                const std::vector<std::vector<Index>>& v_sets,
                                                double r, double eps, std::uint64_t seed) {
  QuerySideDecomposer dec(table, std::vector<Index>(q_set.begin(), q_set.end()), r, eps, seed);
  std::vector<Index> sorted_q(q_set.begin(), q_set.end());
  std::sort(sorted_q.begin(), sorted_q.end());
  std::vector<Decomposition> out;
  out.reserve(v_sets.size());
  for (const auto& v : v_sets) {
    for (Index p : v)
      if (!std::binary_search(sorted_q.begin(), sorted_q.end(), p))
        throw DomainError("V set must be a subset of Q_j");
    if (v.empty()) {
      out.push_back({{}, {}, 0.0, "query_side"});
      continue;
    }
    out.push_back(dec.restrict_to(v, dec.select(v)));
  }
  return out;
}

}  // namespace spanner
