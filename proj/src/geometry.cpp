#include "spanner/geometry.hpp"

#include "spanner/parallel.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace spanner {

DistanceTable::DistanceTable(const PointSet& points, int threads)
    : points_(&points), cached_(points.size() <= kMaxCached) {
  if (!cached_) return;
  const Index n = points.size();
  table_.setZero(n, n);
  parallel_for(n, threads, [&](std::int64_t i) {
    for (Index j = 0; j < n; ++j) table_(j, i) = points.distance(i, j);
  });
}

Deduplicated deduplicate(const PointSet& points) {
  const Index n = points.size();
  const auto& x = points.coords();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index k = 0; k < x.rows(); ++k) {
      if (x(k, a) != x(k, b)) return x(k, a) < x(k, b);
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);

  std::vector<Index> first_of(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const bool same = k > 0 && x.col(order[k]) == x.col(order[k - 1]);
    first_of[static_cast<std::size_t>(order[k])] = same ? first_of[static_cast<std::size_t>(order[k - 1])] : order[k];
  }

  std::vector<Index> unique_pos(static_cast<std::size_t>(n), -1);
  std::vector<Index> kept;
  std::vector<std::int64_t> multiplicity;
  std::vector<Index> representative(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index root = first_of[static_cast<std::size_t>(i)];
    if (unique_pos[static_cast<std::size_t>(root)] < 0) {
      unique_pos[static_cast<std::size_t>(root)] = static_cast<Index>(kept.size());
      kept.push_back(root);
      multiplicity.push_back(0);
    }
    const Index u = unique_pos[static_cast<std::size_t>(root)];
    representative[static_cast<std::size_t>(i)] = u;
    ++multiplicity[static_cast<std::size_t>(u)];
  }
  PointSet unique = points.subset(kept);
  return Deduplicated{std::move(unique), std::move(multiplicity), std::move(representative), std::move(kept)};
}

double double_sweep(const PointSet& points, std::span<const Index> subset) {
  if (subset.empty()) return 0.0;
  auto furthest = [&](Index from) {
    Index best = subset.front();
    double best_d = -1.0;
    for (Index p : subset) {
      const double d = points.distance(from, p);
      if (d > best_d) {
        best_d = d;
        best = p;
      }
    }
    return std::pair{best, best_d};
  };
  const auto [a, da] = furthest(subset.front());
  const auto [b, db] = furthest(a);
  (void)b;
  return std::max(da, db);
}

DistanceExtremes distance_extremes(const PointSet& points, std::uint64_t seed) {
  const Index n = points.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  if (n <= DistanceTable::kMaxCached) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double d = points.distance(i, j);
        if (d > 0.0) lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    }
    return {lo, hi, true};
  }
  CounterRng rng(derive_seed(seed, {0xa5ec7}));
  for (int s = 0; s < 1'000'000; ++s) {
    const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const double d = points.distance(i, j);
    if (d > 0.0) lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  hi = std::max(hi, double_sweep(points, all));
  return {lo, hi, false};
}

double aspect_ratio(const PointSet& points) {
  if (points.size() < 2) throw AspectUndefined("aspect ratio needs at least two points");
  const auto ext = distance_extremes(points);
  if (!(ext.max > 0.0)) throw AspectUndefined("all points are identical");
  return ext.max / ext.min_nonzero;
}

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed, std::uint64_t stream) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    CounterRng rng(derive_seed(seed, {stream, static_cast<std::uint64_t>(j)}));
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

void normalize_columns(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm == 0.0) {
      m.col(j).setZero();
      m(0, j) = 1.0;
    } else {
      m.col(j) /= norm;
    }
  }
}

}  // namespace

PointSet random_sphere_dataset(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 2) throw DomainError("random_sphere_dataset needs n >= 1 and d >= 2");
  Matrix m = gaussian_matrix(d, n, seed, 1);
  normalize_columns(m);
  return PointSet(std::move(m));
}

PointSet gaussian_dataset(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw DomainError("gaussian_dataset needs n >= 1 and d >= 1");
  return PointSet(gaussian_matrix(d, n, seed, 2));
}

Index two_spheres_split(Index n) { return (n + 1) / 2; }

PointSet two_spheres_dataset(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 2) throw DomainError("two_spheres_dataset needs n >= 1 and d >= 2");
  Matrix m = gaussian_matrix(d, n, seed, 3);
  normalize_columns(m);
  m.leftCols(two_spheres_split(n)) *= 2.0;
  return PointSet(std::move(m));
}

PointSet clustered_dataset(Index n, Index d, std::uint64_t seed, Index clusters) {
  if (n < 1 || d < 1 || clusters < 1) throw DomainError("clustered_dataset needs n, d, clusters >= 1");
  Matrix centers = gaussian_matrix(d, clusters, seed, 4);
  normalize_columns(centers);
  centers *= 4.0;
  Matrix m = gaussian_matrix(d, n, seed, 5) * (0.5 / std::sqrt(static_cast<double>(d)));
  CounterRng pick(derive_seed(seed, {6}));
  for (Index j = 0; j < n; ++j) {
    m.col(j) += centers.col(static_cast<Index>(pick.below(static_cast<std::uint64_t>(clusters))));
  }
  return PointSet(std::move(m));
}

ScaleLadder scale_ladder(double r_min, double r_max, double eps) {
  if (!(r_min > 0.0) || !(r_max >= r_min)) throw InvalidScale("scale ladder needs 0 < r_min <= r_max");
  if (!(eps > 0.0)) throw DomainError("scale ladder step must be positive");
  ScaleLadder ladder{r_min, r_max, eps, {}};
  const auto steps = static_cast<int>(std::ceil(std::log(r_max / r_min) / std::log1p(eps) - 1e-12));
  for (int i = 0; i <= std::max(steps, 0); ++i) ladder.levels.push_back(r_min * std::pow(1.0 + eps, i));
  if (ladder.levels.back() < r_max) ladder.levels.back() = r_max;
  return ladder;
}

ScaleLadder scale_ladder(const PointSet& points, double eps) {
  if (points.size() < 2) throw AspectUndefined("scale ladder needs at least two points");
  const auto ext = distance_extremes(points);
  if (!(ext.max > 0.0)) throw AspectUndefined("all points are identical");
  return scale_ladder(ext.min_nonzero, ext.max, eps);
}

double default_cap_radius(double eps) {
  const double g = 1.0 + eps / 10.0;
  return std::sqrt(1.0 - 1.0 / (g * g));
}

Index projection_dimension(Index n, double eps) {
  const double e = eps / 30.0;
  const double nn = static_cast<double>(std::max<Index>(n, 2));
  return static_cast<Index>(std::ceil(24.0 * std::log(nn) / (e * e)));
}

std::vector<SphereInstance> to_sphere_instances(const PointSet& points, double r, double eps,
                                                std::uint64_t seed, SphereOptions options) {
  std::vector<Index> all(static_cast<std::size_t>(points.size()));
  std::iota(all.begin(), all.end(), Index{0});
  return to_sphere_instances(points, all, r, eps, seed, options);
}

std::vector<SphereInstance> to_sphere_instances(const PointSet& points,
                                                std::span<const Index> subset, double r,
                                                double eps, std::uint64_t seed,
                                                SphereOptions options) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidScale("scale must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (subset.empty()) return {};
  const double rho = options.cap_radius > 0.0 ? options.cap_radius : default_cap_radius(eps);
  if (!(rho < 1.0)) throw DomainError("cap radius must be below 1");

  const Index k = static_cast<Index>(subset.size());
  Matrix x(points.dim(), k);
  for (Index c = 0; c < k; ++c) x.col(c) = points.point(subset[static_cast<std::size_t>(c)]);

  const Index d_proj = projection_dimension(points.size(), eps);
  if (d_proj < x.rows()) {
    const Matrix g = gaussian_matrix(d_proj, x.rows(), seed, 0x9e01) / std::sqrt(static_cast<double>(d_proj));
    x = g * x;
  }
  const Index dim = x.rows();
  const double w = r * std::ceil(20.0 / eps) * std::sqrt(static_cast<double>(dim));

  CounterRng shift_rng(derive_seed(seed, {0x5b1f7}));
  Vector shift(dim);
  for (Index i = 0; i < dim; ++i) shift(i) = shift_rng.uniform() * w;

  std::map<std::vector<std::int64_t>, std::vector<Index>> cells;
  std::vector<std::int64_t> key(static_cast<std::size_t>(dim));
  for (Index c = 0; c < k; ++c) {
    for (Index i = 0; i < dim; ++i) key[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor((x(i, c) + shift(i)) / w));
    cells[key].push_back(c);
  }

  std::vector<SphereInstance> out;
  out.reserve(cells.size());
  std::int64_t cell_id = 0;
  for (const auto& [cell_key, members] : cells) {
    const Index m = static_cast<Index>(members.size());
    Matrix y(dim, m);
    for (Index c = 0; c < m; ++c) y.col(c) = x.col(members[static_cast<std::size_t>(c)]);
    const Vector center = y.rowwise().mean();
    y.colwise() -= center;
    const double max_norm = y.colwise().norm().maxCoeff();
    const double radius = std::max(max_norm, r) / rho;
    y /= radius;

    SphereInstance inst;
    inst.points.resize(dim + 1, m);
    for (Index c = 0; c < m; ++c) {
      const double sq = std::min(y.col(c).squaredNorm(), 1.0);
      inst.points.col(c).head(dim) = y.col(c);
      inst.points(dim, c) = std::sqrt(1.0 - sq);
      inst.points.col(c).normalize();
    }
    inst.scaled_radius = r / radius;
    inst.scale_factor = radius;
    inst.cell_id = cell_id++;
    for (Index c : members) {
      const Index pos = subset[static_cast<std::size_t>(c)];
      inst.origin.push_back(pos);
      inst.origin_ids.push_back(points.id(pos));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace spanner
