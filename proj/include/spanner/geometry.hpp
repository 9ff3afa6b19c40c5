#pragma once

#include "spanner/common.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

namespace spanner {

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar distance(const Eigen::MatrixBase<DerivedA>& a,
                                   const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

template <typename Scalar>
class BasicPointSet {
 public:
  using Coordinates = PointMatrix<Scalar>;

  explicit BasicPointSet(Coordinates coords) : coords_(std::move(coords)) {
    ids_.resize(static_cast<std::size_t>(coords_.cols()));
    for (Index i = 0; i < coords_.cols(); ++i) ids_[static_cast<std::size_t>(i)] = i;
    validate();
  }

  BasicPointSet(Coordinates coords, std::vector<std::int64_t> ids)
      : coords_(std::move(coords)), ids_(std::move(ids)) {
    validate();
  }

  Index size() const { return coords_.cols(); }
  Index dim() const { return coords_.rows(); }
  const Coordinates& coords() const { return coords_; }
  auto point(Index i) const { return coords_.col(i); }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  std::int64_t id(Index i) const { return ids_[static_cast<std::size_t>(i)]; }

  Scalar distance(Index i, Index j) const { return (coords_.col(i) - coords_.col(j)).norm(); }

  BasicPointSet subset(std::span<const Index> positions) const {
    Coordinates sub(dim(), static_cast<Index>(positions.size()));
    std::vector<std::int64_t> sub_ids;
    sub_ids.reserve(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) {
      sub.col(static_cast<Index>(k)) = coords_.col(positions[k]);
      sub_ids.push_back(id(positions[k]));
    }
    return BasicPointSet(std::move(sub), std::move(sub_ids));
  }

  bool operator==(const BasicPointSet& other) const {
    return ids_ == other.ids_ && coords_.rows() == other.coords_.rows() &&
           coords_.cols() == other.coords_.cols() && coords_ == other.coords_;
  }

 private:
  void validate() const {
    if (coords_.cols() < 1) throw EmptyInput("point set must contain at least one point");
    if (coords_.rows() < 1) throw DimensionError("point dimension must be positive");
    if (static_cast<Index>(ids_.size()) != coords_.cols())
      throw DimensionError("id count does not match point count");
    if (!coords_.allFinite()) throw DomainError("point coordinates must be finite");
    std::unordered_set<std::int64_t> seen(ids_.begin(), ids_.end());
    if (seen.size() != ids_.size()) throw DomainError("point ids must be unique");
  }

  Coordinates coords_;
  std::vector<std::int64_t> ids_;
};

using PointSet = BasicPointSet<double>;

// Dense cache of pairwise distances for moderate n; falls back to computing
// on demand when the table would be too large.
class DistanceTable {
 public:
  static constexpr Index kMaxCached = 4096;

  explicit DistanceTable(const PointSet& points, int threads = 1);

  Index size() const { return points_->size(); }
  bool cached() const { return cached_; }
  const PointSet& points() const { return *points_; }

  double operator()(Index i, Index j) const {
    return cached_ ? table_(i, j) : points_->distance(i, j);
  }

 private:
  const PointSet* points_;
  bool cached_;
  Matrix table_;
};

struct Deduplicated {
  PointSet points;
  std::vector<std::int64_t> multiplicity;  // per unique point
  std::vector<Index> representative;       // input position -> unique position
  std::vector<Index> first_position;       // unique position -> input position
};

// Exact-coordinate deduplication; the first occurrence keeps its id.
Deduplicated deduplicate(const PointSet& points);

struct DistanceExtremes {
  double min_nonzero;
  double max;
  bool exact;
};

DistanceExtremes distance_extremes(const PointSet& points, std::uint64_t seed = 0);

double aspect_ratio(const PointSet& points);

// Double-sweep diameter estimate over a subset: returns L with
// true diameter in [L, 2L].
double double_sweep(const PointSet& points, std::span<const Index> subset);

PointSet random_sphere_dataset(Index n, Index d, std::uint64_t seed);
PointSet gaussian_dataset(Index n, Index d, std::uint64_t seed);
// First ceil(n/2) points on the radius-2 sphere, the rest on the radius-1 sphere.
PointSet two_spheres_dataset(Index n, Index d, std::uint64_t seed);
Index two_spheres_split(Index n);
PointSet clustered_dataset(Index n, Index d, std::uint64_t seed, Index clusters = 8);

struct ScaleLadder {
  double r_min = 0.0;
  double r_max = 0.0;
  double eps = 0.0;  // levels grow by (1 + eps)
  std::vector<double> levels;
};

ScaleLadder scale_ladder(double r_min, double r_max, double eps);
ScaleLadder scale_ladder(const PointSet& points, double eps);

struct SphereInstance {
  Matrix points;                // D x k, unit columns
  double scaled_radius = 0.0;   // image of r
  double scale_factor = 1.0;    // original distance ~ scaled distance * scale_factor
  std::vector<Index> origin;    // column -> position in the source PointSet
  std::vector<std::int64_t> origin_ids;
  std::int64_t cell_id = 0;
};

struct SphereOptions {
  // Radius of the lifted cap relative to the unit sphere. Zero selects
  // sqrt(1 - (1 + eps/10)^-2), which bounds the lift distortion by 1 + eps/10.
  double cap_radius = 0.0;
};

double default_cap_radius(double eps);
Index projection_dimension(Index n, double eps);

std::vector<SphereInstance> to_sphere_instances(const PointSet& points, double r, double eps,
                                                std::uint64_t seed, SphereOptions options = {});
std::vector<SphereInstance> to_sphere_instances(const PointSet& points,
                                                std::span<const Index> subset, double r,
                                                double eps, std::uint64_t seed,
                                                SphereOptions options = {});

}  // namespace spanner
