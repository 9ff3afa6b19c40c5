#pragma once

#include "spanner/common.hpp"

#include <span>
#include <vector>

namespace spanner {

class DistanceTable;

enum class FnsBackend { Exact, Approximate };

// Furthest-neighbor index over a fixed point list. The approximate backend
// keeps only a delta-net of the points; its answers satisfy
// max_dist / c2 <= d <= max_dist.
class FnsIndex {
 public:
  struct Result {
    Index index;  // position in the list given to build()
    double distance;
  };

  static FnsIndex build(Matrix points, double c2 = 1.0, FnsBackend backend = FnsBackend::Exact);

  Index size() const { return points_.cols(); }
  double c2() const { return c2_; }
  FnsBackend backend() const { return backend_; }
  // Number of representatives actually scanned per query.
  Index probe_count() const { return static_cast<Index>(probes_.size()); }

  Result query_furthest(const Eigen::Ref<const Vector>& q) const;
  bool passes_radius_check(const Eigen::Ref<const Vector>& q, double limit) const;

 private:
  FnsIndex(Matrix points, double c2, FnsBackend backend);

  Matrix points_;
  double c2_;
  FnsBackend backend_;
  double slack_ = 0.0;  // net radius of the approximate backend
  std::vector<Index> probes_;
};

// Exact furthest-neighbor over a subset of a precomputed distance table,
// queried by table position. Used inside the builders where all distances
// are already cached.
class TableFns {
 public:
  TableFns(const DistanceTable& table, std::span<const Index> members);

  FnsIndex::Result query_furthest(Index q) const;
  bool passes_radius_check(Index q, double limit) const;

 private:
  const DistanceTable* table_;
  std::span<const Index> members_;
};

}  // namespace spanner
