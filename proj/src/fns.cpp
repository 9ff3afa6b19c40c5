#include "spanner/fns.hpp"

#include "spanner/geometry.hpp"

#include <numeric>

namespace spanner {

FnsIndex::FnsIndex(Matrix points, double c2, FnsBackend backend)
    : points_(std::move(points)), c2_(c2), backend_(backend) {}

FnsIndex FnsIndex::build(Matrix points, double c2, FnsBackend backend) {
  if (points.cols() == 0) throw EmptyIndex("FNS index needs at least one point");
  if (!(c2 >= 1.0)) throw ConfigError("FNS approximation c2 must be >= 1");
  FnsIndex index(std::move(points), c2, backend);
  const Index n = index.points_.cols();
  if (backend == FnsBackend::Exact || c2 == 1.0 || n == 1) {
    index.probes_.resize(static_cast<std::size_t>(n));
    std::iota(index.probes_.begin(), index.probes_.end(), Index{0});
    return index;
  }
  // Any query's true furthest point M lies within `slack` of a net point, so
  // the best net point is at least M - slack; the double-sweep length L bounds
  // M from below, and slack = (c2 - 1) L / (2 c2) keeps the ratio within c2.
  const auto& x = index.points_;
  auto furthest_from = [&](Index from) {
    Index best = 0;
    double best_d = -1.0;
    for (Index j = 0; j < n; ++j) {
      const double d = (x.col(j) - x.col(from)).norm();
      if (d > best_d) {
        best_d = d;
        best = j;
      }
    }
    return std::pair{best, best_d};
  };
  const auto [a, la] = furthest_from(0);
  const double sweep = furthest_from(a).second;
  const double L = std::max(la, sweep);
  index.slack_ = (c2 - 1.0) * L / (2.0 * c2);
  for (Index j = 0; j < n; ++j) {
    bool covered = false;
    for (Index p : index.probes_) {
      if ((x.col(j) - x.col(p)).norm() <= index.slack_) {
        covered = true;
        break;
      }
    }
    if (!covered) index.probes_.push_back(j);
  }
  return index;
}

FnsIndex::Result FnsIndex::query_furthest(const Eigen::Ref<const Vector>& q) const {
  if (q.size() != points_.rows()) throw DimensionError("query dimension does not match the index");
  Result best{probes_.front(), -1.0};
  for (Index p : probes_) {
    const double d = (points_.col(p) - q).norm();
    if (d > best.distance) best = {p, d};
  }
  return best;
}

bool FnsIndex::passes_radius_check(const Eigen::Ref<const Vector>& q, double limit) const {
  return query_furthest(q).distance <= limit;
}

TableFns::TableFns(const DistanceTable& table, std::span<const Index> members)
    : table_(&table), members_(members) {
  if (members_.empty()) throw EmptyIndex("FNS index needs at least one point");
}

FnsIndex::Result TableFns::query_furthest(Index q) const {
  FnsIndex::Result best{0, -1.0};
  for (std::size_t k = 0; k < members_.size(); ++k) {
    const double d = (*table_)(q, members_[k]);
    if (d > best.distance) best = {static_cast<Index>(k), d};
  }
  return best;
}

bool TableFns::passes_radius_check(Index q, double limit) const {
  for (Index p : members_) {
    if ((*table_)(q, p) > limit) return false;
  }
  return true;
}

}  // namespace spanner
