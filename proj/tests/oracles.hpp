#pragma once

// Brute-force reference implementations the tests compare against.

#include "spanner/geometry.hpp"
#include "spanner/graph.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using spanner::Index;

// All-pairs distances by Bellman-Ford relaxation over the raw edge list.
inline std::vector<std::vector<double>> bellman_ford_all(const spanner::SpannerGraph& g) {
  const Index n = g.node_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (Index s = 0; s < n; ++s) {
    auto& row = d[s];
    row[s] = 0.0;
    for (Index it = 0; it < n; ++it) {
      bool changed = false;
      for (const auto& e : g.edges()) {
        if (row[e.from] + e.weight < row[e.to]) {
          row[e.to] = row[e.from] + e.weight;
          changed = true;
        }
        if (!g.directed() && row[e.to] + e.weight < row[e.from]) {
          row[e.from] = row[e.to] + e.weight;
          changed = true;
        }
      }
      if (!changed) break;
    }
  }
  return d;
}

// Minimum mean matching cost over all permutations (n <= 9).
inline double brute_force_emd(const spanner::PointSet& a, const spanner::PointSet& b) {
  const Index n = a.size();
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Index i = 0; i < n; ++i) c += (a.point(i) - b.point(perm[i])).norm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

inline double brute_diameter(const spanner::PointSet& p, const std::vector<Index>& ids) {
  double best = 0.0;
  for (Index a : ids)
    for (Index b : ids) best = std::max(best, p.distance(a, b));
  return best;
}

}  // namespace oracle
