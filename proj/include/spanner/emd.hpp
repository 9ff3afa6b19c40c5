#pragma once

#include "spanner/geometry.hpp"
#include "spanner/graph.hpp"
#include "spanner/spanner_directed.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spanner {

struct Assignment {
  double cost = 0.0;          // mean matched distance
  std::vector<Index> match;   // A position -> B position
};

inline constexpr Index kMaxExactEmd = 512;

// Hungarian algorithm on the Euclidean cost matrix.
Assignment emd_exact(const PointSet& a, const PointSet& b);

struct FlowArc {
  Index from = 0;
  Index to = 0;
  double cost = 0.0;
  std::int64_t capacity = 0;
};

// supply > 0 at sources, < 0 at sinks.
struct FlowNetwork {
  Index nodes = 0;
  std::vector<std::int64_t> supply;
  std::vector<FlowArc> arcs;
};

struct FlowSolution {
  double cost = 0.0;
  std::vector<std::int64_t> flow;  // per arc
};

// Successive shortest paths with node potentials.
FlowSolution min_cost_flow(const FlowNetwork& net);

// Arcs from the graph's edges (both directions when undirected), capacity
// equal to the total supply.
FlowNetwork flow_network(const SpannerGraph& graph, const std::vector<std::int64_t>& data_supply);

enum class EmdOrientation {
  QueryToBuild,  // A is the query side, B the build side
  Symmetric,     // every point plays both roles
};

std::string to_string(EmdOrientation o);
EmdOrientation parse_orientation(const std::string& s);

struct EmdOptions {
  double eps = 0.25;
  std::uint64_t seed = 0;
  EmdOrientation orientation = EmdOrientation::QueryToBuild;
  int threads = 0;
  int rounds = 0;
  Index m = 0;
  double k_safety = 0.0;
};

struct EmdResult {
  double cost = 0.0;
  std::int64_t total_supply = 0;
  std::int64_t prematched = 0;    // mass matched at coincident points
  // Spanner vertex set (A-side then B-side unique points); empty when
  // everything was prematched.
  std::optional<PointSet> points;
  std::vector<Index> a_node;      // A position -> node, -1 when fully prematched
  std::vector<Index> b_node;
  std::optional<SpannerGraph> graph;
  BuildReport report;
  double wall_ms = 0.0;
};

EmdResult emd_spanner(const PointSet& a, const PointSet& b, const EmdOptions& options);
// Integer masses; totals must agree.
EmdResult emd_spanner_weighted(const PointSet& a, const std::vector<std::int64_t>& wa,
                               const PointSet& b, const std::vector<std::int64_t>& wb,
                               const EmdOptions& options);

}  // namespace spanner
