#pragma once

#include "spanner/common.hpp"
#include "spanner/geometry.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace spanner {

enum class GraphMode { Directed, Undirected };
enum class NodeKind { Data, Steiner };

// Provenance of a Steiner node: which scale, round and bucket produced it.
// `sub` distinguishes the several stars an undirected gadget emits per bucket.
struct SteinerTag {
  std::int32_t scale = 0;
  std::int32_t round = 0;
  std::int64_t bucket = 0;
  std::int64_t sub = 0;
  bool operator==(const SteinerTag&) const = default;
};

struct Edge {
  Index from;
  Index to;
  double weight;
  bool operator==(const Edge&) const = default;
};

// Nodes 0..data_count-1 are data points (PointSet positions); Steiner nodes
// follow. In undirected mode each stored edge is traversable both ways.
class SpannerGraph {
 public:
  SpannerGraph(Index data_nodes, GraphMode mode);

  GraphMode mode() const { return mode_; }
  bool directed() const { return mode_ == GraphMode::Directed; }
  Index data_count() const { return data_count_; }
  Index steiner_count() const { return static_cast<Index>(tags_.size()); }
  Index node_count() const { return data_count_ + steiner_count(); }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }

  Index add_steiner(SteinerTag tag);
  void add_edge(Index from, Index to, double weight);

  NodeKind kind(Index node) const;
  // Data position or Steiner ordinal.
  Index local_id(Index node) const;
  Index steiner_node(Index ordinal) const { return data_count_ + ordinal; }

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<SteinerTag>& steiner_tags() const { return tags_; }

  // Appends another graph over the same data nodes, renumbering its Steiner nodes.
  void append(const SpannerGraph& other);

 private:
  void check_node(Index node) const;

  Index data_count_;
  GraphMode mode_;
  std::vector<SteinerTag> tags_;
  std::vector<Edge> edges_;
};

// Forward adjacency in compressed form (both directions for undirected graphs).
struct Adjacency {
  std::vector<std::int64_t> offsets;
  std::vector<std::int32_t> targets;
  std::vector<double> weights;
};

Adjacency build_adjacency(const SpannerGraph& graph);

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Dijkstra from `source`; stops early once every node in `targets` is settled
// (an empty span means all nodes).
std::vector<double> shortest_paths_from(const Adjacency& adj, Index source,
                                        std::span<const Index> targets = {});

std::optional<double> shortest_path_length(const SpannerGraph& graph, Index u, Index v);

struct PairSample {
  std::vector<std::pair<Index, Index>> pairs;
  bool exhaustive = false;
};

// All ordered pairs p != q.
PairSample all_pairs(Index n);
// All pairs when n <= 1500 or the budget covers them, otherwise `budget`
// uniform ordered pairs plus the planted ones.
PairSample default_pairs(Index n, std::uint64_t seed, Index budget = 100'000,
                         std::span<const std::pair<Index, Index>> planted = {});

struct PairRecord {
  Index p;
  Index q;
  double distance;
  double graph_distance;
};

struct AuditReport {
  Index pairs_checked = 0;
  std::vector<PairRecord> shortcut_violations;
  std::vector<PairRecord> stretch_failures;
  double bound = 0.0;
  Index within_bound = 0;
  Index unreachable = 0;
  double max_observed_stretch = 0.0;  // over reachable pairs
  Index edge_count = 0;
  Index steiner_count = 0;

  double fraction_within() const {
    return pairs_checked == 0 ? 1.0 : static_cast<double>(within_bound) / static_cast<double>(pairs_checked);
  }
};

inline constexpr double kShortcutTolerance = 1e-9;

// Checks both the no-shortcut inequality and the stretch bound on every pair.
AuditReport audit(const SpannerGraph& graph, const PointSet& points, const PairSample& pairs,
                  double bound, int threads = 1);
AuditReport audit_no_shortcut(const SpannerGraph& graph, const PointSet& points,
                              const PairSample& pairs, int threads = 1);
AuditReport audit_stretch(const SpannerGraph& graph, const PointSet& points,
                          const PairSample& pairs, double bound, int threads = 1);

}  // namespace spanner
