#include "spanner/graph.hpp"

#include "spanner/parallel.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <string>

namespace spanner {

SpannerGraph::SpannerGraph(Index data_nodes, GraphMode mode) : data_count_(data_nodes), mode_(mode) {
  if (data_nodes < 0) throw NodeError("negative data node count");
}

Index SpannerGraph::add_steiner(SteinerTag tag) {
  tags_.push_back(tag);
  return node_count() - 1;
}

void SpannerGraph::check_node(Index node) const {
  if (node < 0 || node >= node_count()) throw NodeError("unknown node " + std::to_string(node));
}

void SpannerGraph::add_edge(Index from, Index to, double weight) {
  check_node(from);
  check_node(to);
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw DomainError("edge weights must be finite and >= 0");
  edges_.push_back({from, to, weight});
}

NodeKind SpannerGraph::kind(Index node) const {
  check_node(node);
  return node < data_count_ ? NodeKind::Data : NodeKind::Steiner;
}

Index SpannerGraph::local_id(Index node) const {
  check_node(node);
  return node < data_count_ ? node : node - data_count_;
}

void SpannerGraph::append(const SpannerGraph& other) {
  if (other.data_count_ != data_count_ || other.mode_ != mode_) {
    throw NodeError("appended graph must share data nodes and mode");
  }
  const Index offset = steiner_count();
  tags_.insert(tags_.end(), other.tags_.begin(), other.tags_.end());
  auto remap = [&](Index node) { return node < data_count_ ? node : node + offset; };
  edges_.reserve(edges_.size() + other.edges_.size());
  for (const Edge& e : other.edges_) edges_.push_back({remap(e.from), remap(e.to), e.weight});
}

Adjacency build_adjacency(const SpannerGraph& graph) {
  const Index n = graph.node_count();
  Adjacency adj;
  adj.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  const bool both = !graph.directed();
  for (const Edge& e : graph.edges()) {
    ++adj.offsets[static_cast<std::size_t>(e.from) + 1];
    if (both) ++adj.offsets[static_cast<std::size_t>(e.to) + 1];
  }
  for (Index i = 0; i < n; ++i) adj.offsets[static_cast<std::size_t>(i) + 1] += adj.offsets[static_cast<std::size_t>(i)];
  adj.targets.resize(static_cast<std::size_t>(adj.offsets.back()));
  adj.weights.resize(adj.targets.size());
  std::vector<std::int64_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  auto put = [&](Index from, Index to, double w) {
    const auto slot = static_cast<std::size_t>(cursor[static_cast<std::size_t>(from)]++);
    adj.targets[slot] = static_cast<std::int32_t>(to);
    adj.weights[slot] = w;
  };
  for (const Edge& e : graph.edges()) {
    put(e.from, e.to, e.weight);
    if (both) put(e.to, e.from, e.weight);
  }
  return adj;
}

std::vector<double> shortest_paths_from(const Adjacency& adj, Index source,
                                        std::span<const Index> targets) {
  const auto n = static_cast<Index>(adj.offsets.size()) - 1;
  if (source < 0 || source >= n) throw NodeError("unknown source node");
  std::vector<double> dist(static_cast<std::size_t>(n), kUnreachable);
  std::vector<char> is_target;
  Index remaining = 0;
  if (!targets.empty()) {
    is_target.assign(static_cast<std::size_t>(n), 0);
    for (Index t : targets) {
      if (t < 0 || t >= n) throw NodeError("unknown target node");
      if (!is_target[static_cast<std::size_t>(t)]) {
        is_target[static_cast<std::size_t>(t)] = 1;
        ++remaining;
      }
    }
  }
  using Item = std::pair<double, std::int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(source)] = 0.0;
  heap.push({0.0, static_cast<std::int32_t>(source)});
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (!is_target.empty() && is_target[static_cast<std::size_t>(u)]) {
      is_target[static_cast<std::size_t>(u)] = 0;
      if (--remaining == 0) break;
    }
    for (auto k = adj.offsets[static_cast<std::size_t>(u)]; k < adj.offsets[static_cast<std::size_t>(u) + 1]; ++k) {
      const auto v = static_cast<std::size_t>(adj.targets[static_cast<std::size_t>(k)]);
      const double nd = d + adj.weights[static_cast<std::size_t>(k)];
      if (nd < dist[v]) {
        dist[v] = nd;
        heap.push({nd, static_cast<std::int32_t>(v)});
      }
    }
  }
  return dist;
}

std::optional<double> shortest_path_length(const SpannerGraph& graph, Index u, Index v) {
  if (u < 0 || u >= graph.node_count() || v < 0 || v >= graph.node_count()) {
    throw NodeError("unknown node");
  }
  const Adjacency adj = build_adjacency(graph);
  const Index target[] = {v};
  const double d = shortest_paths_from(adj, u, target)[static_cast<std::size_t>(v)];
  if (d == kUnreachable) return std::nullopt;
  return d;
}

PairSample all_pairs(Index n) {
  PairSample s;
  s.exhaustive = true;
  s.pairs.reserve(static_cast<std::size_t>(n * (n > 0 ? n - 1 : 0)));
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      if (p != q) s.pairs.emplace_back(p, q);
    }
  }
  return s;
}

PairSample default_pairs(Index n, std::uint64_t seed, Index budget,
                         std::span<const std::pair<Index, Index>> planted) {
  if (n <= 1500 || budget >= n * (n - 1)) return all_pairs(n);
  PairSample s;
  CounterRng rng(derive_seed(seed, {0xa0d17}));
  s.pairs.reserve(static_cast<std::size_t>(budget) + planted.size());
  while (static_cast<Index>(s.pairs.size()) < budget) {
    const auto p = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    const auto q = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    if (p != q) s.pairs.emplace_back(p, q);
  }
  s.pairs.insert(s.pairs.end(), planted.begin(), planted.end());
  return s;
}

AuditReport audit(const SpannerGraph& graph, const PointSet& points, const PairSample& sample,
                  double bound, int threads) {
  if (points.size() != graph.data_count()) throw NodeError("point set does not match graph data nodes");
  AuditReport report;
  report.bound = bound;
  report.edge_count = graph.edge_count();
  report.steiner_count = graph.steiner_count();

  // Group pairs by source so each source needs one Dijkstra run.
  std::map<Index, std::vector<std::size_t>> by_source;
  for (std::size_t k = 0; k < sample.pairs.size(); ++k) {
    const auto [p, q] = sample.pairs[k];
    if (p < 0 || q < 0 || p >= graph.data_count() || q >= graph.data_count()) {
      throw NodeError("pair references a non-data node");
    }
    by_source[p].push_back(k);
  }
  std::vector<Index> sources;
  sources.reserve(by_source.size());
  for (const auto& entry : by_source) sources.push_back(entry.first);

  const Adjacency adj = build_adjacency(graph);
  std::vector<double> graph_dist(sample.pairs.size());
  parallel_for(static_cast<std::int64_t>(sources.size()), threads, [&](std::int64_t s) {
    const Index src = sources[static_cast<std::size_t>(s)];
    const auto& idx = by_source.at(src);
    std::vector<Index> targets;
    targets.reserve(idx.size());
    for (std::size_t k : idx) targets.push_back(sample.pairs[k].second);
    const auto dist = shortest_paths_from(adj, src, targets);
    for (std::size_t k : idx) graph_dist[k] = dist[static_cast<std::size_t>(sample.pairs[k].second)];
  });

  for (std::size_t k = 0; k < sample.pairs.size(); ++k) {
    const auto [p, q] = sample.pairs[k];
    const double d = points.distance(p, q);
    const double h = graph_dist[k];
    ++report.pairs_checked;
    const PairRecord rec{p, q, d, h};
    if (h < d * (1.0 - kShortcutTolerance)) report.shortcut_violations.push_back(rec);
    if (h == kUnreachable) {
      ++report.unreachable;
      report.stretch_failures.push_back(rec);
      continue;
    }
    if (d > 0.0) report.max_observed_stretch = std::max(report.max_observed_stretch, h / d);
    if (h <= bound * d) {
      ++report.within_bound;
    } else {
      report.stretch_failures.push_back(rec);
    }
  }
  return report;
}

AuditReport audit_no_shortcut(const SpannerGraph& graph, const PointSet& points,
                              const PairSample& pairs, int threads) {
  AuditReport report = audit(graph, points, pairs, kUnreachable, threads);
  report.stretch_failures.clear();
  return report;
}

AuditReport audit_stretch(const SpannerGraph& graph, const PointSet& points,
                          const PairSample& pairs, double bound, int threads) {
  if (!(bound >= 1.0)) throw DomainError("stretch bound must be >= 1");
  return audit(graph, points, pairs, bound, threads);
}

}  // namespace spanner
