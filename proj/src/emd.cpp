#include "spanner/emd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

namespace spanner {

Assignment emd_exact(const PointSet& a, const PointSet& b) {
  if (a.size() != b.size()) throw SizeError("EMD needs equal-size point sets");
  if (a.dim() != b.dim()) throw DimensionError("EMD point sets differ in dimension");
  const Index n = a.size();
  if (n > kMaxExactEmd) throw TooLarge("exact EMD is limited to 512 points per side");

  Matrix cost(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cost(i, j) = distance(a.point(i), b.point(j));

  // Shortest augmenting paths with potentials, 1-based rows/columns.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.match.assign(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) out.match[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += cost(i, out.match[static_cast<std::size_t>(i)]);
  out.cost = n > 0 ? total / static_cast<double>(n) : 0.0;
  return out;
}

FlowSolution min_cost_flow(const FlowNetwork& net) {
  const Index n = net.nodes;
  if (static_cast<Index>(net.supply.size()) != n) throw SizeError("supply vector size mismatch");
  std::int64_t balance = 0, total = 0;
  for (auto s : net.supply) {
    balance += s;
    if (s > 0) total += s;
  }
  if (balance != 0) throw DomainError("supplies do not balance");
  for (const auto& arc : net.arcs) {
    if (arc.from < 0 || arc.to < 0 || arc.from >= n || arc.to >= n) throw NodeError("arc endpoint out of range");
    if (!(arc.cost >= 0.0) || !std::isfinite(arc.cost)) throw DomainError("arc costs must be finite and >= 0");
    if (arc.capacity < 0) throw DomainError("arc capacity must be >= 0");
  }

  // Residual graph: arc 2k forward, 2k+1 backward; super source n, sink n+1.
  const Index nodes = n + 2;
  const Index src = n, dst = n + 1;
  struct Res {
    Index to;
    double cost;
    std::int64_t cap;
  };
  std::vector<Res> res;
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(nodes));
  auto add = [&](Index from, Index to, double cost, std::int64_t cap) {
    out[static_cast<std::size_t>(from)].push_back(static_cast<Index>(res.size()));
    res.push_back({to, cost, cap});
    out[static_cast<std::size_t>(to)].push_back(static_cast<Index>(res.size()));
    res.push_back({from, -cost, 0});
  };
  for (const auto& arc : net.arcs) add(arc.from, arc.to, arc.cost, arc.capacity);
  for (Index v = 0; v < n; ++v) {
    const auto s = net.supply[static_cast<std::size_t>(v)];
    if (s > 0) add(src, v, 0.0, s);
    if (s < 0) add(v, dst, 0.0, -s);
  }

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pot(static_cast<std::size_t>(nodes), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(nodes));
  std::vector<Index> via(static_cast<std::size_t>(nodes));
  std::int64_t sent = 0;
  double cost = 0.0;
  using Item = std::pair<double, Index>;
  while (sent < total) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(via.begin(), via.end(), -1);
    dist[static_cast<std::size_t>(src)] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.push({0.0, src});
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (d > dist[static_cast<std::size_t>(v)]) continue;
      for (Index e : out[static_cast<std::size_t>(v)]) {
        const Res& r = res[static_cast<std::size_t>(e)];
        if (r.cap <= 0) continue;
        const double reduced = std::max(
            0.0, r.cost + pot[static_cast<std::size_t>(v)] - pot[static_cast<std::size_t>(r.to)]);
        const double nd = d + reduced;
        if (nd < dist[static_cast<std::size_t>(r.to)]) {
          dist[static_cast<std::size_t>(r.to)] = nd;
          via[static_cast<std::size_t>(r.to)] = e;
          heap.push({nd, r.to});
        }
      }
    }
    if (dist[static_cast<std::size_t>(dst)] == inf) throw Infeasible("some supply cannot reach a sink");
    for (Index v = 0; v < nodes; ++v)
      if (dist[static_cast<std::size_t>(v)] < inf) pot[static_cast<std::size_t>(v)] += dist[static_cast<std::size_t>(v)];

    std::int64_t push = total - sent;
    for (Index v = dst; v != src;) {
      const Index e = via[static_cast<std::size_t>(v)];
      push = std::min(push, res[static_cast<std::size_t>(e)].cap);
      v = res[static_cast<std::size_t>(e ^ 1)].to;
    }
    for (Index v = dst; v != src;) {
      const Index e = via[static_cast<std::size_t>(v)];
      res[static_cast<std::size_t>(e)].cap -= push;
      res[static_cast<std::size_t>(e ^ 1)].cap += push;
      cost += static_cast<double>(push) * res[static_cast<std::size_t>(e)].cost;
      v = res[static_cast<std::size_t>(e ^ 1)].to;
    }
    sent += push;
  }

  FlowSolution sol;
  sol.cost = cost;
  sol.flow.resize(net.arcs.size());
  for (std::size_t k = 0; k < net.arcs.size(); ++k) sol.flow[k] = res[2 * k + 1].cap;
  return sol;
}

FlowNetwork flow_network(const SpannerGraph& graph, const std::vector<std::int64_t>& data_supply) {
  if (static_cast<Index>(data_supply.size()) != graph.data_count())
    throw SizeError("supply vector must cover the data nodes");
  FlowNetwork net;
  net.nodes = graph.node_count();
  net.supply.assign(static_cast<std::size_t>(net.nodes), 0);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < data_supply.size(); ++i) {
    net.supply[i] = data_supply[i];
    if (data_supply[i] > 0) total += data_supply[i];
  }
  const std::int64_t cap = std::max<std::int64_t>(total, 1);
  net.arcs.reserve(graph.edges().size() * (graph.directed() ? 1 : 2));
  for (const Edge& e : graph.edges()) {
    net.arcs.push_back({e.from, e.to, e.weight, cap});
    if (!graph.directed()) net.arcs.push_back({e.to, e.from, e.weight, cap});
  }
  return net;
}

std::string to_string(EmdOrientation o) {
  return o == EmdOrientation::QueryToBuild ? "query-to-build" : "symmetric";
}

EmdOrientation parse_orientation(const std::string& s) {
  if (s == "query-to-build") return EmdOrientation::QueryToBuild;
  if (s == "symmetric") return EmdOrientation::Symmetric;
  throw ConfigError("unknown orientation: " + s);
}

namespace {

using Key = std::vector<double>;

Key key_of(const PointSet& p, Index i) {
  const auto col = p.point(i);
  return Key(col.data(), col.data() + col.size());
}

}  // namespace

EmdResult emd_spanner_weighted(const PointSet& a, const std::vector<std::int64_t>& wa,
                               const PointSet& b, const std::vector<std::int64_t>& wb,
                               const EmdOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  if (a.dim() != b.dim()) throw DimensionError("EMD point sets differ in dimension");
  if (static_cast<Index>(wa.size()) != a.size() || static_cast<Index>(wb.size()) != b.size())
    throw SizeError("one mass per point is required");
  if (!(options.eps > 0.0 && options.eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const auto positive = [](std::int64_t w) { return w >= 0; };
  if (!std::all_of(wa.begin(), wa.end(), positive) || !std::all_of(wb.begin(), wb.end(), positive))
    throw DomainError("masses must be >= 0");
  const std::int64_t total_a = std::accumulate(wa.begin(), wa.end(), std::int64_t{0});
  const std::int64_t total_b = std::accumulate(wb.begin(), wb.end(), std::int64_t{0});
  if (total_a != total_b) throw SizeError("total masses differ");

  EmdResult out;
  out.total_supply = total_a;
  out.a_node.assign(static_cast<std::size_t>(a.size()), -1);
  out.b_node.assign(static_cast<std::size_t>(b.size()), -1);

  // Merge coincident points per side, then cancel mass at A/B coincidences.
  std::map<Key, std::int64_t> mass_a, mass_b;
  for (Index i = 0; i < a.size(); ++i) mass_a[key_of(a, i)] += wa[static_cast<std::size_t>(i)];
  for (Index j = 0; j < b.size(); ++j) mass_b[key_of(b, j)] += wb[static_cast<std::size_t>(j)];
  for (auto& [k, m] : mass_a) {
    auto it = mass_b.find(k);
    if (it == mass_b.end()) continue;
    const std::int64_t both = std::min(m, it->second);
    m -= both;
    it->second -= both;
    out.prematched += both;
  }

  std::vector<Key> keys;
  std::vector<std::int64_t> supply;
  std::vector<char> is_a;
  for (const auto& [k, m] : mass_a)
    if (m > 0) {
      keys.push_back(k);
      supply.push_back(m);
      is_a.push_back(1);
    }
  for (const auto& [k, m] : mass_b)
    if (m > 0) {
      keys.push_back(k);
      supply.push_back(-m);
      is_a.push_back(0);
    }
  if (keys.empty()) {
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  const Index n = static_cast<Index>(keys.size());
  Matrix coords(a.dim(), n);
  for (Index i = 0; i < n; ++i)
    coords.col(i) = Eigen::Map<const Vector>(keys[static_cast<std::size_t>(i)].data(), a.dim());
  out.points.emplace(std::move(coords));

  std::map<Key, Index> node_of;
  for (Index i = 0; i < n; ++i) node_of[keys[static_cast<std::size_t>(i)]] = i;
  // Lookups may land on the other side's node when a point was only partly
  // prematched; that node is still the same location.
  for (Index i = 0; i < a.size(); ++i)
    if (auto it = node_of.find(key_of(a, i)); it != node_of.end()) out.a_node[static_cast<std::size_t>(i)] = it->second;
  for (Index j = 0; j < b.size(); ++j)
    if (auto it = node_of.find(key_of(b, j)); it != node_of.end()) out.b_node[static_cast<std::size_t>(j)] = it->second;

  BuildOptions build;
  build.eps = options.eps;
  build.seed = options.seed;
  build.threads = options.threads;
  build.rounds = options.rounds;
  build.m = options.m;
  build.k_safety = options.k_safety;
  if (options.orientation == EmdOrientation::QueryToBuild) {
    build.query_side = is_a;
    build.build_side.resize(is_a.size());
    for (std::size_t i = 0; i < is_a.size(); ++i) build.build_side[i] = !is_a[i];
  }
  if (n >= 2) {
    BuildResult built = build_directed(*out.points, build);
    out.graph.emplace(std::move(built.graph));
    out.report = std::move(built.report);
  } else {
    out.graph.emplace(n, GraphMode::Directed);
  }

  const FlowSolution sol = min_cost_flow(flow_network(*out.graph, supply));
  out.cost = total_a > 0 ? sol.cost / static_cast<double>(total_a) : 0.0;
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

EmdResult emd_spanner(const PointSet& a, const PointSet& b, const EmdOptions& options) {
  if (a.size() != b.size()) throw SizeError("EMD needs equal-size point sets");
  return emd_spanner_weighted(a, std::vector<std::int64_t>(static_cast<std::size_t>(a.size()), 1), b,
                              std::vector<std::int64_t>(static_cast<std::size_t>(b.size()), 1), options);
}

}  // namespace spanner
