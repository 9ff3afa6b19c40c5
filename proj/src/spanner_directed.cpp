#include "spanner/spanner_directed.hpp"

#include "scale_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spanner {

void validate(const OneScaleConfig& cfg) {
  if (!(cfg.r > 0.0) || !std::isfinite(cfg.r)) throw ConfigError("r must be positive");
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  if (cfg.m < 1) throw ConfigError("m must be >= 1");
  if (cfg.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (!(cfg.k_safety >= 1.0)) throw ConfigError("K_safety must be >= 1");
  if (cfg.max_parts < 3) throw ConfigError("part budget must be >= 3");
  if (cfg.fns_limit < 0.0 || cfg.weight < 0.0 || cfg.band_lower < 0.0 || cfg.band_upper < 0.0) {
    throw ConfigError("limits must be non-negative");
  }
}

SpannerGraph build_one_scale(const SphereInstance& inst, const OneScaleConfig& cfg, int threads) {
  validate(cfg);
  const Index k = inst.points.cols();
  SpannerGraph graph(k, GraphMode::Directed);
  if (k < 2) return graph;
  const PointSet points(inst.points);
  const DistanceTable table(points, threads);

  detail::ScaleProblem problem;
  problem.table = &table;
  problem.sphere = &inst.points;
  problem.nodes.resize(static_cast<std::size_t>(k));
  std::iota(problem.nodes.begin(), problem.nodes.end(), Index{0});
  problem.build_ok.assign(static_cast<std::size_t>(k), 1);
  problem.query_ok.assign(static_cast<std::size_t>(k), 1);
  const auto lsh_n = std::max<Index>(2, static_cast<Index>(std::llround(cfg.k_safety * static_cast<double>(cfg.m))));
  problem.lsh = solve_params_budgeted(std::min(cfg.r, 1.0), cfg.eps, lsh_n, cfg.max_parts);
  problem.m = cfg.m;
  const double weight = cfg.weight > 0.0 ? cfg.weight : (1.0 + 3.0 * cfg.eps) * cfg.r;
  problem.limit = cfg.fns_limit > 0.0 ? cfg.fns_limit : (1.0 + cfg.eps) * cfg.r;
  if (problem.limit > weight) throw ConfigError("FNS limit must not exceed the gadget weight");
  problem.band_lower = cfg.band_lower;
  if (cfg.band_upper > 0.0) problem.band_upper = cfg.band_upper;
  problem.seed = cfg.seed;

  detail::EmitContext ctx;
  ctx.graph = &graph;
  ctx.table = &table;
  ctx.r = cfg.r;
  ctx.weight = weight;
  ctx.limit = problem.limit;
  ctx.eps_internal = cfg.eps;
  ctx.threads = threads;
  for (int round = 0; round < cfg.rounds; ++round) {
    ctx.round = round;
    detail::RoundStats stats;
    detail::emit_directed(ctx, detail::run_round(problem, round, threads, &stats));
  }
  return graph;
}

NetResult delta_net(const DistanceTable& table, std::span<const Index> subset, double delta,
                    std::span<const Index> seeds) {
  if (!(delta > 0.0)) throw InvalidScale("net radius must be positive");
  NetResult out;
  out.leader.assign(static_cast<std::size_t>(table.size()), -1);
  std::vector<char> chosen(static_cast<std::size_t>(table.size()), 0);
  std::vector<Index> net(seeds.begin(), seeds.end());
  for (Index s : seeds) chosen[static_cast<std::size_t>(s)] = 1;
  for (Index p : subset) {
    if (chosen[static_cast<std::size_t>(p)]) continue;
    bool far = true;
    for (Index c : net) {
      if (table(p, c) <= delta) {
        far = false;
        break;
      }
    }
    if (far) {
      net.push_back(p);
      chosen[static_cast<std::size_t>(p)] = 1;
    }
  }
  std::sort(net.begin(), net.end());
  for (Index p : subset) {
    if (chosen[static_cast<std::size_t>(p)]) {
      out.leader[static_cast<std::size_t>(p)] = p;
      continue;
    }
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c : net) {
      const double d = table(p, c);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    out.leader[static_cast<std::size_t>(p)] = best;
  }
  out.net = std::move(net);
  return out;
}

NetResult delta_net(const PointSet& points, std::span<const Index> subset, double delta) {
  const DistanceTable table(points);
  return delta_net(table, subset, delta);
}

NetHierarchy build_net_hierarchy(const DistanceTable& table, std::span<const double> scales,
                                 double net_ratio) {
  if (!(net_ratio > 0.0)) throw ConfigError("net ratio must be positive");
  const std::size_t levels = scales.size();
  NetHierarchy h;
  h.scales.assign(scales.begin(), scales.end());
  h.radii.resize(levels);
  for (std::size_t i = 0; i < levels; ++i) h.radii[i] = net_ratio * scales[i];
  h.base = levels > 0 ? h.radii[0] : 0.0;
  h.nets.resize(levels);
  h.leaders.resize(levels);
  h.active.resize(levels);
  std::vector<Index> all(static_cast<std::size_t>(table.size()));
  std::iota(all.begin(), all.end(), Index{0});
  for (std::size_t k = levels; k-- > 0;) {
    std::span<const Index> seeds;
    if (k + 1 < levels) seeds = h.nets[k + 1];
    NetResult net = delta_net(table, all, h.radii[k], seeds);
    h.nets[k] = std::move(net.net);
    h.leaders[k] = std::move(net.leader);
  }
  for (std::size_t k = 0; k < levels; ++k) {
    const auto& net = h.nets[k];
    for (Index p : net) {
      for (Index q : net) {
        if (q != p && table(p, q) <= scales[k]) {
          h.active[k].push_back(p);
          break;
        }
      }
    }
  }
  return h;
}

std::string to_string(BuildMode mode) {
  switch (mode) {
    case BuildMode::Directed: return "directed";
    case BuildMode::DirectedNetted: return "directed-netted";
    case BuildMode::Undirected: return "undirected";
  }
  return "directed";
}

BuildMode parse_build_mode(const std::string& text) {
  if (text == "directed") return BuildMode::Directed;
  if (text == "directed-netted") return BuildMode::DirectedNetted;
  if (text == "undirected") return BuildMode::Undirected;
  throw ConfigError("unknown build mode '" + text + "'");
}

StretchBudget stretch_budget(double eps, BuildMode mode) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  StretchBudget b;
  b.eps = eps;
  const double c = 1.0 + eps;
  if (mode == BuildMode::Directed) {
    b.ladder_step = std::sqrt(c);
    b.weight_factor = std::sqrt(c);
    b.net_ratio = 0.0;
  } else {
    // Keep a (1+eps)^0.2 share for leader detours through the nets.
    b.ladder_step = std::pow(c, 0.4);
    b.weight_factor = std::pow(c, 0.4);
    const double sg = b.ladder_step * b.weight_factor;
    b.net_ratio = (c - sg) / (2.0 * c * (b.ladder_step + 1.0));
  }
  b.eps_internal = mode == BuildMode::Undirected ? b.weight_factor - 1.0 : (b.weight_factor - 1.0) / 3.0;
  return b;
}

Index default_group_size(Index n, double eps_internal) {
  const double m = std::ceil(std::pow(static_cast<double>(n), eps_internal * eps_internal / 4.0));
  return std::max<Index>(2, static_cast<Index>(m));
}

double default_k_safety(Index n) {
  const double l = std::log(static_cast<double>(std::max<Index>(n, 2)));
  return std::max(1.0, std::ceil(l * l));
}

BuildResult build_directed(const PointSet& points, const BuildOptions& options) {
  detail::AssemblySpec spec;
  spec.mode = BuildMode::Directed;
  spec.graph_mode = GraphMode::Directed;
  spec.netted = false;
  return detail::run_multiscale(points, options, spec, detail::emit_directed);
}

BuildResult build_directed_netted(const PointSet& points, const BuildOptions& options) {
  detail::AssemblySpec spec;
  spec.mode = BuildMode::DirectedNetted;
  spec.graph_mode = GraphMode::Directed;
  spec.netted = true;
  return detail::run_multiscale(points, options, spec, detail::emit_directed);
}

}  // namespace spanner
