#include "spanner/spanner_undirected.hpp"

#include "scale_engine.hpp"
#include "spanner/parallel.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>

namespace spanner {

std::pair<double, double> choose_x0_y0(double x, double y, double r, double eps) {
  if (!(x >= 0.0 && y >= 0.0 && std::isfinite(x) && std::isfinite(y)))
    throw DomainError("part diameters must be finite and >= 0");
  if (!(r > 0.0 && eps > 0.0)) throw DomainError("r and eps must be positive");
  const double total = 2.0 * (1.0 + eps) * r;
  if (x + y > total) throw GadgetInfeasible("part diameters exceed 2(1+eps)r");
  const double x0 = x + 0.5 * (total - x - y);
  return {x0, total - x0};
}

GadgetSpec make_gadget(Decomposition a_parts, Decomposition b_parts, double r, double eps) {
  const auto [x0, y0] = choose_x0_y0(a_parts.certified_diameter, b_parts.certified_diameter, r, eps);
  return {std::move(a_parts), std::move(b_parts), r, eps, x0, y0};
}

Index gadget_edge_count(const Decomposition& a_parts, const Decomposition& b_parts) {
  Index a = 0, b = 0;
  for (const auto& c : a_parts.clusters) a += static_cast<Index>(c.size());
  for (const auto& c : b_parts.clusters) b += static_cast<Index>(c.size());
  return a * static_cast<Index>(b_parts.clusters.size()) +
         static_cast<Index>(a_parts.clusters.size()) * b;
}

GadgetOutput asymmetric_star_gadget(const GadgetSpec& spec, SpannerGraph& graph, SteinerTag base) {
  if (graph.directed()) throw DomainError("the star gadget needs an undirected graph");
  if (spec.x0 < spec.a_parts.certified_diameter || spec.y0 < spec.b_parts.certified_diameter ||
      std::abs(spec.x0 + spec.y0 - 2.0 * (1.0 + spec.eps) * spec.r) >
          1e-9 * std::max(1.0, spec.r))
    throw GadgetInfeasible("x0, y0 do not cover the part diameters");
  const auto k = static_cast<std::int64_t>(spec.a_parts.clusters.size());
  const auto l = static_cast<std::int64_t>(spec.b_parts.clusters.size());
  GadgetOutput out;
  for (std::int64_t i = 0; i < k; ++i) {
    for (std::int64_t j = 0; j < l; ++j) {
      SteinerTag tag = base;
      tag.sub = base.sub * k * l + i * l + j;
      const Index s = graph.add_steiner(tag);
      for (Index p : spec.a_parts.clusters[static_cast<std::size_t>(i)]) graph.add_edge(p, s, 0.5 * spec.x0);
      for (Index q : spec.b_parts.clusters[static_cast<std::size_t>(j)]) graph.add_edge(s, q, 0.5 * spec.y0);
      out.edges += static_cast<Index>(spec.a_parts.clusters[static_cast<std::size_t>(i)].size() +
                                      spec.b_parts.clusters[static_cast<std::size_t>(j)].size());
      ++out.steiner;
    }
  }
  return out;
}

namespace {

constexpr std::size_t kDecomposeMin = 8;

struct SideStats {
  double diameter = 0.0;
  double avg = 0.0;
};

SideStats side_stats(const DistanceTable& table, const std::vector<Index>& set) {
  SideStats s;
  double sum = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      const double d = table(set[i], set[j]);
      s.diameter = std::max(s.diameter, d);
      sum += d * d;
    }
  const double n = static_cast<double>(set.size());
  s.avg = std::sqrt(2.0 * sum / (n * n));
  return s;
}

Decomposition whole(const std::vector<Index>& set, double diameter) {
  return {{set}, {diameter}, diameter, "whole"};
}

Decomposition singletons(const std::vector<Index>& set) {
  Decomposition d;
  d.source = "singletons";
  for (Index p : set) {
    d.clusters.push_back({p});
    d.cluster_diameter.push_back(0.0);
  }
  return d;
}

// Replaces certified bounds by exact cluster diameters (never larger).
void tighten(const DistanceTable& table, Decomposition& d) {
  d.certified_diameter = 0.0;
  for (std::size_t c = 0; c < d.clusters.size(); ++c) {
    d.cluster_diameter[c] = std::min(d.cluster_diameter[c], exact_diameter(table, d.clusters[c]));
    d.certified_diameter = std::max(d.certified_diameter, d.cluster_diameter[c]);
  }
}

struct Plan {
  bool ok = false;
  Decomposition a;
  Decomposition b;
  Index edges = std::numeric_limits<Index>::max();
};

class Planner {
 public:
  Planner(const detail::EmitContext& ctx, double eps_gadget) : ctx_(ctx), eps_(eps_gadget) {}

  void consider(Plan& best, Decomposition a, Decomposition b) const {
    if (a.certified_diameter + b.certified_diameter > 2.0 * (1.0 + eps_) * ctx_.r) return;
    const Index e = gadget_edge_count(a, b);
    if (e < best.edges) best = {true, std::move(a), std::move(b), e};
  }

  Plan plan(const detail::Bucket& bucket, const std::function<QuerySideDecomposer&()>& get) const {
    const DistanceTable& table = *ctx_.table;
    const auto& a = bucket.p_side;
    const auto& b = bucket.q_side;
    const double two_w = 2.0 * (1.0 + eps_) * ctx_.r;
    for (Index p : a)
      for (Index q : b)
        if (table(p, q) > ctx_.limit)
          throw InvariantViolation("undirected bucket has a cross pair beyond the limit");
    const SideStats sa = side_stats(table, a);
    const SideStats sb = side_stats(table, b);
    if (sa.avg + sb.avg > 2.0 * ctx_.limit + 1e-9)
      throw InvariantViolation("negative-type bound failed on a bucket");

    Plan best;
    consider(best, whole(a, sa.diameter), whole(b, sb.diameter));
    if (best.ok) return best;
    consider(best, singletons(a), whole(b, sb.diameter));
    consider(best, whole(a, sa.diameter), singletons(b));
    if (a.size() < kDecomposeMin || b.size() < kDecomposeMin) return best;

    const std::uint64_t seed = derive_seed(
        ctx_.seed, {static_cast<std::uint64_t>(ctx_.level), static_cast<std::uint64_t>(ctx_.round),
                    static_cast<std::uint64_t>(bucket.part), static_cast<std::uint64_t>(bucket.group)});
    Decomposition da = low_diameter_decomposition(table, a, std::min(eps_, 0.49), seed);
    tighten(table, da);
    QuerySideDecomposer& dec = get();
    for (const Decomposition* side : {static_cast<const Decomposition*>(&da), static_cast<const Decomposition*>(nullptr)}) {
      Decomposition left = side ? *side : whole(a, sa.diameter);
      const double room = two_w - left.certified_diameter;
      if (side) consider(best, left, whole(b, sb.diameter));
      if (side) consider(best, left, singletons(b));
      for (int g = dec.grid_size() - 1; g >= 1; --g) {
        if (dec.grid_value(g) > room) continue;
        Decomposition db = dec.restrict_to(b, g);
        tighten(table, db);
        if (left.certified_diameter + db.certified_diameter <= two_w) {
          consider(best, std::move(left), std::move(db));
          break;
        }
      }
    }
    return best;
  }

 private:
  const detail::EmitContext& ctx_;
  double eps_;
};

std::vector<char> emit_undirected(const detail::EmitContext& ctx,
                                  const std::vector<detail::Bucket>& buckets) {
  const double eps_gadget = ctx.weight / ctx.r - 1.0;
  std::map<std::int64_t, std::vector<std::size_t>> by_part;
  for (std::size_t i = 0; i < buckets.size(); ++i) by_part[buckets[i].part].push_back(i);
  std::vector<std::vector<std::size_t>> parts;
  for (auto& [part, list] : by_part) parts.push_back(std::move(list));

  std::vector<Plan> plans(buckets.size());
  const Planner planner(ctx, eps_gadget);
  parallel_for(static_cast<std::int64_t>(parts.size()), ctx.threads, [&](std::int64_t i) {
    const auto& list = parts[static_cast<std::size_t>(i)];
    // Query-side clusters are shared by every group of the part; they are
    // extracted from the union of its V sets.
    std::optional<QuerySideDecomposer> dec;
    auto get = [&]() -> QuerySideDecomposer& {
      if (!dec) {
        std::vector<Index> queries;
        for (std::size_t idx : list)
          queries.insert(queries.end(), buckets[idx].q_side.begin(), buckets[idx].q_side.end());
        std::sort(queries.begin(), queries.end());
        queries.erase(std::unique(queries.begin(), queries.end()), queries.end());
        const std::uint64_t seed = derive_seed(
            ctx.seed, {static_cast<std::uint64_t>(ctx.level), static_cast<std::uint64_t>(ctx.round),
                       static_cast<std::uint64_t>(buckets[list.front()].part), 0xdec});
        dec.emplace(*ctx.table, std::move(queries), ctx.r, std::min(eps_gadget, 0.49), seed);
      }
      return *dec;
    };
    for (std::size_t idx : list) plans[idx] = planner.plan(buckets[idx], get);
  });

  std::vector<char> accepted(buckets.size(), 0);
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (!plans[i].ok) {
      if (ctx.record) ++ctx.record->skipped_buckets;
      continue;
    }
    const GadgetSpec spec = make_gadget(std::move(plans[i].a), std::move(plans[i].b), ctx.r, eps_gadget);
    asymmetric_star_gadget(spec, *ctx.graph,
                           {ctx.level, ctx.round, buckets[i].part, buckets[i].group});
    accepted[i] = 1;
  }
  return accepted;
}

}  // namespace

BuildResult build_undirected(const PointSet& points, const BuildOptions& options) {
  detail::AssemblySpec spec;
  spec.mode = BuildMode::Undirected;
  spec.graph_mode = GraphMode::Undirected;
  spec.netted = true;
  spec.limit_at_weight = false;
  return detail::run_multiscale(points, options, spec, emit_undirected);
}

}  // namespace spanner
