#include "scale_engine.hpp"

#include "spanner/parallel.hpp"
#include "spanner/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace spanner::detail {

RoundHash hash_round(const ScaleProblem& problem, int round, int threads) {
  const Index k = problem.sphere->cols();
  const auto ur = static_cast<std::uint64_t>(round);
  RoundHash hash;
  // A seeded random partition of the build side, chunked
  // into groups of m by form_buckets.
  for (Index c = 0; c < k; ++c) {
    if (problem.build_ok[static_cast<std::size_t>(c)]) hash.order.push_back(c);
  }
  CounterRng perm_rng(derive_seed(problem.seed, {ur, 1}));
  shuffle(hash.order, perm_rng);
  LshParams lsh = problem.lsh;
  lsh.seed = derive_seed(problem.seed, {ur, 2});
  hash.members = part_members_both(*problem.sphere, lsh, threads);
  hash.parts = lsh.T;
  return hash;
}

std::vector<Bucket> form_buckets(const ScaleProblem& problem, const RoundHash& hash, Index m,
                                 int threads, RoundStats* stats) {
  const DistanceTable& table = *problem.table;
  const Index k = problem.sphere->cols();
  std::vector<std::int64_t> group_of(static_cast<std::size_t>(k), -1);
  for (std::size_t pos = 0; pos < hash.order.size(); ++pos) {
    group_of[static_cast<std::size_t>(hash.order[pos])] = static_cast<std::int64_t>(pos) / m;
  }

  std::vector<std::vector<Bucket>> per_part(static_cast<std::size_t>(hash.parts));
  std::vector<Index> q_sizes(static_cast<std::size_t>(hash.parts), 0);
  std::vector<Index> p_sizes(static_cast<std::size_t>(hash.parts), 0);
  parallel_for(hash.parts, threads, [&](std::int64_t j) {
    const auto& a_all = hash.members.a[static_cast<std::size_t>(j)];
    const auto& b_all = hash.members.b[static_cast<std::size_t>(j)];
    std::vector<std::pair<std::int64_t, Index>> a;  // (group, column)
    for (Index c : a_all) {
      const auto g = group_of[static_cast<std::size_t>(c)];
      if (g >= 0) a.emplace_back(g, c);
    }
    std::vector<Index> q;
    for (Index c : b_all) {
      if (problem.query_ok[static_cast<std::size_t>(c)]) q.push_back(c);
    }
    q_sizes[static_cast<std::size_t>(j)] = static_cast<Index>(q.size());
    p_sizes[static_cast<std::size_t>(j)] = static_cast<Index>(a.size());
    if (a.empty() || q.empty()) return;
    std::sort(a.begin(), a.end());
    auto& out = per_part[static_cast<std::size_t>(j)];
    for (std::size_t lo = 0; lo < a.size();) {
      std::size_t hi = lo;
      while (hi < a.size() && a[hi].first == a[lo].first) ++hi;
      Bucket bucket;
      bucket.part = j;
      bucket.group = a[lo].first;
      for (std::size_t t = lo; t < hi; ++t) {
        bucket.p_side.push_back(problem.nodes[static_cast<std::size_t>(a[t].second)]);
      }
      // FNS acceptance (exact furthest neighbor over P_ij), then usefulness.
      for (Index c : q) {
        const Index qn = problem.nodes[static_cast<std::size_t>(c)];
        double furthest = 0.0;
        bool useful = false;
        for (Index p : bucket.p_side) {
          const double d = table(qn, p);
          furthest = std::max(furthest, d);
          if (furthest > problem.limit) break;
          useful = useful || (d > problem.band_lower && d <= problem.band_upper);
        }
        if (furthest <= problem.limit && useful) bucket.q_side.push_back(qn);
      }
      if (!bucket.q_side.empty()) out.push_back(std::move(bucket));
      lo = hi;
    }
  });

  std::vector<Bucket> buckets;
  for (auto& list : per_part) {
    for (auto& b : list) buckets.push_back(std::move(b));
  }
  std::stable_sort(buckets.begin(), buckets.end(), [](const Bucket& x, const Bucket& y) {
    return x.group != y.group ? x.group < y.group : x.part < y.part;
  });

  if (stats != nullptr) {
    Index query_points = 0;
    for (char ok : problem.query_ok) query_points += ok ? 1 : 0;
    stats->query_points = query_points;
    stats->sum_q = std::accumulate(q_sizes.begin(), q_sizes.end(), Index{0});
    stats->max_p_per_part = p_sizes.empty() ? 0 : *std::max_element(p_sizes.begin(), p_sizes.end());
    // Observation 3.5: for each part, a point lies in P_ij for at most one i.
    if (stats->max_p_per_part > k) throw InvariantViolation("a part holds more than n build points");
  }
  return buckets;
}

std::vector<Bucket> run_round(const ScaleProblem& problem, int round, int threads, RoundStats* stats) {
  return form_buckets(problem, hash_round(problem, round, threads), problem.m, threads, stats);
}

CoverageTracker::CoverageTracker(std::vector<std::pair<Index, Index>> pairs, bool symmetric)
    : pairs_(std::move(pairs)), done_(pairs_.size(), 0), symmetric_(symmetric) {}

std::vector<char> CoverageTracker::scan(const std::vector<Bucket>& buckets,
                                        const std::vector<char>* accepted) const {
  std::vector<char> hit(pairs_.size(), 0);
  if (covered_ == size()) return hit;
  // query node -> buckets that accepted it
  std::vector<std::pair<Index, std::size_t>> index;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (accepted != nullptr && !(*accepted)[b]) continue;
    for (Index q : buckets[b].q_side) index.emplace_back(q, b);
  }
  std::sort(index.begin(), index.end());
  auto covers = [&](Index q, Index p) {
    auto it = std::lower_bound(index.begin(), index.end(), std::pair<Index, std::size_t>{q, 0});
    for (; it != index.end() && it->first == q; ++it) {
      const auto& side = buckets[it->second].p_side;
      if (std::find(side.begin(), side.end(), p) != side.end()) return true;
    }
    return false;
  };
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    if (done_[k]) continue;
    const auto [q, p] = pairs_[k];
    if (covers(q, p) || (symmetric_ && covers(p, q))) hit[k] = 1;
  }
  return hit;
}

void CoverageTracker::absorb(const std::vector<Bucket>& buckets, const std::vector<char>& accepted) {
  const auto hit = scan(buckets, &accepted);
  for (std::size_t k = 0; k < hit.size(); ++k) {
    if (hit[k]) {
      done_[k] = 1;
      ++covered_;
    }
  }
}

Index CoverageTracker::count_new(const std::vector<Bucket>& buckets) const {
  const auto hit = scan(buckets, nullptr);
  return static_cast<Index>(std::count(hit.begin(), hit.end(), 1));
}

std::vector<char> emit_directed(const EmitContext& ctx, const std::vector<Bucket>& buckets) {
  SpannerGraph& g = *ctx.graph;
  for (const Bucket& b : buckets) {
    for (Index q : b.q_side) {
      for (Index p : b.p_side) {
        if ((*ctx.table)(q, p) > ctx.weight) {
          throw InvariantViolation("directed gadget would shortcut a pair");
        }
      }
    }
    const Index s = g.add_steiner({ctx.level, ctx.round, b.part, b.group});
    for (Index q : b.q_side) g.add_edge(q, s, 0.0);
    for (Index p : b.p_side) g.add_edge(s, p, ctx.weight);
  }
  return std::vector<char>(buckets.size(), 1);
}

namespace {

struct Band {
  std::vector<std::pair<Index, Index>> sample;  // (query, build)
  Index count = 0;
  std::vector<Index> active;
};

// Pairs among `nodes` with lower < D <= upper, respecting roles; a uniform
// reservoir sample of them, and the endpoints that occur.
Band collect_band(const DistanceTable& table, const std::vector<Index>& nodes,
                  const std::vector<char>& build_ok, const std::vector<char>& query_ok,
                  double lower, double upper, bool symmetric, Index sample_size,
                  std::uint64_t seed) {
  Band band;
  CounterRng rng(seed);
  std::vector<char> touched(static_cast<std::size_t>(table.size()), 0);
  for (Index q : nodes) {
    if (!query_ok[static_cast<std::size_t>(q)]) continue;
    for (Index p : nodes) {
      if (p == q || !build_ok[static_cast<std::size_t>(p)]) continue;
      if (symmetric && p < q) continue;
      const double d = table(q, p);
      if (!(d > lower && d <= upper)) continue;
      ++band.count;
      touched[static_cast<std::size_t>(q)] = touched[static_cast<std::size_t>(p)] = 1;
      if (static_cast<Index>(band.sample.size()) < sample_size) {
        band.sample.emplace_back(q, p);
      } else {
        const auto slot = rng.below(static_cast<std::uint64_t>(band.count));
        if (slot < static_cast<std::uint64_t>(sample_size)) band.sample[slot] = {q, p};
      }
    }
  }
  for (Index v : nodes) {
    if (touched[static_cast<std::size_t>(v)]) band.active.push_back(v);
  }
  return band;
}

Index bucket_edges(const std::vector<Bucket>& buckets) {
  Index e = 0;
  for (const Bucket& b : buckets) e += static_cast<Index>(b.p_side.size() + b.q_side.size());
  return e;
}

// Chooses the group size for this round among powers of two by newly covered
// calibration pairs per emitted edge; ties keep the smaller m.
std::vector<Bucket> pick_group_size(const ScaleProblem& problem, const RoundHash& hash,
                                    const CoverageTracker& tracker, int threads, RoundStats* stats,
                                    Index* chosen) {
  const auto build_count = static_cast<Index>(hash.order.size());
  std::vector<Bucket> best;
  double best_score = -1.0;
  Index best_m = problem.m;
  for (Index m = problem.m; ; m *= 2) {
    RoundStats local;
    auto buckets = form_buckets(problem, hash, m, threads, &local);
    const Index fresh = tracker.count_new(buckets);
    const Index edges = bucket_edges(buckets);
    const double score = edges > 0 ? static_cast<double>(fresh) / static_cast<double>(edges) : 0.0;
    if (score > best_score) {
      best_score = score;
      best = std::move(buckets);
      best_m = m;
      *stats = local;
    }
    if (m >= build_count) break;
  }
  *chosen = best_m;
  return best;
}

}  // namespace

BuildResult run_multiscale(const PointSet& points, const BuildOptions& options,
                           const AssemblySpec& spec, const Emitter& emit) {
  const auto start = std::chrono::steady_clock::now();
  if (!(options.eps > 0.0 && options.eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  const Index n = points.size();
  if (!options.build_side.empty() && static_cast<Index>(options.build_side.size()) != n) {
    throw ConfigError("build-side mask has the wrong length");
  }
  if (!options.query_side.empty() && static_cast<Index>(options.query_side.size()) != n) {
    throw ConfigError("query-side mask has the wrong length");
  }
  const StretchBudget budget = stretch_budget(options.eps, spec.mode);
  const int threads = resolve_threads(options.threads);

  BuildReport report;
  report.mode = spec.mode;
  report.budget = budget;
  report.n = n;
  report.threads = threads;
  report.max_parts = options.max_parts;

  if (n == 1) {
    report.unique_points = 1;
    return {SpannerGraph(1, spec.graph_mode), report};
  }

  const Deduplicated dedup = deduplicate(points);
  const PointSet& unique = dedup.points;
  const Index nu = unique.size();
  if (nu < 2) throw AspectUndefined("all points are identical");
  report.unique_points = nu;

  std::vector<char> build_ok(static_cast<std::size_t>(nu), 1);
  std::vector<char> query_ok(static_cast<std::size_t>(nu), 1);
  for (Index u = 0; u < nu; ++u) {
    const auto src = static_cast<std::size_t>(dedup.first_position[static_cast<std::size_t>(u)]);
    if (!options.build_side.empty()) build_ok[static_cast<std::size_t>(u)] = options.build_side[src];
    if (!options.query_side.empty()) query_ok[static_cast<std::size_t>(u)] = options.query_side[src];
  }

  const DistanceTable table(unique, threads);
  const DistanceExtremes ext = distance_extremes(unique, options.seed);
  const ScaleLadder ladder = scale_ladder(ext.min_nonzero, ext.max, budget.ladder_step - 1.0);

  const Index m = options.m > 0 ? options.m : default_group_size(nu, budget.eps_internal);
  const double k_safety = options.k_safety > 0.0 ? options.k_safety : default_k_safety(nu);
  if (m < 1) throw ConfigError("group size m must be >= 1");
  if (k_safety < 1.0) throw ConfigError("K_safety must be >= 1");
  report.m = m;
  report.k_safety = k_safety;
  const auto lsh_n = std::max<Index>(2, static_cast<Index>(std::llround(k_safety * static_cast<double>(m))));

  NetHierarchy hierarchy;
  if (spec.netted) hierarchy = build_net_hierarchy(table, ladder.levels, budget.net_ratio);

  std::vector<Index> all(static_cast<std::size_t>(nu));
  std::iota(all.begin(), all.end(), Index{0});

  SpannerGraph local(nu, spec.graph_mode);
  const bool symmetric = spec.graph_mode == GraphMode::Undirected;

  for (std::size_t level = 0; level < ladder.levels.size(); ++level) {
    const double r = ladder.levels[level];
    const double r_lo = level > 0 ? ladder.levels[level - 1] : 0.0;
    ScaleRecord rec;
    rec.level = static_cast<int>(level);
    rec.r = r;
    rec.weight = budget.weight_factor * r;

    const std::vector<Index>* nodes = &all;
    double lower = r_lo;
    if (spec.netted) {
      nodes = &hierarchy.nets[level];
      rec.net_radius = hierarchy.radii[level];
      const double prev = level > 0 ? hierarchy.radii[level - 1] : 0.0;
      lower = std::max(0.0, r_lo - 2.0 * prev - 2.0 * hierarchy.radii[level]);
      if (level == 0) lower = 0.0;
    }
    rec.net_size = static_cast<Index>(nodes->size());

    const std::uint64_t level_seed = derive_seed(options.seed, {0x1e7e1, level});
    Band band = collect_band(table, *nodes, build_ok, query_ok, lower, r, symmetric,
                             options.calibration_pairs, derive_seed(level_seed, {0xca11b}));
    rec.band_pairs = band.count;
    rec.calibration = static_cast<Index>(band.sample.size());
    const std::vector<Index>& active = spec.netted ? hierarchy.active[level] : band.active;
    rec.active = static_cast<Index>(active.size());
    if (band.count == 0 || active.size() < 2) {
      rec.rounds = 0;
      report.scales.push_back(rec);
      continue;
    }
    report.sum_active += rec.active;

    const Index edges_before = local.edge_count();
    const Index steiner_before = local.steiner_count();
    const auto instances = to_sphere_instances(unique, active, r, options.eps, level_seed);
    rec.instances = static_cast<Index>(instances.size());
    double covered_weighted = 0.0;
    Index calibrated = 0;

    for (const SphereInstance& inst : instances) {
      if (inst.points.cols() < 2) continue;
      std::vector<char> in_instance(static_cast<std::size_t>(nu), 0);
      for (Index v : inst.origin) in_instance[static_cast<std::size_t>(v)] = 1;
      std::vector<std::pair<Index, Index>> calib;
      for (const auto& pr : band.sample) {
        if (in_instance[static_cast<std::size_t>(pr.first)] && in_instance[static_cast<std::size_t>(pr.second)]) {
          calib.push_back(pr);
        }
      }
      if (calib.empty() && options.rounds == 0) continue;

      ScaleProblem problem;
      problem.table = &table;
      problem.sphere = &inst.points;
      problem.nodes = inst.origin;
      for (Index v : inst.origin) {
        problem.build_ok.push_back(build_ok[static_cast<std::size_t>(v)]);
        problem.query_ok.push_back(query_ok[static_cast<std::size_t>(v)]);
      }
      const double r_lsh = std::min(inst.scaled_radius * (1.0 + options.eps / 10.0), 1.0);
      problem.lsh = solve_params_budgeted(r_lsh, budget.eps_internal, lsh_n, options.max_parts);
      problem.m = m;
      problem.limit = spec.limit_at_weight ? rec.weight : r;
      problem.band_lower = lower;
      problem.band_upper = r;
      problem.seed = derive_seed(level_seed, {static_cast<std::uint64_t>(inst.cell_id)});
      rec.lsh = problem.lsh;
      rec.scaled_radius = inst.scaled_radius;

      CoverageTracker tracker(std::move(calib), symmetric);
      EmitContext ctx;
      ctx.graph = &local;
      ctx.table = &table;
      ctx.level = static_cast<int>(level);
      ctx.r = r;
      ctx.weight = rec.weight;
      ctx.limit = problem.limit;
      ctx.eps_internal = budget.eps_internal;
      ctx.threads = threads;
      ctx.record = &rec;

      int round = 0;
      for (;; ++round) {
        if (options.rounds > 0 ? round >= options.rounds
                               : (tracker.fraction() >= options.coverage_target || round >= options.max_rounds)) {
          break;
        }
        RoundStats stats;
        const RoundHash hash = hash_round(problem, round, threads);
        std::vector<Bucket> buckets;
        if (options.m > 0) {
          buckets = form_buckets(problem, hash, m, threads, &stats);
        } else {
          buckets = pick_group_size(problem, hash, tracker, threads, &stats, &rec.m);
        }
        ctx.round = round;
        ctx.seed = derive_seed(problem.seed, {static_cast<std::uint64_t>(round), 3});
        const auto accepted = emit(ctx, buckets);
        tracker.absorb(buckets, accepted);
      }
      rec.rounds = std::max(rec.rounds, round);
      covered_weighted += tracker.fraction() * static_cast<double>(tracker.size());
      calibrated += tracker.size();
    }
    rec.coverage = calibrated > 0 ? covered_weighted / static_cast<double>(calibrated) : 1.0;
    rec.edges = local.edge_count() - edges_before;
    rec.steiner = local.steiner_count() - steiner_before;
    report.scales.push_back(rec);
  }

  // Lift to the original point positions; duplicates hang off their
  // representative with zero-weight edges.
  SpannerGraph graph(n, spec.graph_mode);
  for (const SteinerTag& tag : local.steiner_tags()) graph.add_steiner(tag);
  auto lift = [&](Index node) {
    return node < nu ? dedup.first_position[static_cast<std::size_t>(node)] : node - nu + n;
  };
  for (const Edge& e : local.edges()) graph.add_edge(lift(e.from), lift(e.to), e.weight);
  for (Index i = 0; i < n; ++i) {
    const Index rep = dedup.first_position[static_cast<std::size_t>(dedup.representative[static_cast<std::size_t>(i)])];
    if (rep == i) continue;
    graph.add_edge(i, rep, 0.0);
    if (spec.graph_mode == GraphMode::Directed) graph.add_edge(rep, i, 0.0);
  }

  report.edges = graph.edge_count();
  report.steiner = graph.steiner_count();
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {std::move(graph), std::move(report)};
}

}  // namespace spanner::detail
