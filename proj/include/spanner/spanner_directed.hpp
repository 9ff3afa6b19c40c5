#pragma once

#include "spanner/common.hpp"
#include "spanner/geometry.hpp"
#include "spanner/graph.hpp"
#include "spanner/lsh.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spanner {

struct OneScaleConfig {
  double r = 0.0;
  double eps = 0.0;
  Index m = 2;
  int rounds = 1;
  double k_safety = 1.0;
  std::uint64_t seed = 0;
  // Zero selects the defaults: FNS limit (1+eps) r, gadget weight (1+3 eps) r.
  double fns_limit = 0.0;
  double weight = 0.0;
  // A query joins V_ij only if some bucket point lies in (band_lower, band_upper].
  double band_lower = 0.0;
  double band_upper = 0.0;  // 0: no upper cut
  std::int64_t max_parts = 2048;
};

void validate(const OneScaleConfig& cfg);

// One-scale directed construction on a sphere instance; data nodes are instance columns.
SpannerGraph build_one_scale(const SphereInstance& inst, const OneScaleConfig& cfg, int threads = 1);

struct NetResult {
  std::vector<Index> net;     // ascending positions
  std::vector<Index> leader;  // position -> leader position, -1 outside the subset
};

// Greedy delta-net over `subset` in the given order.
NetResult delta_net(const PointSet& points, std::span<const Index> subset, double delta);
NetResult delta_net(const DistanceTable& table, std::span<const Index> subset, double delta,
                    std::span<const Index> seeds = {});

struct NetHierarchy {
  double base = 0.0;                       // b: radius of the finest net
  std::vector<double> radii;               // delta_i, increasing
  std::vector<double> scales;              // r_i
  std::vector<std::vector<Index>> nets;    // N_0 \supseteq N_1 \supseteq ...
  std::vector<std::vector<Index>> leaders; // nearest net point of N_i per point
  std::vector<std::vector<Index>> active;  // V_i
};

// Nets are built coarsest first so each finer net extends the coarser one.
NetHierarchy build_net_hierarchy(const DistanceTable& table, std::span<const double> scales,
                                 double net_ratio);

enum class BuildMode { Directed, DirectedNetted, Undirected };

std::string to_string(BuildMode mode);
BuildMode parse_build_mode(const std::string& text);

// How the end-to-end stretch 1+eps is split: a ladder step s, a gadget path
// factor g (gadget paths have length g r), and a net radius ratio nu with
// s (g + 2 (1+eps) nu) <= (1+eps) (1 - 2 nu).
struct StretchBudget {
  double eps = 0.0;
  double ladder_step = 1.0;
  double weight_factor = 1.0;
  double net_ratio = 0.0;
  double eps_internal = 0.0;  // (g - 1) / 3 for the directed gadget, g - 1 undirected
};

StretchBudget stretch_budget(double eps, BuildMode mode);

struct BuildOptions {
  double eps = 0.5;
  std::uint64_t seed = 0;
  Index m = 0;             // 0: chosen per round from {m0, 2 m0, ...}, m0 = max(2, ceil(n^(eps_int^2 / 4)))
  int rounds = 0;          // 0: run until the calibration coverage target is met
  double k_safety = 0.0;   // 0: ceil(ln^2 n)
  int threads = 0;
  std::int64_t max_parts = 2048;
  double coverage_target = 0.97;
  int max_rounds = 200;
  Index calibration_pairs = 256;
  // Optional per-point roles; empty means every point plays both roles.
  // Spanner paths run from query-side points to build-side points.
  std::vector<char> build_side;
  std::vector<char> query_side;
};

struct ScaleRecord {
  int level = 0;
  double r = 0.0;
  double weight = 0.0;
  double net_radius = 0.0;
  Index net_size = 0;
  Index active = 0;
  Index band_pairs = 0;
  Index calibration = 0;
  Index instances = 0;
  int rounds = 0;
  Index m = 0;  // group size used in the last round
  double coverage = 1.0;
  LshParams lsh;
  double scaled_radius = 0.0;
  Index edges = 0;
  Index steiner = 0;
  Index skipped_buckets = 0;
};

struct BuildReport {
  BuildMode mode = BuildMode::Directed;
  StretchBudget budget;
  Index n = 0;
  Index unique_points = 0;
  Index m = 0;
  double k_safety = 0.0;
  int threads = 1;
  std::int64_t max_parts = 0;
  std::vector<ScaleRecord> scales;
  Index sum_active = 0;
  Index edges = 0;
  Index steiner = 0;
  double wall_ms = 0.0;
};

struct BuildResult {
  SpannerGraph graph;
  BuildReport report;
};

BuildResult build_directed(const PointSet& points, const BuildOptions& options);
BuildResult build_directed_netted(const PointSet& points, const BuildOptions& options);
BuildResult build(const PointSet& points, BuildMode mode, const BuildOptions& options);

Index default_group_size(Index n, double eps_internal);
double default_k_safety(Index n);

}  // namespace spanner
