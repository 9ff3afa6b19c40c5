#pragma once

// Shared machinery of the multi-scale builders: one LSH/FNS round over a
// sphere instance, calibration coverage tracking, and the scale loop.

#include "spanner/geometry.hpp"
#include "spanner/graph.hpp"
#include "spanner/lsh.hpp"
#include "spanner/spanner_directed.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace spanner::detail {

// One non-empty (P_ij, V_ij) pair, in table positions.
struct Bucket {
  std::int64_t part = 0;
  std::int64_t group = 0;
  std::vector<Index> p_side;
  std::vector<Index> q_side;
};

struct ScaleProblem {
  const DistanceTable* table = nullptr;
  const Matrix* sphere = nullptr;
  std::vector<Index> nodes;  // instance column -> table position
  std::vector<char> build_ok;
  std::vector<char> query_ok;
  LshParams lsh;
  Index m = 2;
  double limit = 0.0;
  // A query joins V_ij only if some bucket point lies in (band_lower, band_upper].
  double band_lower = 0.0;
  double band_upper = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};



struct RoundStats {
  Index sum_q = 0;          // sum_j |Q_j|
  Index max_p_per_part = 0; // max_j sum_i |P_ij|
  Index query_points = 0;
};

// The randomness of one round that does not depend on m: the build-side
// permutation and the LSH part memberships.
struct RoundHash {
  std::vector<Index> order;  // build-side columns, shuffled
  PartMembership members;
  std::int64_t parts = 0;
};

RoundHash hash_round(const ScaleProblem& problem, int round, int threads);
std::vector<Bucket> form_buckets(const ScaleProblem& problem, const RoundHash& hash, Index m,
                                 int threads, RoundStats* stats);

std::vector<Bucket> run_round(const ScaleProblem& problem, int round, int threads, RoundStats* stats);

class CoverageTracker {
 public:
  CoverageTracker(std::vector<std::pair<Index, Index>> pairs, bool symmetric);

  void absorb(const std::vector<Bucket>& buckets, const std::vector<char>& accepted);
  // Pairs the buckets would newly cover, without recording them.
  Index count_new(const std::vector<Bucket>& buckets) const;
  Index covered() const { return covered_; }
  Index size() const { return static_cast<Index>(pairs_.size()); }
  double fraction() const {
    return pairs_.empty() ? 1.0 : static_cast<double>(covered_) / static_cast<double>(pairs_.size());
  }

 private:
  std::vector<char> scan(const std::vector<Bucket>& buckets, const std::vector<char>* accepted) const;

  std::vector<std::pair<Index, Index>> pairs_;  // (query, build)
  std::vector<char> done_;
  bool symmetric_;
  Index covered_ = 0;
};

struct EmitContext {
  SpannerGraph* graph = nullptr;  // over table positions
  const DistanceTable* table = nullptr;
  int level = 0;
  int round = 0;
  double r = 0.0;
  double weight = 0.0;
  double limit = 0.0;
  double eps_internal = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  ScaleRecord* record = nullptr;
};

// Emits gadgets for the round's buckets and reports which were accepted.
using Emitter = std::function<std::vector<char>(const EmitContext&, const std::vector<Bucket>&)>;

struct AssemblySpec {
  BuildMode mode = BuildMode::Directed;
  GraphMode graph_mode = GraphMode::Directed;
  bool netted = false;
  // FNS limit per scale: the gadget weight, or r itself (undirected).
  bool limit_at_weight = true;
};

BuildResult run_multiscale(const PointSet& points, const BuildOptions& options,
                           const AssemblySpec& spec, const Emitter& emit);

// Directed star: V -> s with weight 0, s -> P with weight w.
std::vector<char> emit_directed(const EmitContext& ctx, const std::vector<Bucket>& buckets);

}  // namespace spanner::detail
