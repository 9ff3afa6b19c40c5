#pragma once

#include "spanner/common.hpp"
#include "spanner/geometry.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spanner {

// Positions refer to the DistanceTable's point set throughout.
using Cluster = std::vector<Index>;

struct Decomposition {
  std::vector<Cluster> clusters;
  std::vector<double> cluster_diameter;  // certified bound per cluster
  double certified_diameter = 0.0;       // max over clusters
  std::string source;
};

double avg_squared_exact(const DistanceTable& table, std::span<const Index> set);
double avg_exact(const DistanceTable& table, std::span<const Index> set);
double exact_diameter(const DistanceTable& table, std::span<const Index> set);

// Upper estimate of avg(A): avg <= estimate <= avg + eps * dia_ub(A) with
// high probability, where dia_ub is twice the double-sweep length.
double avg_estimate(const DistanceTable& table, std::span<const Index> set, double eps,
                    std::uint64_t seed);
Index avg_sample_count(Index n, double eps);

bool negative_type_check(const DistanceTable& table, std::span<const Index> a,
                         std::span<const Index> b, double r);

struct ExtractionConfig {
  double a = 0.0;
  double eps = 0.1;
  double c = 0.05;
  double t = 0.0;
  double time_budget = 4.0;  // multiplier on the expected n^t / p1 hash draws
};

void validate(const ExtractionConfig& cfg);

// Randomized cluster extraction. Clusters are pairwise (1+eps) a-close; throws ExtractionStalled
// when no bucket passes the close/far count test within the draw budget.
std::vector<Cluster> extract_clusters(const DistanceTable& table, std::span<const Index> set,
                                      const ExtractionConfig& cfg, std::uint64_t seed);

// t solving n^2 eps = n^(2-t), and the fallback eps c / 2 when eps c <= t.
double decomposition_t(Index n, double eps);
double effective_t(double eps, double c, double t);

Decomposition low_diameter_decomposition(const DistanceTable& table, std::span<const Index> set,
                                         double eps, std::uint64_t seed);

// Query-side decomposition of one Q_j: per grid value r0 in {0, eps r, ..., 2r}
// the clusters extracted from Q_j at threshold r0 (computed on first use).
class QuerySideDecomposer {
 public:
  QuerySideDecomposer(const DistanceTable& table, std::vector<Index> q_set, double r, double eps,
                      std::uint64_t seed);

  int grid_size() const { return grid_; }
  double grid_value(int g) const { return g * eps_ * r_; }

  // Clusters of Q_j at grid point g (pairwise within (1+eps) r0 each) and
  // the remainder that could not be extracted.
  struct Layer {
    std::vector<Cluster> clusters;
    std::vector<Index> remainder;
    std::vector<std::int32_t> cluster_of;  // per table position, -1 if none
    double diameter = 0.0;
  };
  const Layer& layer(int g);

  Decomposition restrict_to(std::span<const Index> v, int g);
  // Smallest grid r0 with r0 >= (1+eps) avg(remainder(r0) ∩ V).
  int select(std::span<const Index> v);

 private:
  const DistanceTable* table_;
  std::vector<Index> q_;
  double r_;
  double eps_;
  std::uint64_t seed_;
  int grid_;
  std::map<int, Layer> layers_;
};

std::vector<Decomposition> decompose_query_side(const DistanceTable& table,
                                                std::span<const Index> q_set,
                                                const std::vector<std::vector<Index>>& v_sets,
                                                double r, double eps, std::uint64_t seed);

}  // namespace spanner
