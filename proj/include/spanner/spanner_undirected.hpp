#pragma once

#include "spanner/decomposition.hpp"
#include "spanner/graph.hpp"
#include "spanner/spanner_directed.hpp"

#include <utility>

namespace spanner {

// Asymmetric star gadget between A (build side) and B (query side): one
// Steiner node per (A-part, B-part) pair.
struct GadgetSpec {
  Decomposition a_parts;  // diameter <= x
  Decomposition b_parts;  // diameter <= y
  double r = 0.0;
  double eps = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
};

// Even split of the slack 2(1+eps)r - x - y.
std::pair<double, double> choose_x0_y0(double x, double y, double r, double eps);

GadgetSpec make_gadget(Decomposition a_parts, Decomposition b_parts, double r, double eps);

struct GadgetOutput {
  Index steiner = 0;
  Index edges = 0;
};

// Gadget edge count |A| l + k |B| without building it.
Index gadget_edge_count(const Decomposition& a_parts, const Decomposition& b_parts);

// Node ids in the decompositions are graph data nodes. Steiner tags take
// `base` with sub = base.sub * k l + pair index.
GadgetOutput asymmetric_star_gadget(const GadgetSpec& spec, SpannerGraph& graph, SteinerTag base);

BuildResult build_undirected(const PointSet& points, const BuildOptions& options);

}  // namespace spanner
