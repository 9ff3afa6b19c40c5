#include "spanner/spanner_directed.hpp"
#include "spanner/spanner_undirected.hpp"

namespace spanner {

BuildResult build(const PointSet& points, BuildMode mode, const BuildOptions& options) {
  switch (mode) {
    case BuildMode::Directed:
      return build_directed(points, options);
    case BuildMode::DirectedNetted:
      return build_directed_netted(points, options);
    case BuildMode::Undirected:
      return build_undirected(points, options);
  }
  throw ConfigError("unknown build mode");
}

}  // namespace spanner
