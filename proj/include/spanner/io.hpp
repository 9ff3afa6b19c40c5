#pragma once

#include "spanner/decomposition.hpp"
#include "spanner/geometry.hpp"
#include "spanner/graph.hpp"
#include "spanner/lsh.hpp"
#include "spanner/spanner_directed.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace spanner {

// Text: "dim n" then n rows of dim reals. Binary: "SPTS", u32 dim, u32 n,
// n * dim f64, all little-endian. The reader sniffs the magic.
PointSet read_points(const std::string& path);
PointSet parse_points_text(std::istream& in);
void write_points_text(const std::string& path, const PointSet& points);
void write_points_binary(const std::string& path, const PointSet& points);

// One edge per line: from_kind from_id to_kind to_id weight directed_flag.
// Data ids are point positions, Steiner ids ordinals.
void write_graph(std::ostream& out, const SpannerGraph& graph);
void write_graph(const std::string& path, const SpannerGraph& graph);
SpannerGraph parse_graph(std::istream& in, Index data_count);
SpannerGraph read_graph(const std::string& path, Index data_count);

nlohmann::json to_json(const LshParams& params);
nlohmann::json to_json(const AuditReport& report, std::size_t max_listed = 20);
nlohmann::json to_json(const BuildReport& report);
nlohmann::json to_json(const Decomposition& d);

// FNV-1a over the file bytes, hex.
std::string file_digest(const std::string& path);

}  // namespace spanner
