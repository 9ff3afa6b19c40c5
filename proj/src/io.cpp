#include "spanner/io.hpp"

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace spanner {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path + ": " + std::strerror(errno));
  return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool is_blank(const std::string& s) {
  const auto pos = s.find_first_not_of(" \t\r");
  return pos == std::string::npos || s[pos] == '#';
}

double to_double(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) parse_fail(line, "not a number: '" + tok + "'");
  return v;
}

std::int64_t to_int(const std::string& tok, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) parse_fail(line, "not an integer: '" + tok + "'");
  return v;
}

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::uint32_t read_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ParseError("truncated binary header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

PointSet parse_points_binary(std::istream& in) {
  const std::uint32_t dim = read_u32(in);
  const std::uint32_t n = read_u32(in);
  if (dim == 0) throw ParseError("binary header: dimension must be positive");
  if (n == 0) throw ParseError("binary header: point count must be positive");
  Matrix coords(dim, n);
  for (Index j = 0; j < static_cast<Index>(n); ++j)
    for (Index i = 0; i < static_cast<Index>(dim); ++i) {
      std::array<unsigned char, 8> b{};
      if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw ParseError("truncated binary payload");
      std::uint64_t bits = 0;
      for (int k = 7; k >= 0; --k) bits = (bits << 8) | b[static_cast<std::size_t>(k)];
      double v;
      std::memcpy(&v, &bits, sizeof v);
      coords(i, j) = v;
    }
  return PointSet(std::move(coords));
}

}  // namespace

PointSet parse_points_text(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  Index dim = -1, n = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const auto tok = split(line);
    if (tok.size() != 2) parse_fail(lineno, "header must be 'dim n'");
    dim = to_int(tok[0], lineno);
    n = to_int(tok[1], lineno);
    if (dim <= 0) parse_fail(lineno, "dimension must be positive");
    if (n <= 0) parse_fail(lineno, "point count must be positive");
    break;
  }
  if (dim < 0) throw ParseError("line " + std::to_string(lineno) + ": missing header");
  Matrix coords(dim, n);
  Index row = 0;
  while (row < n && std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const auto tok = split(line);
    if (static_cast<Index>(tok.size()) != dim)
      parse_fail(lineno, "expected " + std::to_string(dim) + " values, got " + std::to_string(tok.size()));
    for (Index i = 0; i < dim; ++i) {
      const double v = to_double(tok[static_cast<std::size_t>(i)], lineno);
      if (!std::isfinite(v)) parse_fail(lineno, "non-finite coordinate");
      coords(i, row) = v;
    }
    ++row;
  }
  if (row < n) parse_fail(lineno, "expected " + std::to_string(n) + " points, got " + std::to_string(row));
  while (std::getline(in, line)) {
    ++lineno;
    if (!is_blank(line)) parse_fail(lineno, "trailing data after the last point");
  }
  return PointSet(std::move(coords));
}

PointSet read_points(const std::string& path) {
  auto in = open_in(path);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in.gcount() == 4 && std::memcmp(magic.data(), "SPTS", 4) == 0) return parse_points_binary(in);
  in.clear();
  in.seekg(0);
  return parse_points_text(in);
}

void write_points_text(const std::string& path, const PointSet& points) {
  auto out = open_out(path);
  out << points.dim() << ' ' << points.size() << '\n';
  for (Index j = 0; j < points.size(); ++j) {
    for (Index i = 0; i < points.dim(); ++i) out << (i ? " " : "") << fmt_double(points.coords()(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_points_binary(const std::string& path, const PointSet& points) {
  auto out = open_out(path);
  out.write("SPTS", 4);
  write_u32(out, static_cast<std::uint32_t>(points.dim()));
  write_u32(out, static_cast<std::uint32_t>(points.size()));
  for (Index j = 0; j < points.size(); ++j)
    for (Index i = 0; i < points.dim(); ++i) {
      std::uint64_t bits;
      const double v = points.coords()(i, j);
      std::memcpy(&bits, &v, sizeof bits);
      std::array<char, 8> b{};
      for (std::size_t k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      out.write(b.data(), 8);
    }
  if (!out) throw IoError("write failed: " + path);
}

void write_graph(std::ostream& out, const SpannerGraph& graph) {
  out << "# data " << graph.data_count() << " steiner " << graph.steiner_count() << " mode "
      << (graph.directed() ? "directed" : "undirected") << '\n';
  const char* flag = graph.directed() ? "1" : "0";
  auto node = [&](Index v) {
    return std::string(graph.kind(v) == NodeKind::Data ? "data " : "steiner ") +
           std::to_string(graph.local_id(v));
  };
  for (const Edge& e : graph.edges())
    out << node(e.from) << ' ' << node(e.to) << ' ' << fmt_double(e.weight) << ' ' << flag << '\n';
}

void write_graph(const std::string& path, const SpannerGraph& graph) {
  auto out = open_out(path);
  write_graph(out, graph);
  if (!out) throw IoError("write failed: " + path);
}

SpannerGraph parse_graph(std::istream& in, Index data_count) {
  struct Raw {
    bool from_steiner, to_steiner;
    Index from, to;
    double w;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t lineno = 0;
  int directed = -1;
  Index steiner = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) {
      // The header comment pins the Steiner count and mode of empty graphs.
      const auto tok = split(line);
      if (tok.size() == 7 && tok[0] == "#" && tok[1] == "data" && tok[3] == "steiner") {
        steiner = std::max<Index>(steiner, to_int(tok[4], lineno));
        directed = tok[6] == "directed" ? 1 : 0;
      }
      continue;
    }
    const auto tok = split(line);
    if (tok.size() != 6) parse_fail(lineno, "expected 6 fields");
    auto kind = [&](const std::string& k) {
      if (k == "data") return false;
      if (k == "steiner") return true;
      parse_fail(lineno, "unknown node kind '" + k + "'");
    };
    Raw r{kind(tok[0]), kind(tok[2]), to_int(tok[1], lineno), to_int(tok[3], lineno),
          to_double(tok[4], lineno)};
    const auto flag = to_int(tok[5], lineno);
    if (flag != 0 && flag != 1) parse_fail(lineno, "directed flag must be 0 or 1");
    if (directed >= 0 && directed != flag) parse_fail(lineno, "mixed directed flags");
    directed = static_cast<int>(flag);
    for (auto [st, id] : {std::pair{r.from_steiner, r.from}, std::pair{r.to_steiner, r.to}}) {
      if (id < 0) parse_fail(lineno, "negative node id");
      if (!st && id >= data_count) parse_fail(lineno, "data id beyond the point count");
      if (st) steiner = std::max(steiner, id + 1);
    }
    raw.push_back(r);
  }
  SpannerGraph g(data_count, directed == 0 ? GraphMode::Undirected : GraphMode::Directed);
  for (Index s = 0; s < steiner; ++s) g.add_steiner({0, 0, s, 0});
  for (const Raw& r : raw) {
    const Index from = r.from_steiner ? g.steiner_node(r.from) : r.from;
    const Index to = r.to_steiner ? g.steiner_node(r.to) : r.to;
    try {
      g.add_edge(from, to, r.w);
    } catch (const Error& e) {
      throw ParseError(std::string("invalid edge: ") + e.what());
    }
  }
  return g;
}

SpannerGraph read_graph(const std::string& path, Index data_count) {
  auto in = open_in(path);
  return parse_graph(in, data_count);
}

nlohmann::json to_json(const LshParams& p) {
  return {{"r", p.r}, {"eps", p.c - 1.0}, {"K", p.K}, {"T", p.T},
          {"eta_u", p.eta_u}, {"eta_q", p.eta_q}, {"seed", p.seed}};
}

nlohmann::json to_json(const AuditReport& r, std::size_t max_listed) {
  auto pairs = [&](const std::vector<PairRecord>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < std::min(v.size(), max_listed); ++i)
      out.push_back({{"p", v[i].p}, {"q", v[i].q}, {"distance", v[i].distance},
                     {"graph_distance", v[i].graph_distance}});
    return out;
  };
  return {{"pairs_checked", r.pairs_checked},
          {"shortcut_violations", r.shortcut_violations.size()},
          {"stretch_failures", r.stretch_failures.size()},
          {"unreachable", r.unreachable},
          {"bound", r.bound},
          {"within_bound", r.within_bound},
          {"fraction_within", r.fraction_within()},
          {"max_observed_stretch", r.max_observed_stretch},
          {"edges", r.edge_count},
          {"steiner", r.steiner_count},
          {"shortcut_examples", pairs(r.shortcut_violations)},
          {"stretch_failure_examples", pairs(r.stretch_failures)}};
}

nlohmann::json to_json(const BuildReport& r) {
  nlohmann::json scales = nlohmann::json::array();
  for (const ScaleRecord& s : r.scales)
    scales.push_back({{"level", s.level},
                      {"r", s.r},
                      {"weight", s.weight},
                      {"net_radius", s.net_radius},
                      {"net_size", s.net_size},
                      {"active", s.active},
                      {"band_pairs", s.band_pairs},
                      {"calibration_pairs", s.calibration},
                      {"instances", s.instances},
                      {"rounds", s.rounds},
                      {"m", s.m},
                      {"coverage", s.coverage},
                      {"scaled_radius", s.scaled_radius},
                      {"lsh", to_json(s.lsh)},
                      {"edges", s.edges},
                      {"steiner", s.steiner},
                      {"skipped_buckets", s.skipped_buckets}});
  return {{"mode", to_string(r.mode)},
          {"eps", r.budget.eps},
          {"eps_internal", r.budget.eps_internal},
          {"ladder_step", r.budget.ladder_step},
          {"weight_factor", r.budget.weight_factor},
          {"net_ratio", r.budget.net_ratio},
          {"n", r.n},
          {"unique_points", r.unique_points},
          {"m", r.m},
          {"k_safety", r.k_safety},
          {"threads", r.threads},
          {"max_parts", r.max_parts},
          {"sum_active", r.sum_active},
          {"edges", r.edges},
          {"steiner", r.steiner},
          {"wall_ms", r.wall_ms},
          {"scales", scales}};
}

nlohmann::json to_json(const Decomposition& d) {
  return {{"source", d.source}, {"certified_diameter", d.certified_diameter},
          {"cluster_diameter", d.cluster_diameter}, {"clusters", d.clusters}};
}

std::string file_digest(const std::string& path) {
  auto in = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf{};
  while (in.read(buf.data(), buf.size()) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

}  // namespace spanner
