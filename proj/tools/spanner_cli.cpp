#include "spanner/emd.hpp"
#include "spanner/io.hpp"
#include "spanner/parallel.hpp"
#include "spanner/spanner_undirected.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace {

using namespace spanner;
using json = nlohmann::json;

enum Exit { kOk = 0, kInvariant = 2, kUsage = 3, kIo = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw UsageError("--eps must lie in (0, 1)");
}

PointSet generate(const std::string& kind, Index n, Index d, std::uint64_t seed) {
  if (n < 1) throw UsageError("--n must be at least 1");
  if (d < 1) throw UsageError("--d must be at least 1");
  if (kind == "sphere") return random_sphere_dataset(n, d, seed);
  if (kind == "gaussian") return gaussian_dataset(n, d, seed);
  if (kind == "two-spheres") return two_spheres_dataset(n, d, seed);
  if (kind == "clustered") return clustered_dataset(n, d, seed);
  throw UsageError("unknown --kind '" + kind + "'");
}

struct BuildFlags {
  std::string mode = "directed";
  double eps = 0.5;
  std::uint64_t seed = 0;
  int rounds = 0;
  Index m = 0;
  double k_safety = 0.0;
  int threads = 0;
  std::int64_t max_parts = 2048;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "directed | directed-netted | undirected")->capture_default_str();
    app->add_option("--eps", eps, "stretch slack in (0,1)")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--rounds", rounds, "LSH rounds per scale (0: adaptive)")->capture_default_str();
    app->add_option("--m", m, "bucket group size (0: chosen per round)")->capture_default_str();
    app->add_option("--k-safety", k_safety, "LSH size multiplier (0: ceil(ln^2 n))")->capture_default_str();
    app->add_option("--threads", threads, "0: SPANNER_THREADS or hardware")->capture_default_str();
    app->add_option("--max-parts", max_parts, "cap on LSH parts per round")->capture_default_str();
  }

  BuildOptions options() const {
    check_eps(eps);
    if (rounds < 0 || m < 0 || k_safety < 0.0 || max_parts < 1) throw UsageError("negative build parameter");
    BuildOptions o;
    o.eps = eps;
    o.seed = seed;
    o.rounds = rounds;
    o.m = m;
    o.k_safety = k_safety;
    o.threads = threads;
    o.max_parts = max_parts;
    return o;
  }

  BuildMode build_mode() const {
    try {
      return parse_build_mode(mode);
    } catch (const Error&) {
      throw UsageError("unknown --mode '" + mode + "'");
    }
  }

  json to_json() const {
    return {{"mode", mode}, {"eps", eps}, {"seed", seed}, {"rounds", rounds}, {"m", m},
            {"k_safety", k_safety}, {"threads", threads}, {"max_parts", max_parts}};
  }

  static BuildFlags from_json(const json& j) {
    BuildFlags f;
    f.mode = j.at("mode").get<std::string>();
    f.eps = j.at("eps").get<double>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.rounds = j.at("rounds").get<int>();
    f.m = j.at("m").get<Index>();
    f.k_safety = j.at("k_safety").get<double>();
    f.threads = j.at("threads").get<int>();
    f.max_parts = j.at("max_parts").get<std::int64_t>();
    return f;
  }
};

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::vector<std::pair<Index, Index>> read_pairs(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::pair<Index, Index>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream s(line);
    Index p, q;
    if (!(s >> p >> q) || p < 0 || q < 0 || p >= n || q >= n || p == q)
      throw ParseError("line " + std::to_string(lineno) + ": expected two distinct point ids");
    out.emplace_back(p, q);
  }
  return out;
}

int cmd_gen(const std::string& kind, Index n, Index d, std::uint64_t seed, const std::string& out,
            bool binary) {
  const PointSet p = generate(kind, n, d, seed);
  if (binary) {
    write_points_binary(out, p);
  } else {
    write_points_text(out, p);
  }
  return kOk;
}

json build_and_write(const std::string& points_path, const BuildFlags& flags,
                     const std::string& graph_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const PointSet points = read_points(points_path);
  const BuildOptions options = flags.options();
  const BuildResult result = build(points, flags.build_mode(), options);
  write_graph(graph_path, result.graph);
  json manifest;
  manifest["command"] = "build";
  manifest["params"] = flags.to_json();
  manifest["params"]["threads_resolved"] = resolve_threads(flags.threads);
  manifest["input"] = {{"path", points_path}, {"digest", file_digest(points_path)}, {"n", points.size()},
                       {"dim", points.dim()}};
  manifest["output"] = {{"path", graph_path}, {"digest", file_digest(graph_path)}};
  manifest["edges"] = result.graph.edge_count();
  manifest["steiner"] = result.graph.steiner_count();
  manifest["report"] = to_json(result.report);
  manifest["wall_ms"] = ms_since(t0);
  return manifest;
}

int cmd_build(const std::string& points_path, const BuildFlags& flags, const std::string& graph_path,
              const std::string& manifest_path, Index audit_budget) {
  json manifest = build_and_write(points_path, flags, graph_path);
  int code = kOk;
  if (audit_budget > 0) {
    const PointSet points = read_points(points_path);
    const SpannerGraph g = read_graph(graph_path, points.size());
    const AuditReport rep =
        audit(g, points, default_pairs(points.size(), flags.seed, audit_budget), 1.0 + flags.eps,
              resolve_threads(flags.threads));
    manifest["audit"] = to_json(rep);
    if (!rep.shortcut_violations.empty()) code = kInvariant;
  }
  write_json(manifest_path, manifest);
  return code;
}

int cmd_audit(const std::string& points_path, const std::string& graph_path, double eps,
              Index pair_budget, const std::string& planted_path, std::uint64_t seed, int threads,
              const std::string& out) {
  check_eps(eps);
  if (pair_budget < 1) throw UsageError("--pair-budget must be positive");
  const PointSet points = read_points(points_path);
  const SpannerGraph g = read_graph(graph_path, points.size());
  std::vector<std::pair<Index, Index>> planted;
  if (!planted_path.empty()) planted = read_pairs(planted_path, points.size());
  const PairSample sample = default_pairs(points.size(), seed, pair_budget, planted);
  const AuditReport rep = audit(g, points, sample, 1.0 + eps, resolve_threads(threads));
  json j = to_json(rep);
  j["exhaustive"] = sample.exhaustive;
  write_json(out, j);
  return rep.shortcut_violations.empty() ? kOk : kInvariant;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

// Least-squares slope of log(edges) against log(n) over per-size means.
std::optional<double> loglog_slope(const std::map<Index, std::vector<double>>& edges_by_n) {
  if (edges_by_n.size() < 2) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(edges_by_n.size());
  for (const auto& [n, list] : edges_by_n) {
    double mean = 0;
    for (double e : list) mean += e;
    mean /= static_cast<double>(list.size());
    const double x = std::log(static_cast<double>(n)), y = std::log(mean);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

int cmd_bench(const std::string& sizes, const std::string& eps_list, BuildFlags flags,
              const std::string& seeds, const std::string& kind, Index d, Index pair_budget,
              const std::string& out_csv) {
  std::vector<Index> ns;
  std::vector<double> epss;
  std::vector<std::uint64_t> seed_list;
  try {
    for (const auto& s : split_list(sizes)) ns.push_back(std::stoll(s));
    for (const auto& s : split_list(eps_list)) epss.push_back(std::stod(s));
    for (const auto& s : split_list(seeds)) seed_list.push_back(std::stoull(s));
  } catch (const std::exception&) {
    throw UsageError("malformed list argument");
  }
  if (ns.empty() || epss.empty() || seed_list.empty()) throw UsageError("empty list argument");
  for (double e : epss) check_eps(e);
  const BuildMode mode = flags.build_mode();

  struct Row {
    Index n;
    double eps;
    std::uint64_t seed;
    Index edges, steiner;
    double build_ms;
    AuditReport audit;
    bool audited;
  };
  std::vector<Row> rows;
  std::map<double, std::map<Index, std::vector<double>>> edges_by;
  for (double eps : epss) {
    for (Index n : ns) {
      for (std::uint64_t seed : seed_list) {
        const PointSet points = generate(kind, n, d, seed);
        flags.eps = eps;
        flags.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        const BuildResult res = build(points, mode, flags.options());
        const double build_ms = ms_since(t0);
        Row row{n, eps, seed, res.graph.edge_count(), res.graph.steiner_count(), build_ms, {}, false};
        if (pair_budget > 0) {
          row.audit = audit(res.graph, points, default_pairs(n, seed, pair_budget), 1.0 + eps,
                            resolve_threads(flags.threads));
          row.audited = true;
        }
        edges_by[eps][n].push_back(static_cast<double>(row.edges));
        std::fprintf(stderr, "bench n=%lld eps=%g seed=%llu edges=%lld build_ms=%.0f\n",
                     static_cast<long long>(n), eps, static_cast<unsigned long long>(seed),
                     static_cast<long long>(row.edges), build_ms);
        rows.push_back(std::move(row));
      }
    }
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_csv.empty() && out_csv != "-") {
    file.open(out_csv);
    if (!file) throw IoError("cannot write " + out_csv);
    out = &file;
  }
  *out << "n,eps,mode,kind,dim,seed,edges,steiner,build_ms,pairs_checked,fraction_within,"
          "max_stretch,shortcuts,slope\n";
  int code = kOk;
  for (const Row& r : rows) {
    const auto slope = loglog_slope(edges_by[r.eps]);
    *out << r.n << ',' << r.eps << ',' << to_string(mode) << ',' << kind << ',' << d << ',' << r.seed
         << ',' << r.edges << ',' << r.steiner << ',' << r.build_ms << ',';
    if (r.audited) {
      *out << r.audit.pairs_checked << ',' << r.audit.fraction_within() << ','
           << r.audit.max_observed_stretch << ',' << r.audit.shortcut_violations.size();
      if (!r.audit.shortcut_violations.empty()) code = kInvariant;
    } else {
      *out << ",,,";
    }
    *out << ',';
    if (slope) *out << *slope;
    *out << '\n';
  }
  return code;
}

int cmd_emd(const std::string& a_path, const std::string& b_path, double eps, std::uint64_t seed,
            bool exact_check, const std::string& orientation, int threads, const std::string& out) {
  check_eps(eps);
  const PointSet a = read_points(a_path);
  const PointSet b = read_points(b_path);
  if (a.size() != b.size()) throw UsageError("point sets must have equal size");
  EmdOptions o;
  o.eps = eps;
  o.seed = seed;
  o.threads = threads;
  try {
    o.orientation = parse_orientation(orientation);
  } catch (const Error&) {
    throw UsageError("unknown --orientation '" + orientation + "'");
  }
  const EmdResult res = emd_spanner(a, b, o);
  json j;
  j["spanner"] = res.cost;
  j["edges"] = res.graph ? res.graph->edge_count() : 0;
  j["steiner"] = res.graph ? res.graph->steiner_count() : 0;
  j["prematched"] = res.prematched;
  j["orientation"] = to_string(o.orientation);
  j["wall_ms"] = res.wall_ms;
  int code = kOk;
  if (exact_check) {
    const Assignment ex = emd_exact(a, b);
    j["exact"] = ex.cost;
    j["ratio"] = ex.cost > 0.0 ? res.cost / ex.cost : 1.0;
    if (res.cost < ex.cost * (1.0 - 1e-9)) code = kInvariant;
  }
  write_json(out, j);
  return code;
}

int cmd_replay(const std::string& manifest_path, const std::string& graph_out) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  BuildFlags flags;
  std::string points_path, input_digest, output_digest;
  try {
    flags = BuildFlags::from_json(m.at("params"));
    points_path = m.at("input").at("path").get<std::string>();
    input_digest = m.at("input").at("digest").get<std::string>();
    output_digest = m.at("output").at("digest").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (file_digest(points_path) != input_digest) {
    std::cerr << "replay: input digest differs from the manifest\n";
    return kInvariant;
  }
  const std::string target = graph_out.empty() ? manifest_path + ".replay.edges" : graph_out;
  const json again = build_and_write(points_path, flags, target);
  const bool same = again["output"]["digest"] == output_digest;
  std::cout << json{{"reproduced", same}, {"digest", again["output"]["digest"]}, {"expected", output_digest},
                    {"graph", target}}
                   .dump(2)
            << '\n';
  return same ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steiner spanners for Euclidean point sets"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate a point set");
  std::string kind = "sphere", out;
  Index n = 0, d = 0;
  std::uint64_t seed = 0;
  bool binary = false;
  gen->add_option("--kind", kind, "sphere | gaussian | two-spheres | clustered")->capture_default_str();
  gen->add_option("--n", n)->required();
  gen->add_option("--d", d)->required();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out)->required();
  gen->add_flag("--binary", binary, "write the SPTS binary format");

  auto* bld = app.add_subcommand("build", "build a spanner");
  BuildFlags flags;
  std::string points_path, graph_path, manifest_path;
  Index audit_budget = 0;
  flags.add(bld);
  bld->add_option("--points", points_path)->required();
  bld->add_option("--out-graph", graph_path)->required();
  bld->add_option("--out-manifest", manifest_path, "'-' for stdout")->capture_default_str();
  bld->add_option("--audit", audit_budget, "audit with this pair budget after building");

  auto* aud = app.add_subcommand("audit", "audit a spanner against its point set");
  double eps = 0.5;
  Index pair_budget = 100'000;
  std::string planted, report_path;
  int threads = 0;
  aud->add_option("--points", points_path)->required();
  aud->add_option("--graph", graph_path)->required();
  aud->add_option("--eps", eps)->capture_default_str();
  aud->add_option("--pair-budget", pair_budget)->capture_default_str();
  aud->add_option("--planted", planted, "file of 'p q' lines always audited");
  aud->add_option("--seed", seed)->capture_default_str();
  aud->add_option("--threads", threads)->capture_default_str();
  aud->add_option("--out", report_path, "'-' for stdout");

  auto* bench = app.add_subcommand("bench", "size and stretch trend over generated data");
  std::string sizes = "128,256,512", eps_list = "0.5", seeds = "1";
  BuildFlags bench_flags;
  std::string csv;
  Index bench_d = 64, bench_budget = 0;
  bench_flags.add(bench);
  bench->add_option("--sizes", sizes)->capture_default_str();
  bench->add_option("--eps-list", eps_list)->capture_default_str();
  bench->add_option("--seeds", seeds)->capture_default_str();
  bench->add_option("--kind", kind)->capture_default_str();
  bench->add_option("--d", bench_d)->capture_default_str();
  bench->add_option("--pair-budget", bench_budget, "audit budget per build (0: no audit)")->capture_default_str();
  bench->add_option("--out", csv, "CSV path, '-' for stdout");

  auto* emd = app.add_subcommand("emd", "earth-mover distance through the spanner");
  std::string a_path, b_path, orientation = "query-to-build";
  bool exact_check = false;
  double emd_eps = 0.25;
  emd->add_option("--a", a_path)->required();
  emd->add_option("--b", b_path)->required();
  emd->add_option("--eps", emd_eps)->capture_default_str();
  emd->add_option("--seed", seed)->capture_default_str();
  emd->add_option("--orientation", orientation, "query-to-build | symmetric")->capture_default_str();
  emd->add_option("--threads", threads)->capture_default_str();
  emd->add_flag("--exact-check", exact_check, "also solve the exact assignment");
  emd->add_option("--out", report_path, "'-' for stdout");

  auto* rep = app.add_subcommand("replay", "rebuild from a manifest and compare digests");
  std::string manifest_in, replay_out;
  rep->add_option("--manifest", manifest_in)->required();
  rep->add_option("--out-graph", replay_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(kind, n, d, seed, out, binary);
    if (*bld) return cmd_build(points_path, flags, graph_path, manifest_path, audit_budget);
    if (*aud) return cmd_audit(points_path, graph_path, eps, pair_budget, planted, seed, threads, report_path);
    if (*bench) return cmd_bench(sizes, eps_list, bench_flags, seeds, kind, bench_d, bench_budget, csv);
    if (*emd) return cmd_emd(a_path, b_path, emd_eps, seed, exact_check, orientation, threads, report_path);
    if (*rep) return cmd_replay(manifest_in, replay_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
