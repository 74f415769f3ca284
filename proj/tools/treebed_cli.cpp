// treebed: command line front end for the embedding library.
// Exit codes: 0 success, 1 a check failed, 2 usage or input/output error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "treebed/treebed.hpp"

using namespace treebed;

namespace {

constexpr int kOk = 0, kCheckFailed = 1, kUsage = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Runs `body` on the named output, or stdout for "" and "-".
template <class F>
void emit(const std::string& path, F body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  body(out);
  if (!out) throw IoError("write failed for " + path);
}

// Parses with the file name attached to line-numbered errors.
template <class T, class F>
T parse_file(const std::string& path, F read) {
  std::istringstream in(slurp(path));
  try {
    return read(in);
  } catch (const ParseError& e) {
    throw IoError(path + ": " + e.what());
  }
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

struct Input {
  std::optional<WeightedGraph> graph;
  MetricSpace metric;
};

Input read_input(const std::string& path) {
  std::string text = slurp(path);
  Input in;
  try {
    std::istringstream ss(text);
    if (detect_input(text) == InputKind::graph) {
      in.graph = read_graph(ss);
      in.metric = shortest_path_metric(*in.graph);
    } else {
      in.metric = read_metric(ss);
    }
  } catch (const ParseError& e) {
    throw IoError(path + ": " + e.what());
  }
  return in;
}

WeightedGraph require_graph(const std::string& path) {
  auto in = read_input(path);
  if (!in.graph) throw IoError(path + ": expected an edge list, got a distance matrix");
  return *in.graph;
}

std::vector<double> parse_qs(const std::string& list) {
  std::vector<double> qs;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item == "inf") {
      qs.push_back(kInfinity);
      continue;
    }
    std::size_t used = 0;
    double q = 0;
    try {
      q = std::stod(item, &used);
    } catch (...) {
      used = 0;
    }
    if (used == 0 || used != item.size() || q < 1.0) throw InvalidArgument("bad --q entry '" + item + "'");
    qs.push_back(q);
  }
  if (qs.empty()) throw InvalidArgument("--q is empty");
  return qs;
}

void write_json(const std::string& path, const json& j) {
  emit(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

DistortionReport tree_report(const MetricSpace& m, const SpanningTree& t, double K, std::span<const double> qs = {}) {
  return make_report(pairwise_distortions(m, tree_all_pairs(t)), m.size(), K, qs);
}

// --- subcommands ---------------------------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "cycle", out;
  std::size_t n = 16, width = 0, height = 0;
  double p = 0.1, wmin = 1.0, wmax = 1.0;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a) {
  if (a.kind == "random_metric") {
    auto m = random_euclidean_metric(a.n, a.seed);
    emit(a.out, [&](std::ostream& out) { write_metric(out, m); });
    return kOk;
  }
  WeightedGraph g;
  if (a.kind == "cycle") g = cycle_graph(a.n, a.wmin);
  else if (a.kind == "path") g = path_graph(a.n, a.wmin);
  else if (a.kind == "grid") g = grid_graph(a.width ? a.width : a.n, a.height ? a.height : a.n, a.wmin);
  else if (a.kind == "gnp") g = gnp_graph(a.n, a.p, a.wmin, a.wmax, a.seed);
  else throw InvalidArgument("unknown --kind '" + a.kind + "'");
  emit(a.out, [&](std::ostream& out) { write_graph(out, g); });
  return kOk;
}

struct UltrametricArgs {
  std::string input, out, report;
  double K = 150.0;
  unsigned threads = 0;
};

int run_ultrametric(const UltrametricArgs& a) {
  auto in = read_input(a.input);
  UltrametricOptions opt;
  opt.distortion_constant = a.K;
  opt.threads = a.threads;
  auto tree = build_ultrametric(in.metric, opt);
  write_json(a.out, to_json(tree));
  if (!a.report.empty()) {
    auto r = make_report(pairwise_distortions(in.metric, tree_all_pairs(tree)), in.metric.size(), a.K);
    write_json(a.report, to_json(r));
    if (r.scaling_state == CheckState::fail) return kCheckFailed;
  }
  return kOk;
}

struct SpantreeArgs {
  std::string input, out, trace, report;
  double window = 150.0;
  long root = -1;
  unsigned threads = 0;
};

int run_spantree(const SpantreeArgs& a) {
  auto g = require_graph(a.input);
  SpanningTreeOptions opt;
  opt.window = a.window;
  opt.threads = a.threads;
  if (a.root >= 0) opt.root = static_cast<PointId>(a.root);
  auto build = build_spanning_tree(g, opt);
  emit(a.out, [&](std::ostream& out) { write_tree(out, build.tree); });
  if (!a.trace.empty()) write_json(a.trace, to_json(build.trace));
  if (!a.report.empty()) {
    auto r = tree_report(shortest_path_metric(g), build.tree, constants::C_hat);
    auto radius = verify_radius_invariants(build.trace, build.tree, &g);
    auto budgets = audit_decompose_calls(g, build.trace, a.window);
    r.radius_state = radius.pass() ? CheckState::pass : CheckState::fail;
    r.budget_state = budgets.budget.pass() && budgets.certificate.pass() ? CheckState::pass : CheckState::fail;
    write_json(a.report, to_json(r));
    if (r.scaling_state == CheckState::fail || r.radius_state == CheckState::fail ||
        r.budget_state == CheckState::fail)
      return kCheckFailed;
  }
  return kOk;
}

struct ProbArgs {
  std::string input, out, trace, report, density = "inverse-square";
  std::uint64_t seed = 0;
  std::size_t samples = 1;
  int t = 1;
  double theta = 1.0;
  unsigned threads = 0;
};

int run_spantree_prob(const ProbArgs& a) {
  auto g = require_graph(a.input);
  ProbOptions opt;
  opt.threads = a.threads;
  if (a.density == "inverse-square") opt.density = make_density(DensityFunction::inverse_square());
  else if (a.density == "iterated-log") opt.density = make_density(DensityFunction::iterated_log(a.t, a.theta));
  else throw InvalidArgument("unknown --density '" + a.density + "'");
  if (a.samples == 0) throw InvalidArgument("--samples must be at least 1");

  // Sample i uses seed + i.
  std::vector<std::uint64_t> seeds(a.samples);
  std::iota(seeds.begin(), seeds.end(), a.seed);
  const MetricSpace m = shortest_path_metric(g);
  bool ok = true;
  json samples = json::array();
  std::vector<double> mean(pair_count(g.size()), 0.0);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    opt.seed = seeds[i];
    auto build = build_prob_spanning_tree(g, opt);
    const std::string suffix = a.samples == 1 ? "" : "." + std::to_string(i);
    if (a.samples == 1 || !a.out.empty())
      emit(a.out.empty() ? a.out : a.out + suffix, [&](std::ostream& out) { write_tree(out, build.tree); });
    if (!a.trace.empty()) write_json(a.trace + suffix, to_json(build.trace));
    if (a.report.empty()) continue;
    auto r = tree_report(m, build.tree, constants::C_hat);
    auto radius = verify_radius_invariants(build.trace, build.tree, &g);
    r.radius_state = radius.pass() ? CheckState::pass : CheckState::fail;
    ok = ok && radius.pass() && r.scaling_state != CheckState::fail;
    for (std::size_t k = 0; k < r.values.size(); ++k) mean[k] += r.values[k] / static_cast<double>(seeds.size());
    json s = to_json(r);
    s["seed"] = seeds[i];
    samples.push_back(std::move(s));
  }
  if (!a.report.empty()) {
    json out{{"density", opt.density.describe()}, {"samples", std::move(samples)}};
    if (!mean.empty()) {
      json lq = json::object();
      for (double q : {1.0, 2.0, kInfinity}) lq[q_label(q)] = lq_distortion(mean, q);
      out["ensemble_mean"] = {{"lq", lq}};
    }
    write_json(a.report, out);
  }
  return ok ? kOk : kCheckFailed;
}

struct EvaluateArgs {
  std::string graph, tree, ultrametric, q = "1,2,inf", profile, out;
  double K = -1.0;
};

int run_evaluate(const EvaluateArgs& a) {
  auto in = read_input(a.graph);
  auto qs = parse_qs(a.q);
  DistortionReport r;
  if (!a.tree.empty()) {
    auto t = parse_file<SpanningTree>(a.tree, [](std::istream& s) { return read_tree(s); });
    if (t.size() != in.metric.size()) throw IoError(a.tree + ": tree has " + std::to_string(t.size()) +
                                                    " vertices, input has " + std::to_string(in.metric.size()));
    r = tree_report(in.metric, t, a.K > 0 ? a.K : constants::C_hat, qs);
  } else {
    UltrametricTree u;
    try {
      u = ultrametric_from_json(parse_json_file(a.ultrametric));
    } catch (const Error& e) {
      throw IoError(a.ultrametric + ": " + e.what());
    }
    if (u.size() != in.metric.size()) throw IoError(a.ultrametric + ": leaf count differs from the input size");
    r = make_report(pairwise_distortions(in.metric, tree_all_pairs(u)), in.metric.size(), a.K > 0 ? a.K : 150.0, qs);
  }
  write_json(a.out, to_json(r));
  if (!a.profile.empty()) emit(a.profile, [&](std::ostream& out) { write_profile_csv(out, r.values); });
  return r.scaling_state == CheckState::fail ? kCheckFailed : kOk;
}

struct VerifyArgs {
  std::string trace, tree, graph;
};

int run_verify(const VerifyArgs& a) {
  ConstructionTrace trace;
  try {
    trace = trace_from_json(parse_json_file(a.trace));
  } catch (const Error& e) {
    throw IoError(a.trace + ": " + e.what());
  }
  auto tree = parse_file<SpanningTree>(a.tree, [](std::istream& s) { return read_tree(s); });
  std::optional<WeightedGraph> g;
  if (!a.graph.empty()) g = require_graph(a.graph);

  bool ok = true;
  auto show = [&](const char* what, const AuditResult& r) {
    std::cout << what << ": " << (r.pass() ? "pass" : "FAIL") << " (" << r.checked << " checked)\n";
    for (std::size_t i = 0; i < r.failures.size() && i < 10; ++i) {
      const auto& f = r.failures[i];
      std::cout << "  node " << f.node << ": " << f.what << " (value " << format_real(f.value) << ", bound "
                << format_real(f.bound) << ")\n";
    }
    ok = ok && r.pass();
  };
  auto structure = verify_trace_structure(trace, tree);
  show("structure", structure);
  if (!structure.pass()) return kCheckFailed;
  show("radius", verify_radius_invariants(trace, tree, g ? &*g : nullptr));
  if (g) {
    auto d = audit_decompose_calls(*g, trace);
    show("decompose budget", d.budget);
    show("decompose certificate", d.certificate);
    show("decompose radius", d.radius);
  }
  return ok ? kOk : kCheckFailed;
}

int run_mst(const std::string& input, const std::string& out) {
  auto g = require_graph(input);
  std::vector<std::uint32_t> order(g.edges().size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return g.edge(x).w < g.edge(y).w; });
  std::vector<PointId> parent(g.size());
  std::iota(parent.begin(), parent.end(), PointId{0});
  auto find = [&](PointId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::uint32_t> ids;
  for (auto id : order) {
    PointId a = find(g.edge(id).u), b = find(g.edge(id).v);
    if (a == b) continue;
    parent[a] = b;
    ids.push_back(id);
  }
  if (ids.size() + 1 != g.size()) throw DisconnectedGraph(0, 0);
  std::sort(ids.begin(), ids.end());
  auto t = SpanningTree::from_graph(g, ids);
  emit(out, [&](std::ostream& o) { write_tree(o, t); });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treebed: ultrametric and spanning tree embeddings with scaling distortion checks"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a graph (edge list) or a random metric (matrix)");
  generate->add_option("--kind", gen.kind, "cycle | path | grid | gnp | random_metric")
      ->check(CLI::IsMember({"cycle", "path", "grid", "gnp", "random_metric"}));
  generate->add_option("--n", gen.n, "number of vertices (grid side if --width/--height are absent)")
      ->check(CLI::PositiveNumber);
  generate->add_option("--width", gen.width);
  generate->add_option("--height", gen.height);
  generate->add_option("--p", gen.p, "edge probability for gnp");
  generate->add_option("--wmin", gen.wmin, "edge weight (lower end of the range for gnp)");
  generate->add_option("--wmax", gen.wmax, "upper end of the gnp weight range");
  generate->add_option("--seed", gen.seed);
  generate->add_option("--out", gen.out, "output file (default stdout)");

  UltrametricArgs ua;
  auto* ultra = app.add_subcommand("ultrametric", "embed a metric (or a graph's shortest paths) into an ultrametric");
  ultra->add_option("input", ua.input, "edge list or distance matrix")->required();
  ultra->add_option("--out", ua.out, "ultrametric JSON (default stdout)");
  ultra->add_option("--report", ua.report, "distortion report JSON");
  ultra->add_option("--K", ua.K, "distortion constant")->check(CLI::PositiveNumber);
  ultra->add_option("--threads", ua.threads);

  SpantreeArgs sa;
  auto* span = app.add_subcommand("spantree", "deterministic spanning tree by hierarchical star partition");
  span->add_option("input", sa.input, "edge list")->required();
  span->add_option("--out", sa.out, "tree edge list (default stdout)");
  span->add_option("--trace", sa.trace, "construction trace JSON");
  span->add_option("--report", sa.report, "distortion report JSON, with radius and budget audits");
  span->add_option("--window", sa.window)->check(CLI::PositiveNumber);
  span->add_option("--root", sa.root, "root vertex (default: a minimum-eccentricity vertex)");
  span->add_option("--threads", sa.threads);

  ProbArgs pa;
  auto* prob = app.add_subcommand("spantree-prob", "probabilistic spanning trees");
  prob->add_option("input", pa.input, "edge list")->required();
  prob->add_option("--seed", pa.seed)->required();
  prob->add_option("--samples", pa.samples, "number of trees; sample i uses seed + i");
  prob->add_option("--density", pa.density)->check(CLI::IsMember({"inverse-square", "iterated-log"}));
  prob->add_option("--t", pa.t, "iterated-log depth");
  prob->add_option("--theta", pa.theta, "iterated-log exponent slack");
  prob->add_option("--out", pa.out, "tree edge list; with several samples, one file per sample (<out>.<i>)");
  prob->add_option("--trace", pa.trace, "trace JSON; suffixed like --out");
  prob->add_option("--report", pa.report, "per-sample reports and the ensemble mean");
  prob->add_option("--threads", pa.threads);

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "distortion report of a tree or ultrametric against the input");
  eval->add_option("--graph", ea.graph, "edge list or distance matrix")->required();
  auto* tree_opt = eval->add_option("--tree", ea.tree, "spanning tree edge list");
  auto* ultra_opt = eval->add_option("--ultrametric", ea.ultrametric, "ultrametric JSON");
  tree_opt->excludes(ultra_opt);
  eval->add_option("--q", ea.q, "comma separated q values, 'inf' allowed");
  eval->add_option("--profile", ea.profile, "scaling profile CSV");
  eval->add_option("--K", ea.K, "scaling constant (default 150 for ultrametrics, the tree constant for trees)");
  eval->add_option("--out", ea.out, "report JSON (default stdout)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "audit a construction trace against its tree");
  verify->add_option("--trace", va.trace)->required();
  verify->add_option("--tree", va.tree)->required();
  verify->add_option("--graph", va.graph, "source graph; enables recomputed radii and decompose audits");

  std::string mst_in, mst_out;
  auto* mst = app.add_subcommand("mst", "minimum spanning tree baseline");
  mst->add_option("input", mst_in)->required();
  mst->add_option("--out", mst_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*ultra) return run_ultrametric(ua);
    if (*span) return run_spantree(sa);
    if (*prob) return run_spantree_prob(pa);
    if (*eval) {
      if (ea.tree.empty() == ea.ultrametric.empty()) throw InvalidArgument("evaluate needs --tree or --ultrametric");
      return run_evaluate(ea);
    }
    if (*verify) return run_verify(va);
    if (*mst) return run_mst(mst_in, mst_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
