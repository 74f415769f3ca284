#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "treebed/audit.hpp"
#include "treebed/decompose.hpp"
#include "treebed/distortion.hpp"
#include "treebed/generators.hpp"
#include "treebed/json_io.hpp"
#include "treebed/spanning_tree.hpp"

using namespace treebed;

namespace {

std::vector<PointId> iota_points(std::size_t n) {
  std::vector<PointId> v(n);
  std::iota(v.begin(), v.end(), PointId{0});
  return v;
}

bool connected_within(const WeightedGraph& g, const std::vector<PointId>& piece) {
  auto mask = membership(g.size(), piece);
  auto d = dijkstra(g, piece.front(), mask);
  return std::all_of(piece.begin(), piece.end(), [&](PointId p) { return std::isfinite(d[p]); });
}

void expect_valid_star(const WeightedGraph& g, const std::vector<PointId>& X, const StarPartition& star) {
  std::vector<PointId> all;
  for (const auto& piece : star.pieces) {
    ASSERT_FALSE(piece.points.empty());
    EXPECT_TRUE(std::binary_search(piece.points.begin(), piece.points.end(), piece.center));
    EXPECT_TRUE(connected_within(g, piece.points));
    all.insert(all.end(), piece.points.begin(), piece.points.end());
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, X);
  ASSERT_EQ(star.links.size() + 1, star.pieces.size());
  const auto& center = star.pieces.front().points;
  for (std::size_t i = 0; i < star.links.size(); ++i) {
    const StarLink& l = star.links[i];
    const Edge& e = g.edge(l.edge);
    EXPECT_TRUE((e.u == l.x && e.v == l.y) || (e.u == l.y && e.v == l.x));
    EXPECT_TRUE(std::binary_search(center.begin(), center.end(), l.y));
    EXPECT_EQ(l.x, star.pieces[i + 1].center);
  }
}

void expect_full_audit(const WeightedGraph& g, const TreeBuild& b) {
  EXPECT_EQ(b.tree.size(), g.size());
  EXPECT_EQ(b.tree.edges().size(), g.size() - 1);
  for (std::size_t i = 0; i < b.tree.edges().size(); ++i) {
    const Edge& te = b.tree.edges()[i];
    const Edge& ge = g.edge(b.tree.edge_ids()[i]);
    EXPECT_EQ(te.u, ge.u);
    EXPECT_EQ(te.v, ge.v);
    EXPECT_EQ(te.w, ge.w);
  }
  auto structure = verify_trace_structure(b.trace, b.tree);
  EXPECT_TRUE(structure.pass()) << (structure.failures.empty() ? "" : structure.failures[0].what);
  auto radius = verify_radius_invariants(b.trace, b.tree, &g);
  EXPECT_TRUE(radius.pass()) << (radius.failures.empty() ? "" : radius.failures[0].what);
  auto dec = audit_decompose_calls(g, b.trace);
  EXPECT_TRUE(dec.budget.pass());
  EXPECT_TRUE(dec.certificate.pass());
  EXPECT_TRUE(dec.radius.pass());
}

}  // namespace

TEST(Constants, NumericValues) {
  EXPECT_NEAR(constants::c, 5.43656, 1e-5);
  EXPECT_NEAR(constants::c_prime, 17.49639, 1e-4);
  EXPECT_NEAR(constants::C, 87.49, 1e-2);
  EXPECT_NEAR(constants::C_hat, 2.296e5, 1e3);
}

TEST(Decompose, SingletonKeepsCenter) {
  auto m = shortest_path_metric(path_graph(4));
  DecomposeParams p;
  p.lambda_hat = 3;
  p.theta = 0.5;
  p.n_reset = 4;
  p.beta = 1.0 / 22.0;
  p.eps_lim = 22;
  auto res = decompose(induced_submetric(m, {2}), 2, p);
  EXPECT_EQ(res.inside, std::vector<PointId>{2});
  EXPECT_TRUE(res.outside.empty());
  EXPECT_EQ(res.cert.cut.r, 1.5);
}

TEST(Decompose, ZeroConeDistanceNeverSeparated) {
  std::vector<PointId> W{4, 7};
  std::vector<double> d(8, kInfinity);
  d[4] = d[7] = 0.0;
  DecomposeParams p;
  p.lambda_hat = 1;
  p.theta = 0;
  p.n_reset = 2;
  p.beta = 1;
  p.eps_lim = 1;
  auto res = decompose(W, 4, d, p);
  EXPECT_EQ(res.inside, W);
  EXPECT_TRUE(res.outside.empty());
}

TEST(Decompose, PathOfFourCaseOne) {
  auto m = shortest_path_metric(path_graph(4));
  DecomposeParams p;
  p.lambda_hat = 3;
  p.theta = 0.5;
  p.n_reset = 4;
  p.beta = 1.0 / 22.0;
  p.eps_lim = 22;
  EXPECT_NEAR(p.alpha(), 0.0536, 1e-4);
  auto view = induced_submetric(m, {0, 1, 2, 3});
  auto res = decompose(view, 0, p);
  EXPECT_EQ(res.cert.which_case, 1);
  EXPECT_GE(res.cert.cut.r, 1.5);
  EXPECT_LE(res.cert.cut.r, (0.5 + p.alpha()) * 3 + 1e-12);
  EXPECT_EQ(res.inside, (std::vector<PointId>{0, 1}));
  EXPECT_EQ(res.outside, (std::vector<PointId>{2, 3}));
  auto budget = verify_decompose_budget(m, res.inside, res.outside, p.n_reset, p.beta, p.eps_lim, p.lambda_hat);
  EXPECT_TRUE(budget.pass);
  std::vector<double> d0(m.row(0).begin(), m.row(0).end());
  EXPECT_FALSE(audit_decompose_certificate(view.points(), d0, res.cert, p).has_value());
}

TEST(Decompose, PreconditionErrors) {
  auto m = shortest_path_metric(path_graph(4));
  auto view = induced_submetric(m, {0, 1, 2, 3});
  DecomposeParams p;
  p.lambda_hat = 3;
  p.n_reset = 3;
  p.eps_lim = 10;
  EXPECT_THROW(decompose(view, 0, p), InvalidArgument);
  p.n_reset = 4;
  p.eps_lim = 0.5;
  EXPECT_THROW(decompose(view, 0, p), InvalidArgument);
  p.eps_lim = 1;
  EXPECT_THROW(decompose(induced_submetric(m, {1, 2}), 0, p), InvalidArgument);
}

TEST(Decompose, CaseTwoWhenMiddleBallIsCrowded) {
  // 30 points at distance 1 from the center and a single far point: the ball at the middle of
  // the radius window holds nearly everything.
  const std::size_t n = 32;
  std::vector<double> d(n * n, 2.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (std::size_t i = 1; i < n - 1; ++i) d[i] = d[i * n] = 1.0;
  d[n - 1] = d[(n - 1) * n] = 2.0;
  MetricSpace m(n, d);
  DecomposeParams p;
  p.lambda_hat = 2;
  p.theta = 0.5;
  p.n_reset = n;
  p.beta = 1.0 / 22.0;
  p.eps_lim = 22;
  auto res = decompose(induced_submetric(m, iota_points(n)), 0, p);
  EXPECT_EQ(res.cert.which_case, 2);
  EXPECT_GE(res.cert.cut.r / p.lambda_hat, p.theta - 1e-12);
  EXPECT_LE(res.cert.cut.r / p.lambda_hat, p.theta + p.alpha() + 1e-12);
  EXPECT_EQ(res.inside.size(), n - 1);
  auto budget = verify_decompose_budget(m, res.inside, res.outside, p.n_reset, p.beta, p.eps_lim, p.lambda_hat);
  EXPECT_TRUE(budget.pass);
}

TEST(Decompose, RandomCallsRespectBudgets) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto m = random_euclidean_metric(40 + seed, seed);
    auto view = induced_submetric(m, iota_points(m.size()));
    PointId u = static_cast<PointId>(seed % m.size());
    DecomposeParams p;
    p.lambda_hat = radius_from(view, u);
    p.theta = seed % 2 ? 0.5 : 0.0;
    p.n_reset = static_cast<double>(m.size()) * (1 + seed % 3);
    p.beta = std::pow(0.3 + 0.1 * (seed % 7), 0.25) / constants::c_hat;
    p.eps_lim = static_cast<double>(m.size()) / (p.beta * p.n_reset);
    auto res = decompose(view, u, p);
    const double rel = res.cert.cut.r / p.lambda_hat;
    EXPECT_GE(rel, p.theta - 1e-12);
    EXPECT_LE(rel, p.theta + p.alpha() + 1e-12);
    auto budget = verify_decompose_budget(m, res.inside, res.outside, p.n_reset, p.beta, p.eps_lim, p.lambda_hat);
    EXPECT_TRUE(budget.pass) << "seed " << seed << " eps " << budget.worst_eps;
    std::vector<double> du(m.row(u).begin(), m.row(u).end());
    EXPECT_FALSE(audit_decompose_certificate(view.points(), du, res.cert, p).has_value()) << "seed " << seed;
  }
}

TEST(StarPartition, SingletonCluster) {
  WeightedGraph g(1, {});
  auto star = star_partition(g, std::vector<PointId>{0}, 0, 1, 1);
  ASSERT_EQ(star.pieces.size(), 1u);
  EXPECT_TRUE(star.links.empty());
}

TEST(StarPartition, PathOfFourFromEndpoint) {
  auto g = path_graph(4);
  auto X = iota_points(4);
  auto star = star_partition(g, X, 0, 4, 3);
  expect_valid_star(g, X, star);
  ASSERT_EQ(star.pieces.size(), 2u);
  EXPECT_EQ(star.pieces[0].points, (std::vector<PointId>{0, 1}));
  EXPECT_EQ(star.pieces[1].points, (std::vector<PointId>{2, 3}));
  EXPECT_EQ(star.links[0].y, 1u);
  EXPECT_EQ(star.links[0].x, 2u);
  EXPECT_NEAR(star.params.beta, 1.0 / 22.0, 1e-15);
  EXPECT_NEAR(star.params.eps_lim, 22.0, 1e-12);
}

TEST(StarPartition, StarGraphCones) {
  WeightedGraph g(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}});
  auto X = iota_points(4);
  auto star = star_partition(g, X, 0, 4, 1);
  expect_valid_star(g, X, star);
  EXPECT_EQ(star.pieces[0].points, std::vector<PointId>{0});
  ASSERT_EQ(star.pieces.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(star.pieces[i].points.size(), 1u);
}

TEST(StarPartition, PiecesShrinkOnRandomGraphs) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = gnp_graph(60, 0.06, 1, 3, seed);
    auto X = iota_points(60);
    PointId x0 = min_radius_center(g);
    double rad = cluster_radius(g, X, x0);
    auto star = star_partition(g, X, x0, 60, rad);
    expect_valid_star(g, X, star);
    for (const auto& piece : star.pieces) {
      EXPECT_LE(cluster_radius(g, piece.points, piece.center), (0.5 + star.params.alpha) * rad * (1 + 1e-9) + 1e-12)
          << "seed " << seed;
    }
  }
}

TEST(SpanningTree, SingleVertexAndEdge) {
  auto one = build_spanning_tree(WeightedGraph(1, {}));
  EXPECT_TRUE(one.tree.edges().empty());
  ASSERT_EQ(one.trace.nodes.size(), 1u);
  EXPECT_TRUE(one.trace.nodes[0].children.empty());
  auto two = build_spanning_tree(WeightedGraph(2, {{0, 1, 2.5}}));
  ASSERT_EQ(two.tree.edges().size(), 1u);
  EXPECT_EQ(two.tree.edges()[0].w, 2.5);
}

TEST(SpanningTree, TreeInputIsReturnedUnchanged) {
  Rng rng(5);
  std::vector<Edge> edges;
  for (PointId v = 1; v < 50; ++v) edges.push_back({static_cast<PointId>(rng.below(v)), v, rng.uniform(0.5, 2)});
  WeightedGraph g(50, edges);
  auto b = build_spanning_tree(g);
  std::vector<std::uint32_t> ids(b.tree.edge_ids().begin(), b.tree.edge_ids().end());
  std::vector<std::uint32_t> all(49);
  std::iota(all.begin(), all.end(), 0u);
  EXPECT_EQ(ids, all);
  expect_full_audit(g, b);
}

TEST(SpanningTree, PathOfFour) {
  auto g = path_graph(4);
  auto b = build_spanning_tree(g);
  EXPECT_EQ(b.tree.edges().size(), 3u);
  expect_full_audit(g, b);
}

TEST(SpanningTree, CycleOfFourDropsOneEdge) {
  auto g = cycle_graph(4);
  auto b = build_spanning_tree(g);
  ASSERT_EQ(b.tree.edges().size(), 3u);
  auto m = shortest_path_metric(g);
  auto values = pairwise_distortions(m, tree_all_pairs(b.tree));
  EXPECT_EQ(*std::max_element(values.begin(), values.end()), 3.0);
  expect_full_audit(g, b);
}

TEST(SpanningTree, LongCycle) {
  auto g = cycle_graph(400);
  auto b = build_spanning_tree(g);
  auto m = shortest_path_metric(g);
  auto values = pairwise_distortions(m, tree_all_pairs(b.tree));
  EXPECT_EQ(lq_distortion(values, INFINITY), 399.0);
  EXPECT_EQ(count_bad_pairs(values, 0.25, 150.0), 1u);
  EXPECT_TRUE(check_scaling_guarantee(values, constants::C_hat).pass);
}

TEST(SpanningTree, AuditsPassOnAssortedGraphs) {
  std::vector<WeightedGraph> graphs{cycle_graph(40), grid_graph(8, 8), grid_graph(5, 13, 0.5),
                                    gnp_graph(64, 0.05, 1, 10, 1), gnp_graph(90, 0.1, 0.1, 1, 2)};
  for (const auto& g : graphs) {
    auto b = build_spanning_tree(g);
    expect_full_audit(g, b);
    auto m = shortest_path_metric(g);
    auto values = pairwise_distortions(m, tree_all_pairs(b.tree));
    EXPECT_EQ(count_contractions(values), 0u);
  }
}

TEST(SpanningTree, ResetFlagFollowsSizeToRadiusRule) {
  auto g = gnp_graph(80, 0.05, 1, 4, 3);
  auto b = build_spanning_tree(g);
  const auto& nodes = b.trace.nodes;
  EXPECT_TRUE(nodes[0].is_reset);
  for (const auto& nd : nodes) {
    if (!nd.parent) continue;
    const auto& par = nodes[*nd.parent];
    double share = static_cast<double>(nd.points.size()) / par.params.n_reset;
    bool expect_reset = share > constants::c * nd.rad / par.params.Lambda;
    EXPECT_EQ(nd.is_reset, expect_reset) << "node " << nd.id;
  }
}

TEST(SpanningTree, InflatedChildRadiusFailsAudit) {
  auto g = grid_graph(6, 6);
  auto b = build_spanning_tree(g);
  ASSERT_TRUE(verify_radius_invariants(b.trace, b.tree).pass());
  auto bad = b.trace;
  std::size_t victim = 0;
  for (const auto& nd : bad.nodes)
    if (nd.parent && !nd.is_reset && nd.points.size() > 1) victim = nd.id;
  ASSERT_NE(victim, 0u);
  bad.nodes[victim].rad = bad.nodes[*bad.nodes[victim].parent].rad;
  auto res = verify_radius_invariants(bad, b.tree);
  ASSERT_FALSE(res.pass());
  EXPECT_EQ(res.failures.front().node, victim);
}

TEST(SpanningTree, CorruptedTraceFailsStructureAudit) {
  auto g = gnp_graph(30, 0.2, 1, 2, 4);
  auto b = build_spanning_tree(g);
  auto bad = b.trace;
  const auto& top = bad.nodes[0].children;
  ASSERT_GE(top.size(), 2u);
  auto& first = bad.nodes[top[0]].points;
  first.push_back(bad.nodes[top[1]].points.front());
  std::sort(first.begin(), first.end());
  EXPECT_FALSE(verify_trace_structure(bad, b.tree).pass());
}

TEST(SpanningTree, DisconnectedGraphRejected) {
  WeightedGraph g(4, {{0, 1, 1}, {2, 3, 1}});
  EXPECT_THROW(build_spanning_tree(g), DisconnectedGraph);
}

TEST(SpanningTree, RootOverride) {
  auto g = path_graph(5);
  SpanningTreeOptions opt;
  opt.root = 0;
  auto b = build_spanning_tree(g, opt);
  EXPECT_EQ(b.trace.nodes[0].center, 0u);
  EXPECT_EQ(build_spanning_tree(g).trace.nodes[0].center, 2u);
  opt.root = 9;
  EXPECT_THROW(build_spanning_tree(g, opt), InvalidArgument);
}

TEST(SpanningTree, IndependentOfThreadCount) {
  auto g = gnp_graph(200, 0.03, 1, 5, 8);
  SpanningTreeOptions one;
  one.threads = 1;
  SpanningTreeOptions many;
  many.threads = 8;
  auto a = build_spanning_tree(g, one);
  auto b = build_spanning_tree(g, many);
  EXPECT_TRUE(std::equal(a.tree.edge_ids().begin(), a.tree.edge_ids().end(), b.tree.edge_ids().begin(),
                         b.tree.edge_ids().end()));
  EXPECT_EQ(to_json(a.trace).dump(), to_json(b.trace).dump());
}
