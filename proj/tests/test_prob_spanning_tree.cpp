#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "treebed/audit.hpp"
#include "treebed/density.hpp"
#include "treebed/distortion.hpp"
#include "treebed/ensemble.hpp"
#include "treebed/generators.hpp"
#include "treebed/json_io.hpp"
#include "treebed/prob_spanning_tree.hpp"

using namespace treebed;

namespace {

// Composite Simpson rule on [a, b] with 2k panels.
template <class F>
double simpson(F f, double a, double b, int k = 2000) {
  const double h = (b - a) / (2 * k);
  double s = f(a) + f(b);
  for (int i = 1; i < 2 * k; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

std::vector<PointId> iota_points(std::size_t n) {
  std::vector<PointId> v(n);
  std::iota(v.begin(), v.end(), PointId{0});
  return v;
}

}  // namespace

TEST(Density, InverseSquareIsNormalized) {
  auto f = make_density(DensityFunction::Kind::inverse_square);
  EXPECT_EQ(f(1.0), 1.0);
  EXPECT_NEAR(f.integral_to(1e12) + f.tail(1e12), 1.0, 1e-9);
  EXPECT_NEAR(f.integral_to(1e12), 1.0 - 1e-12, 1e-9);
}

TEST(Density, ScaledInverseSquareIsRejected) {
  auto f = DensityFunction::inverse_square().scaled(2.0);
  EXPECT_NEAR(f.integral_to(1e12) + f.tail(1e12), 0.5, 1e-9);
  EXPECT_THROW(make_density(f), Error);
}

TEST(Density, IteratedLogIsNormalized) {
  for (auto [t, theta] : {std::pair{1, 1.0}, std::pair{1, 0.5}, std::pair{2, 1.0}}) {
    auto f = make_density(DensityFunction::Kind::iterated_log, t, theta);
    EXPECT_GE(f(1.0), 1.0);
    double total = f.integral_to(1e12) + f.tail(1e12);
    EXPECT_NEAR(total, 1.0, 1e-6) << f.describe();
    // Independent check of the closed-form tail on a finite stretch.
    double chunk = simpson([&](double y) { return std::exp(y) / f(std::exp(y)); }, std::log(10.0), std::log(1e4));
    EXPECT_NEAR(chunk, f.tail(10.0) - f.tail(1e4), 1e-8) << f.describe();
  }
}

TEST(Density, MonotoneAndAtLeastOne) {
  for (const auto& f : {DensityFunction::inverse_square(), DensityFunction::iterated_log(1, 1.0),
                        DensityFunction::iterated_log(2, 0.5)}) {
    double prev = f(1.0);
    EXPECT_GE(prev, 1.0);
    for (double x = 1.0; x < 1e9; x *= 1.7) {
      EXPECT_GE(f(x), prev);
      prev = f(x);
    }
  }
}

TEST(Density, BadParametersRejected) {
  EXPECT_THROW(DensityFunction::iterated_log(0, 1.0), InvalidArgument);
  EXPECT_THROW(DensityFunction::iterated_log(1, 0.0), InvalidArgument);
}

TEST(ConeSampler, EndpointsAndRange) {
  ConeSampler s(4.0, 0.5, 8.0);
  EXPECT_DOUBLE_EQ(s.lo(), 0.25);
  EXPECT_DOUBLE_EQ(s.hi(), 0.5);
  EXPECT_NEAR(sample_cone_radius(s, 0.0), s.lo(), 1e-12);
  EXPECT_NEAR(sample_cone_radius(s, 1e-12), s.lo(), 1e-9);
  EXPECT_NEAR(sample_cone_radius(s, 1.0), s.hi(), 1e-12);
  EXPECT_NEAR(sample_cone_radius(s, 1.0 - 1e-12), s.hi(), 1e-9);
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    double r = s.sample(rng.uniform());
    ASSERT_GE(r, s.lo());
    ASSERT_LE(r, s.hi());
  }
  EXPECT_THROW(ConeSampler(3.9, 1, 1), InvalidArgument);
}

TEST(ConeSampler, DensityIntegratesToOneAndMatchesCdf) {
  for (double chi : {4.0, 10.0, 100.0, 1e4}) {
    ConeSampler s(chi, 0.3, 5.0);
    auto p = [&](double r) { return s.density(r); };
    EXPECT_NEAR(simpson(p, s.lo(), s.hi()), 1.0, 1e-9) << chi;
    for (double t : {0.1, 0.25, 0.5, 0.9}) {
      double r = s.lo() + t * (s.hi() - s.lo());
      EXPECT_NEAR(s.cdf(r), simpson(p, s.lo(), r), 1e-9) << chi;
      EXPECT_NEAR(s.sample(s.cdf(r)), r, 1e-9 * s.hi()) << chi;
    }
  }
}

TEST(ConeSampler, KolmogorovSmirnovAgainstNumericalCdf) {
  for (double chi : {4.0, 10.0, 100.0}) {
    ConeSampler s(chi, 1.0, 1.0);
    Rng rng(static_cast<std::uint64_t>(chi));
    std::vector<double> xs(100000);
    for (double& x : xs) x = s.sample(rng.uniform());
    // The quadrature CDF is evaluated at every 97th order statistic.
    std::sort(xs.begin(), xs.end());
    double worst = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); i += 97) {
      double F = simpson([&](double r) { return s.density(r); }, s.lo(), xs[i], 200);
      worst = std::max({worst, std::abs(F - i / n), std::abs((i + 1) / n - F)});
    }
    EXPECT_LT(worst, 0.01) << "chi " << chi;
  }
}

TEST(ChooseGamma, Examples) {
  auto g = cycle_graph(8);
  auto d = dijkstra(g, 0);
  auto X = iota_points(8);
  EXPECT_EQ(choose_gamma(X, d, 4.0), 0.0);
  // Only the outer strip (0.5625, 0.625] * 10 is populated.
  std::vector<double> dist{0.0, 6.0, 6.1, 1.0};
  std::vector<PointId> pts{0, 1, 2, 3};
  EXPECT_EQ(choose_gamma(pts, dist, 10.0), 0.0);
  // Only the inner strip (0.5, 0.5625] * 10 is populated.
  dist = {0.0, 5.2, 5.5, 1.0};
  EXPECT_EQ(choose_gamma(pts, dist, 10.0), 1.0 / 16.0);
}

TEST(CentralRadius, Examples) {
  EXPECT_DOUBLE_EQ(sample_central_radius(0.0, 0.0, 4.0), 2.0);
  EXPECT_DOUBLE_EQ(sample_central_radius(1.0 / 16.0, 1.0 / 8.0, 8.0), 5.0);
  EXPECT_DOUBLE_EQ(sample_central_radius(0.0, 1.0 / 16.0, 64.0), 33.0);
}

TEST(LocalDensity, Examples) {
  auto p4 = path_graph(4);
  auto all4 = membership(4, iota_points(4));
  EXPECT_EQ(local_density(p4, all4, std::vector<PointId>{2}, 2, 0.5), 1.0);
  EXPECT_EQ(local_density(p4, all4, std::vector<PointId>{1, 2, 3}, 2, 1.0), 1.0);
  std::vector<Edge> k5;
  for (PointId a = 0; a < 5; ++a)
    for (PointId b = a + 1; b < 5; ++b) k5.push_back({a, b, 1.0});
  WeightedGraph g(5, k5);
  EXPECT_EQ(local_density(g, membership(5, iota_points(5)), iota_points(5), 3, 0.5), 5.0);
}

TEST(ProbStarPartition, SingleEdge) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    WeightedGraph g(2, {{0, 1, 3.0}});
    auto star = prob_star_partition(g, iota_points(2), 0, 3.0, DensityFunction::inverse_square(), seed);
    ASSERT_EQ(star.pieces.size(), 2u);
    EXPECT_EQ(star.pieces[0].points, std::vector<PointId>{0});
    EXPECT_EQ(star.pieces[1].points, std::vector<PointId>{1});
    ASSERT_TRUE(star.prob.has_value());
    EXPECT_EQ(star.prob->alpha, 1.0);
  }
}

TEST(ProbStarPartition, SampledRadiiStayInRange) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = gnp_graph(64, 0.06, 1, 3, seed + 100);
    auto b = build_prob_spanning_tree(g, seed);
    for (const auto& nd : b.trace.nodes) {
      if (!nd.prob) continue;
      const auto& rec = *nd.prob;
      const double L = nd.params.lambda_hat;
      EXPECT_GT(rec.alpha, 0.0);
      EXPECT_LE(rec.alpha, 1.0);
      double rel = rec.central_radius / L;
      if (rec.gamma == 0.0) {
        EXPECT_GE(rel, 0.5 - 1e-12);
        EXPECT_LE(rel, 0.5 + 1.0 / 32.0 + 1e-12);
      } else {
        EXPECT_GE(rel, 0.5 + 3.0 / 32.0 - 1e-12);
        EXPECT_LE(rel, 0.625 + 1e-12);
      }
      ASSERT_EQ(rec.cone_radii.size(), nd.links.size());
      for (std::size_t k = 0; k < rec.cone_radii.size(); ++k) {
        EXPECT_GE(rec.cone_radii[k], rec.alpha * L / 16.0 * (1 - 1e-12));
        EXPECT_LE(rec.cone_radii[k], rec.alpha * L / 8.0 * (1 + 1e-12));
        EXPECT_GE(rec.chi[k], 4.0);
      }
    }
  }
}

TEST(ProbSpanningTree, TreeInputIsSeedIndependent) {
  auto g = path_graph(20);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto b = build_prob_spanning_tree(g, seed);
    EXPECT_EQ(b.tree.edges().size(), 19u);
  }
}

TEST(ProbSpanningTree, CycleOfFourDropsEachEdgeSometimes) {
  auto g = cycle_graph(4);
  std::vector<int> dropped(4, 0);
  const int runs = 4000;
  for (int seed = 0; seed < runs; ++seed) {
    auto b = build_prob_spanning_tree(g, static_cast<std::uint64_t>(seed));
    ASSERT_EQ(b.tree.edge_ids().size(), 3u);
    std::vector<int> kept(4, 0);
    for (auto id : b.tree.edge_ids()) kept[id] = 1;
    for (int e = 0; e < 4; ++e) dropped[e] += !kept[e];
  }
  for (int e = 0; e < 4; ++e) {
    double freq = static_cast<double>(dropped[e]) / runs;
    EXPECT_GE(freq, 0.15) << "edge " << e;
    EXPECT_LE(freq, 0.35) << "edge " << e;
  }
}

TEST(ProbSpanningTree, PerSampleInvariants) {
  for (std::uint64_t gs = 1; gs <= 3; ++gs) {
    auto g = gnp_graph(64, 0.05, 1, 5, gs);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto b = build_prob_spanning_tree(g, seed);
      EXPECT_EQ(b.tree.edges().size(), 63u);
      EXPECT_TRUE(verify_trace_structure(b.trace, b.tree).pass());
      auto radius = verify_radius_invariants(b.trace, b.tree, &g);
      EXPECT_TRUE(radius.pass()) << (radius.failures.empty() ? "" : radius.failures[0].what);
    }
  }
}

TEST(ProbSpanningTree, IteratedLogDensityBuildsValidTrees) {
  auto g = grid_graph(7, 7);
  ProbOptions opt;
  opt.seed = 4;
  opt.density = make_density(DensityFunction::Kind::iterated_log, 1, 1.0);
  auto b = build_prob_spanning_tree(g, opt);
  EXPECT_EQ(b.tree.edges().size(), 48u);
  EXPECT_TRUE(verify_radius_invariants(b.trace, b.tree, &g).pass());
}

TEST(ProbSpanningTree, DeterministicAcrossRunsAndThreads) {
  auto g = cycle_graph(8);
  auto a = build_prob_spanning_tree(g, 77);
  auto b = build_prob_spanning_tree(g, 77);
  EXPECT_EQ(to_json(a.trace).dump(), to_json(b.trace).dump());
  auto big = gnp_graph(150, 0.04, 1, 2, 6);
  ProbOptions one;
  one.seed = 5;
  one.threads = 1;
  ProbOptions many = one;
  many.threads = 8;
  auto x = build_prob_spanning_tree(big, one);
  auto y = build_prob_spanning_tree(big, many);
  EXPECT_EQ(to_json(x.trace).dump(), to_json(y.trace).dump());
  EXPECT_TRUE(std::equal(x.tree.edge_ids().begin(), x.tree.edge_ids().end(), y.tree.edge_ids().begin(),
                         y.tree.edge_ids().end()));
}

TEST(Ensemble, SingleSeedMatchesThatTree) {
  auto g = gnp_graph(20, 0.2, 1, 2, 3);
  std::vector<std::uint64_t> seeds{9};
  auto ens = sample_tree_ensemble(g, seeds);
  auto b = build_prob_spanning_tree(g, 9);
  auto values = pairwise_distortions(shortest_path_metric(g), tree_all_pairs(b.tree));
  ASSERT_EQ(ens.mean.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(ens.mean[i], values[i]);
  ASSERT_EQ(ens.samples.size(), 1u);
  EXPECT_EQ(ens.samples[0].values, values);
}

TEST(Ensemble, TreeInputGivesOnes) {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  auto ens = sample_tree_ensemble(path_graph(7), seeds);
  for (double v : ens.mean) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Ensemble, CycleOfEightMeansStayBounded) {
  std::vector<std::uint64_t> seeds(200);
  std::iota(seeds.begin(), seeds.end(), 0u);
  auto ens = sample_tree_ensemble(cycle_graph(8), seeds);
  for (double v : ens.mean) {
    EXPECT_GE(v, 1.0);
    EXPECT_LE(v, 8.0);
  }
  for (const auto& r : ens.samples) EXPECT_LE(lq_distortion(r.values, INFINITY), 7.0);
  EXPECT_THROW(sample_tree_ensemble(cycle_graph(8), std::span<const std::uint64_t>{}), InvalidArgument);
}
