#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treebed/decompose.hpp"
#include "treebed/distortion.hpp"
#include "treebed/metric.hpp"
#include "treebed/prob_spanning_tree.hpp"

namespace treebed {

struct TreeEnsemble {
  std::vector<double> mean;               // per unordered pair, lexicographic
  std::vector<DistortionReport> samples;  // one per seed, in seed order
};

/// Samples one probabilistic tree per seed and averages each pair's distortion over the samples.
/// `base.seed` is ignored.
inline TreeEnsemble sample_tree_ensemble(const WeightedGraph& g, std::span<const std::uint64_t> seeds,
                                         ProbOptions base = {}, double K = constants::C_hat) {
  if (seeds.empty()) throw InvalidArgument("ensemble needs at least one seed");
  const MetricSpace m = shortest_path_metric(g);
  TreeEnsemble out;
  out.mean.assign(pair_count(g.size()), 0.0);
  for (std::uint64_t seed : seeds) {
    base.seed = seed;
    auto build = build_prob_spanning_tree(g, base);
    auto values = pairwise_distortions(m, tree_all_pairs(build.tree));
    for (std::size_t i = 0; i < values.size(); ++i) out.mean[i] += values[i];
    out.samples.push_back(make_report(std::move(values), g.size(), K));
  }
  for (double& v : out.mean) v /= static_cast<double>(seeds.size());
  return out;
}

}  // namespace treebed
