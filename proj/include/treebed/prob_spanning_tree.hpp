#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "treebed/density.hpp"
#include "treebed/error.hpp"
#include "treebed/graph.hpp"
#include "treebed/metric.hpp"
#include "treebed/rng.hpp"
#include "treebed/spanning_tree.hpp"

namespace treebed {

/// Truncated exponential on [a/16, a/8] with a = alpha * lambda_hat and density
/// p(r) = chi^2 / (1 - chi^-2) * (32 ln chi / a) * chi^(-32 r / a).
class ConeSampler {
 public:
  ConeSampler(double chi, double alpha, double lambda_hat) : chi_(chi), a_(alpha * lambda_hat) {
    if (!(chi >= 4.0)) throw InvalidArgument("cone sampler needs chi >= 4");
    if (!(a_ > 0.0)) throw InvalidArgument("cone sampler needs a positive width");
  }

  double lo() const noexcept { return a_ / 16.0; }
  double hi() const noexcept { return a_ / 8.0; }
  double chi() const noexcept { return chi_; }

  double density(double r) const {
    if (r < lo() || r > hi()) return 0.0;
    const double lc = std::log(chi_);
    return chi_ * chi_ / (1.0 - 1.0 / (chi_ * chi_)) * (32.0 * lc / a_) * std::exp(-32.0 * r / a_ * lc);
  }

  /// F(r) = chi^2 / (1 - chi^-2) * (chi^-2 - chi^(-32 r / a)).
  double cdf(double r) const {
    if (r <= lo()) return 0.0;
    if (r >= hi()) return 1.0;
    const double c2 = 1.0 / (chi_ * chi_);
    return (c2 - std::exp(-32.0 * r / a_ * std::log(chi_))) / (c2 * (1.0 - c2));
  }

  /// Inverse CDF at u in [0, 1].
  double sample(double u) const {
    const double c2 = 1.0 / (chi_ * chi_);
    const double c4 = c2 * c2;
    double r = -(a_ / (32.0 * std::log(chi_))) * std::log(c2 - u * (c2 - c4));
    return std::clamp(r, lo(), hi());
  }

 private:
  double chi_;
  double a_;
};

inline double sample_cone_radius(const ConeSampler& s, double u) { return s.sample(u); }

/// gamma in {0, 1/16} with the smaller population of the strip
/// B(x0, (1/2 + gamma + 1/16) L) \ B(x0, (1/2 + gamma) L); ties pick 0.
inline double choose_gamma(std::span<const PointId> cluster, std::span<const double> dist_from_x0,
                           double lambda_hat) {
  const double tol = 1e-12 * lambda_hat;
  auto strip = [&](double gamma) {
    double inner = (0.5 + gamma) * lambda_hat + tol;
    double outer = (0.5 + gamma + 1.0 / 16.0) * lambda_hat + tol;
    std::size_t k = 0;
    for (PointId p : cluster) k += dist_from_x0[p] > inner && dist_from_x0[p] <= outer;
    return k;
  };
  return strip(1.0 / 16.0) < strip(0.0) ? 1.0 / 16.0 : 0.0;
}

inline double sample_central_radius(double gamma, double beta_rand, double lambda_hat) {
  return (0.5 + 1.5 * gamma + beta_rand / 4.0) * lambda_hat;
}

/// |Y0| / |B_{Y0}(v, radius)| for a ball measured in the cluster's shortest-path metric.
inline double local_density(const WeightedGraph& g, std::span<const char> cluster,
                            std::span<const PointId> Y0, PointId v, double radius) {
  auto d = dijkstra(g, v, cluster, radius);
  std::size_t k = 0;
  for (PointId p : Y0) k += d[p] <= radius;
  return static_cast<double>(Y0.size()) / static_cast<double>(std::max<std::size_t>(k, 1));
}

struct ProbOptions {
  std::uint64_t seed = 0;
  DensityFunction density = DensityFunction::inverse_square();
  unsigned threads = 0;
};

/// Randomized star partition: central ball with a random radius, then cones with
/// truncated-exponential radii around the least crowded residue points.
inline StarPartition prob_star_partition(const WeightedGraph& g, std::span<const PointId> X, PointId x0,
                                         double Lambda, const DensityFunction& f, std::uint64_t seed) {
  StarPartition out;
  auto in_x = membership(g.size(), X);
  if (!in_x.at(x0)) throw InvalidArgument("star center " + std::to_string(x0) + " is not in the cluster");
  auto dx = dijkstra(g, x0, in_x);
  double lambda_hat = 0.0;
  for (PointId p : X) {
    if (!std::isfinite(dx[p])) throw DisconnectedGraph(x0, p);
    lambda_hat = std::max(lambda_hat, dx[p]);
  }
  if (X.size() == 1) {
    out.pieces.push_back({{x0}, x0});
    return out;
  }
  Rng rng(seed);
  ProbRecord rec;
  rec.seed = seed;
  rec.alpha = 1.0 / f(std::max(1.0, std::log(2.0 * Lambda / lambda_hat)));
  out.params.Lambda = Lambda;
  out.params.lambda_hat = lambda_hat;
  out.params.alpha = rec.alpha;

  const double tol = detail::tie_tol(lambda_hat);
  rec.beta_rand = rng.uniform(0.0, 1.0 / 8.0);
  rec.gamma = choose_gamma(X, dx, lambda_hat);
  rec.central_radius = sample_central_radius(rec.gamma, rec.beta_rand, lambda_hat);

  std::vector<PointId> center, residue;
  for (PointId p : X) (dx[p] <= rec.central_radius + tol ? center : residue).push_back(p);
  if (residue.empty()) throw Error("central ball swallowed the whole cluster around " + std::to_string(x0));
  auto in_center = membership(g.size(), center);
  out.pieces.push_back({center, x0});

  // Crowding of every Y0 point, counted once: the Y0 ball never changes across cones.
  const double ball_radius = rec.alpha * lambda_hat / 64.0;
  const std::vector<PointId> y0 = residue;
  std::vector<double> crowd(g.size(), 0.0);
  for (PointId v : y0) crowd[v] = local_density(g, in_x, y0, v, ball_radius);

  while (!residue.empty()) {
    PointId vk = residue.front();
    for (PointId v : residue)
      if (crowd[v] < crowd[vk]) vk = v;
    const double chi = std::max(4.0, crowd[vk]);
    ConeSampler sampler(chi, rec.alpha, lambda_hat);
    const double r = sampler.sample(rng.uniform());

    // Walk down shortest-path predecessors from v_k until the next step lands in X_0.
    auto in_residue = membership(g.size(), residue);
    PointId cur = vk;
    std::optional<StarLink> link;
    for (std::size_t guard = 0; guard <= X.size() && !link; ++guard) {
      std::vector<StarLink> preds;
      for (const Incidence& inc : g.neighbors(cur)) {
        if (!in_x[inc.to]) continue;
        double w = g.edge(inc.edge).w;
        if (std::abs(dx[inc.to] + w - dx[cur]) > tol || dx[inc.to] >= dx[cur]) continue;
        if (!in_center[inc.to] && !in_residue[inc.to]) continue;
        preds.push_back({inc.to, cur, inc.edge, w});
      }
      if (preds.empty()) {
        throw Error("no shortest path from residue vertex " + std::to_string(vk) +
                    " reaches the central ball through the residue");
      }
      std::sort(preds.begin(), preds.end(), [](const StarLink& a, const StarLink& b) { return a.edge < b.edge; });
      const StarLink pick = preds[preds.size() == 1 ? 0 : rng.below(preds.size())];
      if (in_center[pick.y]) {
        link = pick;
      } else {
        cur = pick.y;
      }
    }
    if (!link) throw Error("shortest-path walk from " + std::to_string(vk) + " did not terminate");

    const PointId xk = link->x;
    auto tip = dijkstra(g, xk, in_residue);
    ConeView cone(residue, x0, xk, dx, tip);
    std::vector<PointId> piece, rest;
    for (PointId v : residue) (cone.distance(xk, v) <= r + tol ? piece : rest).push_back(v);
    rec.v.push_back(vk);
    rec.chi.push_back(chi);
    rec.cone_radii.push_back(r);
    out.links.push_back(*link);
    out.pieces.push_back({std::move(piece), xk});
    residue = std::move(rest);
  }
  out.prob = std::move(rec);
  return out;
}

/// Center of the probabilistic hierarchy: uniform among the radius minimizers.
inline PointId random_min_radius_center(const WeightedGraph& g, std::uint64_t seed) {
  auto ecc = eccentricities(g);
  double best = std::min_element(ecc.begin(), ecc.end())->first;
  std::vector<PointId> ties;
  for (auto [r, v] : ecc)
    if (r <= best + 1e-12 * best) ties.push_back(v);
  Rng rng(path_seed(seed, {}, 0x726f6f74));
  return ties[ties.size() == 1 ? 0 : rng.below(ties.size())];
}

inline TreeBuild build_prob_spanning_tree(const WeightedGraph& g, const ProbOptions& opt = {}) {
  if (g.size() == 0) throw InvalidArgument("graph has no vertices");
  if (!g.connected()) {
    auto d = dijkstra(g, 0);
    for (PointId v = 0; v < g.size(); ++v)
      if (!std::isfinite(d[v])) throw DisconnectedGraph(0, v);
  }
  const PointId root = random_min_radius_center(g, opt.seed);
  std::vector<PointId> all(g.size());
  std::iota(all.begin(), all.end(), PointId{0});
  const double lambda = cluster_radius(g, all, root);
  auto partition = [&opt](const WeightedGraph& graph, const ClusterFrame& fr) {
    return prob_star_partition(graph, fr.points, fr.center, fr.Lambda, opt.density,
                               path_seed(opt.seed, fr.path));
  };
  return grow_hierarchy(g, std::move(all), root, static_cast<double>(g.size()), lambda, partition,
                        opt.threads);
}

inline TreeBuild build_prob_spanning_tree(const WeightedGraph& g, std::uint64_t seed) {
  ProbOptions opt;
  opt.seed = seed;
  return build_prob_spanning_tree(g, opt);
}

}  // namespace treebed
