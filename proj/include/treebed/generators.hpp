#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/graph.hpp"
#include "treebed/metric.hpp"
#include "treebed/rng.hpp"

namespace treebed {

inline WeightedGraph cycle_graph(std::size_t n, double w = 1.0) {
  if (n < 3) throw InvalidArgument("a cycle needs at least 3 vertices");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({static_cast<PointId>(i), static_cast<PointId>((i + 1) % n), w});
  }
  return WeightedGraph(n, std::move(edges));
}

inline WeightedGraph path_graph(std::size_t n, double w = 1.0) {
  if (n < 1) throw InvalidArgument("a path needs at least 1 vertex");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    edges.push_back({static_cast<PointId>(i), static_cast<PointId>(i + 1), w});
  }
  return WeightedGraph(n, std::move(edges));
}

/// width x height grid, vertex (x, y) has id y * width + x.
inline WeightedGraph grid_graph(std::size_t width, std::size_t height, double w = 1.0) {
  if (width < 1 || height < 1) throw InvalidArgument("grid dimensions must be positive");
  std::vector<Edge> edges;
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      auto id = static_cast<PointId>(y * width + x);
      if (x + 1 < width) edges.push_back({id, id + 1, w});
      if (y + 1 < height) edges.push_back({id, static_cast<PointId>(id + width), w});
    }
  return WeightedGraph(width * height, std::move(edges));
}

/// G(n, p) with weights uniform in [wmin, wmax]. Components are then joined along a random
/// vertex order so the result is connected.
inline WeightedGraph gnp_graph(std::size_t n, double p, double wmin, double wmax, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("gnp needs at least 1 vertex");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("gnp edge probability must be in (0, 1]");
  if (!(wmin > 0.0 && wmax >= wmin && std::isfinite(wmax))) throw InvalidArgument("invalid weight range");
  Rng rng(seed);
  std::vector<Edge> edges;
  for (PointId u = 0; u < n; ++u)
    for (PointId v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.push_back({u, v, rng.uniform(wmin, wmax)});

  std::vector<PointId> parent(n);
  std::iota(parent.begin(), parent.end(), PointId{0});
  auto find = [&](PointId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) parent[find(e.u)] = find(e.v);
  std::vector<PointId> order(n);
  std::iota(order.begin(), order.end(), PointId{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (std::size_t i = 1; i < n; ++i) {
    PointId a = find(order[i - 1]), b = find(order[i]);
    if (a == b) continue;
    edges.push_back({order[i - 1], order[i], rng.uniform(wmin, wmax)});
    parent[a] = b;
  }
  return WeightedGraph(n, std::move(edges));
}

/// n points uniform in the unit square with Euclidean distances.
inline MetricSpace random_euclidean_metric(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random metric needs at least 1 point");
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = std::hypot(x[i] - x[j], y[i] - y[j]);
  return MetricSpace(n, std::move(d));
}

}  // namespace treebed
