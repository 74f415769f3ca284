#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treebed/error.hpp"

namespace treebed {

using PointId = std::uint32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Edge {
  PointId u = 0;
  PointId v = 0;
  double w = 0.0;

  PointId other(PointId x) const noexcept { return x == u ? v : u; }
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Incidence {
  PointId to;
  std::uint32_t edge;
};

/// Undirected graph with strictly positive finite edge weights. Vertex ids are 0..n-1.
/// Parallel edges are allowed; self-loops are not.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  WeightedGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    adjacency_.assign(n_, {});
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      if (e.u >= n_ || e.v >= n_) {
        throw InvalidArgument("edge " + std::to_string(i) + " references a vertex outside 0.." +
                              std::to_string(n_ == 0 ? 0 : n_ - 1));
      }
      if (e.u == e.v) throw InvalidArgument("edge " + std::to_string(i) + " is a self-loop");
      if (!(e.w > 0.0) || !std::isfinite(e.w)) {
        throw InvalidArgument("edge " + std::to_string(i) + " has a non-positive or non-finite weight");
      }
      adjacency_[e.u].push_back({e.v, static_cast<std::uint32_t>(i)});
      adjacency_[e.v].push_back({e.u, static_cast<std::uint32_t>(i)});
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t id) const { return edges_.at(id); }
  std::span<const Incidence> neighbors(PointId v) const { return adjacency_.at(v); }

  bool connected() const {
    if (n_ == 0) return true;
    std::vector<char> seen(n_, 0);
    std::vector<PointId> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      PointId v = stack.back();
      stack.pop_back();
      for (const Incidence& inc : adjacency_[v]) {
        if (!seen[inc.to]) {
          seen[inc.to] = 1;
          ++count;
          stack.push_back(inc.to);
        }
      }
    }
    return count == n_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
};

/// Dijkstra from `source` over the subgraph induced by vertices with `member[v] != 0`.
/// An empty mask means the whole graph. Unreached vertices keep distance +inf.
/// Vertices farther than `limit` are not expanded.
inline std::vector<double> dijkstra(const WeightedGraph& g, PointId source,
                                    std::span<const char> member = {},
                                    double limit = kInfinity) {
  std::vector<double> dist(g.size(), kInfinity);
  auto allowed = [&](PointId v) { return member.empty() || member[v] != 0; };
  if (!allowed(source)) return dist;
  using Item = std::pair<double, PointId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v] || d > limit) continue;
    for (const Incidence& inc : g.neighbors(v)) {
      if (!allowed(inc.to)) continue;
      double nd = d + g.edge(inc.edge).w;
      if (nd < dist[inc.to]) {
        dist[inc.to] = nd;
        heap.emplace(nd, inc.to);
      }
    }
  }
  return dist;
}

/// Membership mask of size n for a vertex subset.
inline std::vector<char> membership(std::size_t n, std::span<const PointId> points) {
  std::vector<char> mask(n, 0);
  for (PointId p : points) mask.at(p) = 1;
  return mask;
}

}  // namespace treebed
