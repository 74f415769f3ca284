#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treebed/decompose.hpp"
#include "treebed/error.hpp"
#include "treebed/graph.hpp"
#include "treebed/metric.hpp"
#include "treebed/parallel.hpp"

namespace treebed {

/// n-1 edges over vertices 0..n-1 forming a tree. `edge_ids` index into the source graph
/// when the tree was built from one.
class SpanningTree {
 public:
  SpanningTree() = default;

  SpanningTree(std::size_t n, std::vector<Edge> edges, std::vector<std::uint32_t> edge_ids = {})
      : n_(n), edges_(std::move(edges)), ids_(std::move(edge_ids)) {
    if (n_ == 0) throw InvalidArgument("spanning tree over zero vertices");
    if (edges_.size() != n_ - 1) {
      throw InvalidArgument("spanning tree on " + std::to_string(n_) + " vertices needs " +
                            std::to_string(n_ - 1) + " edges, got " + std::to_string(edges_.size()));
    }
    if (!ids_.empty() && ids_.size() != edges_.size()) throw InvalidArgument("edge id count mismatch");
    std::vector<PointId> parent(n_);
    std::iota(parent.begin(), parent.end(), PointId{0});
    auto find = [&](PointId x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const Edge& e : edges_) {
      if (e.u >= n_ || e.v >= n_) throw InvalidArgument("tree edge references a vertex out of range");
      if (!(e.w > 0.0) || !std::isfinite(e.w)) throw InvalidArgument("tree edge has a non-positive weight");
      PointId a = find(e.u), b = find(e.v);
      if (a == b) {
        throw InvalidArgument("tree edges contain a cycle through " + std::to_string(e.u) + "-" +
                              std::to_string(e.v));
      }
      parent[a] = b;
    }
    adjacency_.assign(n_, {});
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      adjacency_[edges_[i].u].push_back({edges_[i].v, static_cast<std::uint32_t>(i)});
      adjacency_[edges_[i].v].push_back({edges_[i].u, static_cast<std::uint32_t>(i)});
    }
  }

  /// Tree made of the given graph edges, stored in increasing edge id order.
  static SpanningTree from_graph(const WeightedGraph& g, std::vector<std::uint32_t> ids) {
    std::sort(ids.begin(), ids.end());
    std::vector<Edge> edges;
    edges.reserve(ids.size());
    for (auto id : ids) edges.push_back(g.edge(id));
    return SpanningTree(g.size(), std::move(edges), std::move(ids));
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const std::uint32_t> edge_ids() const noexcept { return ids_; }
  std::span<const Incidence> neighbors(PointId v) const { return adjacency_.at(v); }

  /// Path lengths from `source`, optionally restricted to the subtree induced by `member`.
  std::vector<double> distances_from(PointId source, std::span<const char> member = {}) const {
    std::vector<double> dist(n_, kInfinity);
    dist[source] = 0.0;
    std::vector<PointId> stack{source};
    while (!stack.empty()) {
      PointId v = stack.back();
      stack.pop_back();
      for (const Incidence& inc : adjacency_[v]) {
        if (!member.empty() && !member[inc.to]) continue;
        if (dist[inc.to] == kInfinity) {
          dist[inc.to] = dist[v] + edges_[inc.edge].w;
          stack.push_back(inc.to);
        }
      }
    }
    return dist;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::vector<Incidence>> adjacency_;
};

struct ClusterParams {
  double n_reset = 0.0;
  double Lambda = 0.0;
  double lambda_hat = 0.0;
  double beta = 0.0;
  double eps_lim = 0.0;
  double alpha = 0.0;
};

/// Edge joining child piece i >= 1 to the central ball: y in X_0, x = the piece's center.
struct StarLink {
  PointId y = 0;
  PointId x = 0;
  std::uint32_t edge = 0;
  double w = 0.0;
};

struct ProbRecord {
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double beta_rand = 0.0;
  double alpha = 0.0;
  double central_radius = 0.0;
  std::vector<double> cone_radii;
  std::vector<double> chi;
  std::vector<PointId> v;
};

struct TraceNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::vector<PointId> points;
  PointId center = 0;
  double rad = 0.0;
  bool is_reset = false;
  ClusterParams params;
  std::vector<std::size_t> children;
  std::vector<StarLink> links;
  std::vector<DecomposeCertificate> cuts;  // one per child, deterministic construction only
  std::optional<ProbRecord> prob;
};

/// Cluster tree of a hierarchical star partition, nodes in pre-order.
struct ConstructionTrace {
  std::vector<TraceNode> nodes;
};

struct TreeBuild {
  SpanningTree tree;
  ConstructionTrace trace;
};

struct StarPiece {
  std::vector<PointId> points;
  PointId center = 0;
};

struct StarPartition {
  std::vector<StarPiece> pieces;  // X_0 first
  std::vector<StarLink> links;    // links[i-1] joins pieces[i]
  ClusterParams params;
  std::vector<DecomposeCertificate> cuts;
  std::optional<ProbRecord> prob;
};

/// A cluster handed to a star partition.
struct ClusterFrame {
  std::vector<PointId> points;
  PointId center = 0;
  double n_reset = 0.0;
  double Lambda = 0.0;
  double rad = 0.0;
  bool is_reset = false;
  std::vector<std::uint32_t> path;  // child indices from the root
};

/// rad_center(points) in the subgraph induced by `points`.
inline double cluster_radius(const WeightedGraph& g, std::span<const PointId> points, PointId center) {
  auto mask = membership(g.size(), points);
  auto dist = dijkstra(g, center, mask);
  double r = 0.0;
  for (PointId p : points) {
    if (!std::isfinite(dist[p])) throw DisconnectedGraph(center, p);
    r = std::max(r, dist[p]);
  }
  return r;
}

namespace detail {

inline double tie_tol(double scale) { return 1e-12 * scale; }

/// Smallest-id edge (p, x) with p in `from` lying on a shortest path from the distance origin.
inline std::optional<StarLink> tight_edge_into(const WeightedGraph& g, PointId x,
                                               std::span<const char> from,
                                               std::span<const double> dist, double tol) {
  std::optional<StarLink> best;
  for (const Incidence& inc : g.neighbors(x)) {
    if (!from[inc.to]) continue;
    double w = g.edge(inc.edge).w;
    if (std::abs(dist[inc.to] + w - dist[x]) > tol) continue;
    if (!best || inc.edge < best->edge) best = StarLink{inc.to, x, inc.edge, w};
  }
  return best;
}

struct SubHierarchy {
  std::vector<TraceNode> nodes;  // local ids, pre-order, root at 0
  std::vector<std::uint32_t> edges;
};

template <class Partitioner>
SubHierarchy grow(const WeightedGraph& g, ClusterFrame frame, const Partitioner& partition,
                  ThreadBudget& budget) {
  SubHierarchy out;
  TraceNode node;
  node.points = frame.points;
  node.center = frame.center;
  node.rad = frame.rad;
  node.is_reset = frame.is_reset;
  node.params.n_reset = frame.n_reset;
  node.params.Lambda = frame.Lambda;
  if (frame.points.size() == 1) {
    out.nodes.push_back(std::move(node));
    return out;
  }
  StarPartition star = partition(g, frame);
  node.params = star.params;
  node.links = star.links;
  node.cuts = std::move(star.cuts);
  node.prob = std::move(star.prob);
  for (const StarLink& l : star.links) out.edges.push_back(l.edge);

  std::vector<ClusterFrame> frames;
  for (std::size_t i = 0; i < star.pieces.size(); ++i) {
    StarPiece& piece = star.pieces[i];
    ClusterFrame child;
    child.center = piece.center;
    child.rad = cluster_radius(g, piece.points, piece.center);
    const double share = static_cast<double>(piece.points.size()) / frame.n_reset;
    if (share <= constants::c * child.rad / frame.Lambda) {
      child.n_reset = frame.n_reset;
      child.Lambda = frame.Lambda;
    } else {
      child.is_reset = true;
      child.n_reset = static_cast<double>(piece.points.size());
      child.Lambda = child.rad;
    }
    child.points = std::move(piece.points);
    child.path = frame.path;
    child.path.push_back(static_cast<std::uint32_t>(i));
    frames.push_back(std::move(child));
  }

  std::vector<std::optional<std::future<SubHierarchy>>> pending(frames.size());
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].points.size() >= 16 && budget.try_acquire()) {
      pending[i] = std::async(std::launch::async, [&g, &partition, &budget, f = std::move(frames[i])]() mutable {
        auto r = grow(g, std::move(f), partition, budget);
        budget.release();
        return r;
      });
    }
  }
  out.nodes.push_back(std::move(node));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    SubHierarchy sub = pending[i] ? pending[i]->get() : grow(g, std::move(frames[i]), partition, budget);
    const std::size_t offset = out.nodes.size();
    out.nodes[0].children.push_back(offset);
    for (TraceNode& t : sub.nodes) {
      t.id += offset;
      t.parent = t.parent ? *t.parent + offset : 0;
      for (auto& c : t.children) c += offset;
      out.nodes.push_back(std::move(t));
    }
    out.edges.insert(out.edges.end(), sub.edges.begin(), sub.edges.end());
  }
  return out;
}

}  // namespace detail

/// Runs the hierarchical star partition from a reset cluster and joins the pieces' trees with
/// the star edges.
template <class Partitioner>
TreeBuild grow_hierarchy(const WeightedGraph& g, std::vector<PointId> points, PointId center,
                         double n_reset, double Lambda, const Partitioner& partition,
                         unsigned threads = 0) {
  if (points.empty()) throw InvalidArgument("empty cluster");
  std::sort(points.begin(), points.end());
  ClusterFrame root;
  root.rad = cluster_radius(g, points, center);
  root.center = center;
  root.n_reset = n_reset;
  root.Lambda = Lambda;
  root.is_reset = true;
  root.points = std::move(points);
  ThreadBudget budget(resolve_threads(threads));
  auto sub = detail::grow(g, std::move(root), partition, budget);
  TreeBuild out;
  if (sub.nodes.front().points.size() == g.size()) {
    out.tree = SpanningTree::from_graph(g, std::move(sub.edges));
  }
  out.trace.nodes = std::move(sub.nodes);
  out.trace.nodes.front().parent.reset();
  return out;
}

/// Central ball around x0 (theta = 1/2) followed by cones cut from the residue (theta = 0),
/// each hung off X_0 by a graph edge.
inline StarPartition star_partition(const WeightedGraph& g, std::span<const PointId> X, PointId x0,
                                    double n_reset, double Lambda, double window = 150.0) {
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
  DecomposeParams p;
  p.lambda_hat = lambda_hat;
  p.n_reset = n_reset;
  p.beta = std::pow(lambda_hat / Lambda, 0.25) / constants::c_hat;
  p.eps_lim = static_cast<double>(X.size()) / (p.beta * n_reset);
  p.window = window;
  out.params = {n_reset, Lambda, lambda_hat, p.beta, p.eps_lim, p.alpha()};

  p.theta = 0.5;
  auto central = decompose(X, x0, dx, p);
  if (central.outside.empty()) {
    throw Error("central ball swallowed the whole cluster around " + std::to_string(x0));
  }
  auto in_center = membership(g.size(), central.inside);
  out.pieces.push_back({std::move(central.inside), x0});
  out.cuts.push_back(central.cert);

  std::vector<PointId> residue = std::move(central.outside);
  p.theta = 0.0;
  const double tol = detail::tie_tol(lambda_hat);
  while (!residue.empty()) {
    PointId xi = residue.front();
    for (PointId v : residue)
      if (dx[v] < dx[xi]) xi = v;
    auto link = detail::tight_edge_into(g, xi, in_center, dx, tol);
    if (!link) {
      throw Error("no shortest-path edge joins the central ball to residue vertex " + std::to_string(xi));
    }
    auto in_residue = membership(g.size(), residue);
    auto tip = dijkstra(g, xi, in_residue);
    ConeView cone(residue, x0, xi, dx, tip);
    std::vector<double> from_tip(g.size(), kInfinity);
    for (PointId v : residue) from_tip[v] = cone.distance(xi, v);
    auto piece = decompose(residue, xi, from_tip, p);
    out.links.push_back(*link);
    out.pieces.push_back({std::move(piece.inside), xi});
    out.cuts.push_back(piece.cert);
    residue = std::move(piece.outside);
  }
  return out;
}

struct SpanningTreeOptions {
  double window = 150.0;
  std::optional<PointId> root;
  unsigned threads = 0;
};

/// Vertices sorted by eccentricity in the whole graph, with their eccentricities.
inline std::vector<std::pair<double, PointId>> eccentricities(const WeightedGraph& g) {
  std::vector<std::pair<double, PointId>> out;
  std::vector<PointId> all(g.size());
  std::iota(all.begin(), all.end(), PointId{0});
  for (PointId v = 0; v < g.size(); ++v) out.emplace_back(cluster_radius(g, all, v), v);
  return out;
}

inline PointId min_radius_center(const WeightedGraph& g) {
  auto ecc = eccentricities(g);
  return std::min_element(ecc.begin(), ecc.end())->second;
}

inline TreeBuild hierarchical_star_partition(const WeightedGraph& g, std::vector<PointId> X, PointId x,
                                             double n_reset, double Lambda,
                                             const SpanningTreeOptions& opt = {}) {
  auto partition = [window = opt.window](const WeightedGraph& graph, const ClusterFrame& f) {
    return star_partition(graph, f.points, f.center, f.n_reset, f.Lambda, window);
  };
  return grow_hierarchy(g, std::move(X), x, n_reset, Lambda, partition, opt.threads);
}

/// Deterministic low-distortion spanning tree of a connected graph.
inline TreeBuild build_spanning_tree(const WeightedGraph& g, const SpanningTreeOptions& opt = {}) {
  if (g.size() == 0) throw InvalidArgument("graph has no vertices");
  if (!g.connected()) {
    auto d = dijkstra(g, 0);
    for (PointId v = 0; v < g.size(); ++v)
      if (!std::isfinite(d[v])) throw DisconnectedGraph(0, v);
  }
  PointId root = opt.root ? *opt.root : min_radius_center(g);
  if (root >= g.size()) throw InvalidArgument("root " + std::to_string(root) + " is not a vertex");
  std::vector<PointId> all(g.size());
  std::iota(all.begin(), all.end(), PointId{0});
  const double lambda = cluster_radius(g, all, root);
  return hierarchical_star_partition(g, std::move(all), root, static_cast<double>(g.size()), lambda, opt);
}

}  // namespace treebed
