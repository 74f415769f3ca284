#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/metric.hpp"
#include "treebed/parallel.hpp"
#include "treebed/shell_cut.hpp"

namespace treebed {

/// Rooted labelled tree whose leaves are the points. d_U(x,y) = label of lca(x,y).
class UltrametricTree {
 public:
  struct Node {
    double label = 0.0;
    std::optional<PointId> leaf_point;
    std::vector<std::size_t> children;
    std::size_t parent = kNoParent;
    std::size_t depth = 0;
  };
  static constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

  UltrametricTree() = default;

  /// Builds from a node list with node 0 as root. Validates the leaf bijection onto 0..n-1,
  /// zero leaf labels, positive internal labels and labels non-increasing toward the leaves.
  explicit UltrametricTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw InvalidArgument("ultrametric tree has no nodes");
    std::size_t leaves = 0;
    for (const Node& nd : nodes_) leaves += nd.leaf_point.has_value();
    leaf_.assign(leaves, kNoParent);
    for (auto& nd : nodes_) nd.parent = kNoParent;
    std::vector<std::size_t> stack{0};
    std::vector<char> seen(nodes_.size(), 0);
    seen[0] = 1;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      Node& nd = nodes_[v];
      if (nd.leaf_point) {
        if (!nd.children.empty()) throw InvalidArgument("leaf node " + std::to_string(v) + " has children");
        if (nd.label != 0.0) throw InvalidArgument("leaf node " + std::to_string(v) + " has a nonzero label");
        PointId p = *nd.leaf_point;
        if (p >= leaves || leaf_[p] != kNoParent) {
          throw InvalidArgument("leaf points must be 0..n-1, each exactly once (point " +
                                std::to_string(p) + ")");
        }
        leaf_[p] = v;
        continue;
      }
      if (nd.children.empty()) throw InvalidArgument("internal node " + std::to_string(v) + " has no children");
      if (!(nd.label > 0.0) || !std::isfinite(nd.label)) {
        throw InvalidArgument("internal node " + std::to_string(v) + " needs a positive label");
      }
      for (std::size_t c : nd.children) {
        if (c >= nodes_.size() || seen[c]) {
          throw InvalidArgument("node " + std::to_string(v) + " has an invalid child " + std::to_string(c));
        }
        seen[c] = 1;
        if (nodes_[c].label > nd.label) {
          throw InvalidArgument("child " + std::to_string(c) + " has a larger label than its parent");
        }
        nodes_[c].parent = v;
        nodes_[c].depth = nd.depth + 1;
        stack.push_back(c);
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw InvalidArgument("ultrametric tree has nodes unreachable from the root");
    }
  }

  std::size_t size() const noexcept { return leaf_.size(); }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::size_t leaf_node(PointId p) const {
    if (p >= leaf_.size()) throw InvalidArgument("unknown leaf point " + std::to_string(p));
    return leaf_[p];
  }

  double distance(PointId x, PointId y) const {
    std::size_t a = leaf_node(x), b = leaf_node(y);
    while (a != b) {
      if (nodes_[a].depth < nodes_[b].depth) std::swap(a, b);
      a = nodes_[a].parent;
    }
    return nodes_[a].label;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> leaf_;
};

inline double ultrametric_distance(const UltrametricTree& t, PointId x, PointId y) {
  return t.distance(x, y);
}

/// Density level of the partition around u: the largest eps in (0,1] with
/// |B(u, sqrt(eps) diam / 4)| >= eps n.
template <PseudoMetric S>
double epsilon_hat(const S& space, PointId u) {
  auto pts = space.points();
  if (pts.size() < 2) throw InvalidArgument("density level needs at least two points");
  const double diam = diameter(space);
  std::vector<double> s;
  s.reserve(pts.size());
  for (PointId p : pts) s.push_back(space.distance(u, p));
  ShellCutConfig cfg;
  cfg.length = diam;
  cfg.mass = static_cast<double>(pts.size());
  cfg.tol = 1e-12 * diam;
  return shell_epsilon_hat(s, cfg);
}

namespace detail {

inline ShellCutConfig ultrametric_cut_config(double diam, std::size_t n, double constant) {
  ShellCutConfig cfg;
  cfg.length = diam;
  cfg.window = constant;
  cfg.mass = static_cast<double>(n);
  cfg.tol = 1e-12 * diam;
  return cfg;
}

}  // namespace detail

/// Cut radius around u whose thin shells respect the density budget at every scale.
template <PseudoMetric S>
CutCertificate choose_cut_radius(const S& space, PointId u, double eps_hat,
                                 double distortion_constant = 150.0) {
  auto pts = space.points();
  const double diam = diameter(space);
  std::vector<double> s;
  s.reserve(pts.size());
  for (PointId p : pts) s.push_back(space.distance(u, p));
  auto cfg = detail::ultrametric_cut_config(diam, pts.size(), distortion_constant);
  try {
    CutCertificate cert = shell_cut(s, eps_hat, cfg);
    cert.u = u;
    cert.r = cert.rho;
    return cert;
  } catch (CutFailure& f) {
    CutCertificate cert = f.certificate();
    cert.u = u;
    throw CutFailure(std::move(cert));
  }
}

/// X1 = closed ball B(u, r), X2 = the rest.
template <PseudoMetric S>
std::pair<std::vector<PointId>, std::vector<PointId>> partition_step(const S& space, PointId u,
                                                                     const CutCertificate& cert) {
  const double tol = 1e-12 * diameter(space);
  std::pair<std::vector<PointId>, std::vector<PointId>> out;
  for (PointId p : space.points()) {
    (space.distance(u, p) <= cert.r + tol ? out.first : out.second).push_back(p);
  }
  return out;
}

struct UltrametricOptions {
  double distortion_constant = 150.0;
  /// Threads for building sibling subtrees; 0 = TREEBED_THREADS or hardware concurrency.
  unsigned threads = 0;
};

/// One partition of the recursion, in pre-order.
struct UltrametricCut {
  std::vector<PointId> inside;
  std::vector<PointId> outside;
  double diameter = 0.0;
  CutCertificate cert;
};

namespace detail {

struct UltraBuild {
  std::vector<UltrametricTree::Node> nodes;  // local ids, root at 0
  std::vector<UltrametricCut> cuts;
};

inline void append_subtree(UltraBuild& into, std::size_t parent, UltraBuild&& sub) {
  const std::size_t offset = into.nodes.size();
  for (auto& nd : sub.nodes) {
    for (auto& c : nd.children) c += offset;
    into.nodes.push_back(std::move(nd));
  }
  into.nodes[parent].children.push_back(offset);
  for (auto& c : sub.cuts) into.cuts.push_back(std::move(c));
}

inline UltraBuild build_ultra(const MetricSpace& m, std::vector<PointId> points,
                              const UltrametricOptions& opt, ThreadBudget& budget) {
  UltraBuild out;
  if (points.size() == 1) {
    UltrametricTree::Node leaf;
    leaf.leaf_point = points.front();
    out.nodes.push_back(std::move(leaf));
    return out;
  }
  SubsetView view(m, std::move(points));
  const PointId u = find_half_center(view);
  const double eps = epsilon_hat(view, u);
  CutCertificate cert = choose_cut_radius(view, u, eps, opt.distortion_constant);
  auto [inside, outside] = partition_step(view, u, cert);
  UltrametricTree::Node root;
  root.label = diameter(view);
  out.nodes.push_back(std::move(root));
  out.cuts.push_back({inside, outside, out.nodes[0].label, std::move(cert)});

  std::future<UltraBuild> pending;
  bool async = inside.size() > 32 && budget.try_acquire();
  if (async) {
    pending = std::async(std::launch::async, [&m, &opt, &budget, pts = inside]() mutable {
      auto r = build_ultra(m, std::move(pts), opt, budget);
      budget.release();
      return r;
    });
  }
  UltraBuild second = build_ultra(m, outside, opt, budget);
  UltraBuild first = async ? pending.get() : build_ultra(m, inside, opt, budget);
  append_subtree(out, 0, std::move(first));
  append_subtree(out, 0, std::move(second));
  return out;
}

}  // namespace detail

struct UltrametricResult {
  UltrametricTree tree;
  std::vector<UltrametricCut> cuts;
};

/// Recursive ball partition of the whole space into a labelled tree. Children are listed
/// ball-first; the output does not depend on the thread count.
inline UltrametricResult build_ultrametric_traced(const MetricSpace& m,
                                                  const UltrametricOptions& opt = {}) {
  if (m.size() == 0) throw InvalidArgument("cannot embed an empty metric space");
  ThreadBudget budget(resolve_threads(opt.threads));
  std::vector<PointId> all(m.points().begin(), m.points().end());
  auto build = detail::build_ultra(m, std::move(all), opt, budget);
  return {UltrametricTree(std::move(build.nodes)), std::move(build.cuts)};
}

inline UltrametricTree build_ultrametric(const MetricSpace& m, const UltrametricOptions& opt = {}) {
  return build_ultrametric_traced(m, opt).tree;
}

}  // namespace treebed
