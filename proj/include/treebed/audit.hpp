#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "treebed/decompose.hpp"
#include "treebed/distortion.hpp"
#include "treebed/spanning_tree.hpp"
#include "treebed/ultrametric.hpp"

namespace treebed {

struct AuditFailure {
  std::size_t node = 0;
  std::string what;
  double value = 0.0;
  double bound = 0.0;
};

struct AuditResult {
  std::vector<AuditFailure> failures;
  std::size_t checked = 0;
  bool pass() const noexcept { return failures.empty(); }
};

/// Checks that the trace's clusters nest and partition correctly and that the tree's edges are
/// exactly the star edges.
inline AuditResult verify_trace_structure(const ConstructionTrace& trace, const SpanningTree& tree) {
  AuditResult out;
  const auto& nodes = trace.nodes;
  if (nodes.empty()) {
    out.failures.push_back({0, "empty trace", 0, 0});
    return out;
  }
  if (nodes.front().points.size() != tree.size()) {
    out.failures.push_back({0, "root cluster does not cover the tree's vertices",
                            double(nodes.front().points.size()), double(tree.size())});
  }
  std::vector<std::pair<PointId, PointId>> star_edges;
  for (const TraceNode& nd : nodes) {
    ++out.checked;
    if (nd.id >= nodes.size() || &nodes[nd.id] != &nd) out.failures.push_back({nd.id, "node id out of order", 0, 0});
    if (nd.children.empty()) {
      if (nd.points.size() != 1) out.failures.push_back({nd.id, "leaf cluster with several points", double(nd.points.size()), 1});
      continue;
    }
    if (nd.links.size() + 1 != nd.children.size()) {
      out.failures.push_back({nd.id, "star links do not match the pieces", double(nd.links.size()), double(nd.children.size())});
      continue;
    }
    std::vector<PointId> merged;
    for (std::size_t i = 0; i < nd.children.size(); ++i) {
      std::size_t c = nd.children[i];
      if (c >= nodes.size() || nodes[c].parent != nd.id) {
        out.failures.push_back({nd.id, "child does not point back to its parent", double(c), 0});
        continue;
      }
      const TraceNode& ch = nodes[c];
      merged.insert(merged.end(), ch.points.begin(), ch.points.end());
      if (std::find(ch.points.begin(), ch.points.end(), ch.center) == ch.points.end()) {
        out.failures.push_back({c, "center outside its cluster", double(ch.center), 0});
      }
      if (i == 0 && ch.center != nd.center) out.failures.push_back({c, "central ball has a different center", 0, 0});
      if (i > 0) {
        const StarLink& l = nd.links[i - 1];
        const TraceNode& c0 = nodes[nd.children[0]];
        if (l.x != ch.center || std::find(c0.points.begin(), c0.points.end(), l.y) == c0.points.end()) {
          out.failures.push_back({c, "star edge does not join the central ball to the piece center", 0, 0});
        }
        star_edges.emplace_back(std::min(l.x, l.y), std::max(l.x, l.y));
      }
    }
    std::sort(merged.begin(), merged.end());
    if (merged != nd.points) out.failures.push_back({nd.id, "pieces do not partition the cluster", 0, 0});
  }
  std::vector<std::pair<PointId, PointId>> tree_edges;
  for (const Edge& e : tree.edges()) tree_edges.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
  std::sort(star_edges.begin(), star_edges.end());
  std::sort(tree_edges.begin(), tree_edges.end());
  if (star_edges != tree_edges) out.failures.push_back({0, "tree edges differ from the star edges", 0, 0});
  return out;
}

/// Radius invariants of every trace node:
///  - a non-reset child's radius is at most 5/8 of its parent's;
///  - the tree restricted to a cluster has radius (from the cluster center) at most c' times the
///    cluster radius;
///  - alpha <= 1/8 at non-reset clusters of a deterministic run.
/// With a graph, cluster radii are recomputed instead of read from the trace.
inline AuditResult verify_radius_invariants(const ConstructionTrace& trace, const SpanningTree& tree,
                                            const WeightedGraph* graph = nullptr) {
  AuditResult out;
  const auto& nodes = trace.nodes;
  std::vector<double> rad(nodes.size());
  for (const TraceNode& nd : nodes) {
    rad[nd.id] = graph ? cluster_radius(*graph, nd.points, nd.center) : nd.rad;
    if (graph && std::abs(rad[nd.id] - nd.rad) > 1e-9 * std::max(1.0, rad[nd.id])) {
      out.failures.push_back({nd.id, "recorded radius differs from the recomputed one", nd.rad, rad[nd.id]});
    }
  }
  for (const TraceNode& nd : nodes) {
    ++out.checked;
    if (nd.parent && !nd.is_reset) {
      double bound = 0.625 * rad[*nd.parent];
      if (rad[nd.id] > bound * (1.0 + 1e-9)) out.failures.push_back({nd.id, "radius decay", rad[nd.id], bound});
    }
    auto mask = membership(tree.size(), nd.points);
    auto dist = tree.distances_from(nd.center, mask);
    double tree_rad = 0.0;
    for (PointId p : nd.points) tree_rad = std::max(tree_rad, dist[p]);
    double bound = constants::c_prime * rad[nd.id];
    if (!(tree_rad <= bound * (1.0 + 1e-9))) out.failures.push_back({nd.id, "tree radius blowup", tree_rad, bound});
    if (!nd.prob && !nd.is_reset && !nd.children.empty() && nd.params.alpha > 0.125 * (1.0 + 1e-9)) {
      out.failures.push_back({nd.id, "alpha above 1/8 at a non-reset cluster", nd.params.alpha, 0.125});
    }
  }
  return out;
}

struct DecomposeAudit {
  AuditResult budget;       // separated close pairs within eps |Z| (n - |Z|) beta
  AuditResult certificate;  // thin-shell bounds of each recorded cut radius
  AuditResult radius;       // r / lambda_hat within [theta, theta + alpha]
};

/// Rebuilds every decompose call of a deterministic run from the graph and the trace and
/// re-checks its guarantees. Piece i >= 1 was cut from the residue X minus pieces 0..i-1 using the
/// cone metric with apex at the cluster center and tip at the piece center.
inline DecomposeAudit audit_decompose_calls(const WeightedGraph& g, const ConstructionTrace& trace,
                                            double window = 150.0) {
  DecomposeAudit out;
  for (const TraceNode& nd : trace.nodes) {
    if (nd.children.empty() || nd.cuts.empty()) continue;
    if (nd.cuts.size() != nd.children.size()) {
      out.budget.failures.push_back({nd.id, "certificate count differs from the piece count", 0, 0});
      continue;
    }
    DecomposeParams p;
    p.lambda_hat = nd.params.lambda_hat;
    p.n_reset = nd.params.n_reset;
    p.beta = nd.params.beta;
    p.eps_lim = nd.params.eps_lim;
    p.window = window;
    auto in_x = membership(g.size(), nd.points);
    auto dx = dijkstra(g, nd.center, in_x);
    std::vector<PointId> residue = nd.points;
    for (std::size_t i = 0; i < nd.children.size(); ++i) {
      const TraceNode& piece = trace.nodes[nd.children[i]];
      const DecomposeCertificate& cert = nd.cuts[i];
      p.theta = i == 0 ? 0.5 : 0.0;
      std::vector<PointId> outside;
      std::set_difference(residue.begin(), residue.end(), piece.points.begin(), piece.points.end(),
                          std::back_inserter(outside));
      std::vector<double> from_u;
      BudgetCheck check;
      if (i == 0) {
        ClusterMetric space(g, nd.points);
        from_u = dx;
        check = verify_decompose_budget(space, piece.points, outside, p.n_reset, p.beta, p.eps_lim,
                                        p.lambda_hat, window);
      } else {
        auto tip = dijkstra(g, piece.center, membership(g.size(), residue));
        ConeView cone(residue, nd.center, piece.center, dx, tip);
        from_u.assign(g.size(), kInfinity);
        for (PointId v : residue) from_u[v] = cone.distance(piece.center, v);
        check = verify_decompose_budget(cone, piece.points, outside, p.n_reset, p.beta, p.eps_lim,
                                        p.lambda_hat, window);
      }
      ++out.budget.checked;
      if (!check.pass) {
        out.budget.failures.push_back({nd.id, "decompose budget of piece " + std::to_string(i),
                                       double(check.worst_count), check.worst_budget});
      }
      ++out.certificate.checked;
      if (auto bad = audit_decompose_certificate(residue, from_u, cert, p)) {
        out.certificate.failures.push_back({nd.id, "thin-shell bound of piece " + std::to_string(i), *bad, 0});
      }
      ++out.radius.checked;
      const double rel = cert.cut.r / p.lambda_hat;
      if (rel < p.theta - 1e-9 || rel > p.theta + p.alpha() + 1e-9) {
        out.radius.failures.push_back({nd.id, "cut radius outside [theta, theta + alpha]", rel, p.theta + p.alpha()});
      }
      residue = std::move(outside);
    }
  }
  return out;
}

/// Per-cut budget of an ultrametric built by binary ball cuts: for the cut at a node labelled
/// Delta, pairs across the cut at distance <= sqrt(eps) Delta / K number at most eps |X1| |X2|.
inline AuditResult audit_ultrametric_cuts(const MetricSpace& m, const UltrametricTree& t, double K = 150.0) {
  AuditResult out;
  auto nodes = t.nodes();
  std::vector<std::vector<PointId>> leaves(nodes.size());
  std::vector<std::size_t> order, stack{0};
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (std::size_t c : nodes[v].children) stack.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto& nd = nodes[*it];
    if (nd.leaf_point) {
      leaves[*it] = {*nd.leaf_point};
      continue;
    }
    ++out.checked;
    std::vector<PointId> merged;
    for (std::size_t c : nd.children) {
      if (!merged.empty()) {
        double total = static_cast<double>(merged.size() + leaves[c].size());
        auto check = verify_cut_budget(m, merged, leaves[c], total, 1.0, 1.0, nd.label, K);
        if (!check.pass) {
          out.failures.push_back({*it, "ultrametric cut budget", double(check.worst_count), check.worst_budget});
        }
      }
      merged.insert(merged.end(), leaves[c].begin(), leaves[c].end());
    }
    leaves[*it] = std::move(merged);
  }
  return out;
}

}  // namespace treebed
