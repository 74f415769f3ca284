#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/graph.hpp"

namespace treebed {

/// Anything with a finite point set and a symmetric, nonnegative distance on it.
/// Point ids are ambient ids; `points()` lists the members in increasing order.
template <class S>
concept PseudoMetric = requires(const S& s, PointId a, PointId b) {
  { s.points() } -> std::convertible_to<std::span<const PointId>>;
  { s.distance(a, b) } -> std::convertible_to<double>;
};

/// Dense symmetric distance matrix over points 0..n-1.
class MetricSpace {
 public:
  MetricSpace() = default;

  /// `d` is row-major n*n. Checks symmetry, zero diagonal and positivity off the diagonal;
  /// the triangle inequality is checked separately by `triangle_violation`.
  MetricSpace(std::size_t n, std::vector<double> d) : n_(n), d_(std::move(d)) {
    if (d_.size() != n_ * n_) throw InvalidArgument("distance matrix must have n*n entries");
    for (std::size_t i = 0; i < n_; ++i) {
      if (d_[i * n_ + i] != 0.0) {
        throw InvalidArgument("nonzero diagonal entry at point " + std::to_string(i));
      }
      for (std::size_t j = i + 1; j < n_; ++j) {
        double a = d_[i * n_ + j];
        if (a != d_[j * n_ + i]) {
          throw InvalidArgument("asymmetric distance between " + std::to_string(i) + " and " +
                                std::to_string(j));
        }
        if (!(a > 0.0) || !std::isfinite(a)) {
          throw InvalidArgument("distance between distinct points " + std::to_string(i) + " and " +
                                std::to_string(j) + " must be positive and finite");
        }
      }
    }
    ids_.resize(n_);
    std::iota(ids_.begin(), ids_.end(), PointId{0});
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const PointId> points() const noexcept { return ids_; }
  double distance(PointId a, PointId b) const noexcept { return d_[std::size_t{a} * n_ + b]; }
  double operator()(PointId a, PointId b) const noexcept { return distance(a, b); }
  std::span<const double> row(PointId a) const { return {d_.data() + std::size_t{a} * n_, n_}; }
  std::span<const double> data() const noexcept { return d_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
  std::vector<PointId> ids_;
};

/// Worst relative triangle-inequality violation max(d(x,y) - d(x,z) - d(z,y)) / diam over all
/// triples; <= 0 for a metric.
inline double triangle_violation(const MetricSpace& m) {
  double worst = -kInfinity;
  double scale = 0.0;
  for (double v : m.data()) scale = std::max(scale, v);
  if (scale == 0.0) return 0.0;
  const std::size_t n = m.size();
  for (PointId x = 0; x < n; ++x)
    for (PointId y = 0; y < n; ++y)
      for (PointId z = 0; z < n; ++z) worst = std::max(worst, m(x, y) - m(x, z) - m(z, y));
  return worst / scale;
}

/// Restriction of a metric space to a point subset, using the ambient distances.
class SubsetView {
 public:
  SubsetView(const MetricSpace& base, std::vector<PointId> points)
      : base_(&base), points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("induced submetric of an empty set");
    std::sort(points_.begin(), points_.end());
    for (PointId p : points_) {
      if (p >= base.size()) throw InvalidArgument("point " + std::to_string(p) + " not in the space");
    }
  }

  std::span<const PointId> points() const noexcept { return points_; }
  double distance(PointId a, PointId b) const noexcept { return base_->distance(a, b); }
  const MetricSpace& base() const noexcept { return *base_; }

 private:
  const MetricSpace* base_;
  std::vector<PointId> points_;
};

inline SubsetView induced_submetric(const MetricSpace& m, std::vector<PointId> subset) {
  return SubsetView(m, std::move(subset));
}

/// Cone pseudo-metric l(u,v) = |f(u) - f(v)| with potential f(v) = d(apex,v) - d(tip,v),
/// restricted to a point subset that contains the tip.
class ConeView {
 public:
  /// `apex_dist` and `tip_dist` are indexed by ambient point id.
  ConeView(std::vector<PointId> points, PointId apex, PointId tip, std::span<const double> apex_dist,
           std::span<const double> tip_dist)
      : points_(std::move(points)), apex_(apex), tip_(tip) {
    std::sort(points_.begin(), points_.end());
    if (!std::binary_search(points_.begin(), points_.end(), tip)) {
      throw InvalidArgument("cone tip " + std::to_string(tip) + " is not in the cone's point set");
    }
    std::size_t n = std::max(apex_dist.size(), tip_dist.size());
    potential_.assign(n, 0.0);
    for (PointId p : points_) {
      if (p >= apex_dist.size() || p >= tip_dist.size()) {
        throw InvalidArgument("cone point " + std::to_string(p) + " has no distance data");
      }
      if (!std::isfinite(apex_dist[p])) {
        throw InvalidArgument("cone point " + std::to_string(p) + " is unreachable from the apex");
      }
      potential_[p] = std::isfinite(tip_dist[p]) ? apex_dist[p] - tip_dist[p] : -kInfinity;
    }
  }

  std::span<const PointId> points() const noexcept { return points_; }
  /// Points the tip cannot reach (tip distance +inf) are infinitely far from every other point.
  double distance(PointId a, PointId b) const noexcept {
    if (a == b) return 0.0;
    if (std::isinf(potential_[a]) || std::isinf(potential_[b])) return kInfinity;
    return std::abs(potential_[a] - potential_[b]);
  }
  PointId apex() const noexcept { return apex_; }
  PointId tip() const noexcept { return tip_; }
  double potential(PointId p) const noexcept { return potential_[p]; }

 private:
  std::vector<PointId> points_;
  PointId apex_;
  PointId tip_;
  std::vector<double> potential_;
};

/// Cone metric of `m` on subset `subset` for apex `apex` (any point of m) and tip `tip`.
inline ConeView cone_metric(const MetricSpace& m, std::vector<PointId> subset, PointId apex,
                            PointId tip) {
  if (apex >= m.size()) throw InvalidArgument("cone apex outside the space");
  if (tip >= m.size()) throw InvalidArgument("cone tip outside the space");
  return ConeView(std::move(subset), apex, tip, m.row(apex), m.row(tip));
}

template <PseudoMetric S>
std::vector<PointId> ball(const S& space, PointId center, double radius, bool strict = false) {
  std::vector<PointId> out;
  for (PointId p : space.points()) {
    double d = space.distance(center, p);
    if (strict ? d < radius : d <= radius) out.push_back(p);
  }
  return out;
}

template <PseudoMetric S>
double radius_from(const S& space, PointId center) {
  auto pts = space.points();
  if (pts.empty()) throw InvalidArgument("radius of an empty space");
  double r = 0.0;
  for (PointId p : pts) r = std::max(r, static_cast<double>(space.distance(center, p)));
  return r;
}

template <PseudoMetric S>
double diameter(const S& space) {
  auto pts = space.points();
  if (pts.empty()) throw InvalidArgument("diameter of an empty space");
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, static_cast<double>(space.distance(pts[i], pts[j])));
  return best;
}

/// Diametral pair (first in lexicographic order of positions) and the diameter.
template <PseudoMetric S>
std::pair<std::pair<PointId, PointId>, double> diametral_pair(const S& space) {
  auto pts = space.points();
  if (pts.empty()) throw InvalidArgument("diameter of an empty space");
  std::pair<PointId, PointId> best{pts[0], pts[0]};
  double diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d = space.distance(pts[i], pts[j]);
      if (d > diam) {
        diam = d;
        best = {pts[i], pts[j]};
      }
    }
  return {best, diam};
}

/// Point u whose open ball of radius diam/2 holds at most half of the points.
/// Takes a diametral pair (x,y): their open diam/2-balls are disjoint, so one of them qualifies.
/// Ties go to the smaller id.
template <PseudoMetric S>
PointId find_half_center(const S& space) {
  auto [pair, diam] = diametral_pair(space);
  const std::size_t n = space.points().size();
  if (n == 1) return pair.first;
  auto [x, y] = pair;
  if (y < x) std::swap(x, y);
  const double half = diam / 2.0;
  if (2 * ball(space, x, half, true).size() <= n) return x;
  return y;
}

/// All-pairs shortest-path metric of a connected graph.
inline MetricSpace shortest_path_metric(const WeightedGraph& g) {
  const std::size_t n = g.size();
  std::vector<double> d(n * n);
  for (PointId s = 0; s < n; ++s) {
    auto row = dijkstra(g, s);
    for (PointId t = 0; t < n; ++t) {
      if (!std::isfinite(row[t])) throw DisconnectedGraph(s, t);
      d[std::size_t{s} * n + t] = row[t];
    }
  }
  // Dijkstra sums can differ in the last bit between directions; symmetrize.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double m = std::min(d[i * n + j], d[j * n + i]);
      d[i * n + j] = d[j * n + i] = m;
    }
  return MetricSpace(n, std::move(d));
}

/// Shortest-path metric of the subgraph induced by a vertex subset, stored densely over
/// the subset and addressed by ambient ids.
class ClusterMetric {
 public:
  ClusterMetric(const WeightedGraph& g, std::vector<PointId> points) : points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("cluster metric of an empty set");
    std::sort(points_.begin(), points_.end());
    local_.assign(g.size(), kNone);
    for (std::size_t i = 0; i < points_.size(); ++i) local_.at(points_[i]) = static_cast<PointId>(i);
    auto mask = membership(g.size(), points_);
    const std::size_t k = points_.size();
    d_.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      auto row = dijkstra(g, points_[i], mask);
      for (std::size_t j = 0; j < k; ++j) {
        double v = row[points_[j]];
        if (!std::isfinite(v)) throw DisconnectedGraph(points_[i], points_[j]);
        d_[i * k + j] = v;
      }
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        double m = std::min(d_[i * k + j], d_[j * k + i]);
        d_[i * k + j] = d_[j * k + i] = m;
      }
  }

  std::span<const PointId> points() const noexcept { return points_; }
  double distance(PointId a, PointId b) const noexcept {
    return d_[std::size_t{local_[a]} * points_.size() + local_[b]];
  }
  bool contains(PointId p) const noexcept { return p < local_.size() && local_[p] != kNone; }

 private:
  static constexpr PointId kNone = static_cast<PointId>(-1);
  std::vector<PointId> points_;
  std::vector<PointId> local_;
  std::vector<double> d_;
};

}  // namespace treebed
