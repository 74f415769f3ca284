#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/metric.hpp"
#include "treebed/spanning_tree.hpp"
#include "treebed/ultrametric.hpp"

namespace treebed {

inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

/// Dense all-pairs distances of an embedding target, addressed like a metric.
class PairTable {
 public:
  PairTable() = default;
  explicit PairTable(std::size_t n) : n_(n), d_(n * n, 0.0) {}
  std::size_t size() const noexcept { return n_; }
  double operator()(PointId a, PointId b) const noexcept { return d_[std::size_t{a} * n_ + b]; }
  double& at(PointId a, PointId b) noexcept { return d_[std::size_t{a} * n_ + b]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

inline PairTable tree_all_pairs(const SpanningTree& t) {
  PairTable out(t.size());
  for (PointId s = 0; s < t.size(); ++s) {
    auto row = t.distances_from(s);
    for (PointId v = 0; v < t.size(); ++v) out.at(s, v) = row[v];
  }
  return out;
}

/// Leaf distances by merging children's leaf sets bottom-up: every cross pair of two children
/// gets the parent's label.
inline PairTable tree_all_pairs(const UltrametricTree& t) {
  PairTable out(t.size());
  auto nodes = t.nodes();
  std::vector<std::vector<PointId>> leaves(nodes.size());
  std::vector<std::size_t> order;
  std::vector<std::size_t> stack{0};
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
    std::vector<PointId> merged;
    for (std::size_t c : nd.children) {
      for (PointId a : merged)
        for (PointId b : leaves[c]) out.at(a, b) = out.at(b, a) = nd.label;
      merged.insert(merged.end(), leaves[c].begin(), leaves[c].end());
      std::vector<PointId>().swap(leaves[c]);
    }
    leaves[*it] = std::move(merged);
  }
  return out;
}

/// Ratios embedded(x,y) / d(x,y) over unordered pairs x < y in lexicographic order.
template <class Embedded>
std::vector<double> pairwise_distortions(const MetricSpace& base, const Embedded& embedded) {
  const std::size_t n = base.size();
  std::vector<double> out;
  out.reserve(pair_count(n));
  for (PointId x = 0; x < n; ++x)
    for (PointId y = x + 1; y < n; ++y) {
      double d = base(x, y);
      if (!(d > 0.0)) {
        throw InvalidArgument("points " + std::to_string(x) + " and " + std::to_string(y) +
                              " coincide; distortion is undefined");
      }
      out.push_back(static_cast<double>(embedded(x, y)) / d);
    }
  return out;
}

/// Number of ratios below 1 (beyond 1e-9 rounding): the embedding contracts those pairs.
inline std::size_t count_contractions(std::span<const double> values) {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                [](double v) { return v < 1.0 - 1e-9; }));
}

/// Power mean of the ratios; q = infinity gives the maximum.
inline double lq_distortion(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidArgument("no pair distortions to aggregate");
  if (!(q >= 1.0)) throw InvalidArgument("q must be at least 1");
  if (std::isinf(q)) return *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::pow(v, q);
  return std::pow(sum / static_cast<double>(values.size()), 1.0 / q);
}

/// Ratios sorted descending; rank k (1-based) sits at eps_k = k / C(n,2).
class ScalingProfile {
 public:
  ScalingProfile(std::vector<double> values, std::size_t n) : sorted_(std::move(values)), n_(n) {
    if (n < 2 || sorted_.size() != pair_count(n)) {
      throw InvalidArgument("profile needs exactly C(n,2) values for n >= 2");
    }
    std::sort(sorted_.begin(), sorted_.end(), std::greater<>());
  }

  std::size_t pairs() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }
  double epsilon(std::size_t rank) const { return static_cast<double>(rank) / static_cast<double>(pairs()); }

  /// Smallest bound valid once the worst floor(eps * C(n,2)) pairs are excluded.
  double alpha(double eps) const {
    double raw = std::floor(eps * static_cast<double>(pairs()) + 1e-9);
    auto excluded = static_cast<std::size_t>(std::clamp(raw, 0.0, static_cast<double>(pairs() - 1)));
    return sorted_[excluded];
  }

 private:
  std::vector<double> sorted_;
  std::size_t n_;
};

inline ScalingProfile scaling_profile(std::vector<double> values, std::size_t n) {
  return ScalingProfile(std::move(values), n);
}

/// #{pairs with ratio > K / sqrt(eps)}.
inline std::size_t count_bad_pairs(std::span<const double> values, double eps, double K) {
  const double threshold = K / std::sqrt(eps);
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                [&](double v) { return v > threshold * (1.0 + 1e-9); }));
}

template <class Embedded>
std::size_t count_bad_pairs(const MetricSpace& base, const Embedded& embedded, double eps, double K) {
  auto values = pairwise_distortions(base, embedded);
  return count_bad_pairs(values, eps, K);
}

struct ScalingCheck {
  bool pass = true;
  double worst_eps = 0.0;  // eps with the smallest budget / count ratio
  double margin = std::numeric_limits<double>::infinity();  // min budget / count
  std::size_t worst_count = 0;
  std::size_t checked = 0;
};

/// Checks #{ratio > K/sqrt(eps)} <= eps C(n,2) for all eps in (0,1]. Both sides are step or
/// linear in eps; it is enough to look just right of each eps where a ratio crosses the
/// threshold, eps_v = (K/v)^2, and at the rank points k / C(n,2).
inline ScalingCheck check_scaling_guarantee(std::span<const double> values, double K) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double pairs = static_cast<double>(sorted.size());
  ScalingCheck out;
  auto consider = [&](double eps, std::size_t count) {
    ++out.checked;
    if (count == 0) return;
    double budget = eps * pairs;
    double ratio = budget / static_cast<double>(count);
    if (ratio < out.margin) {
      out.margin = ratio;
      out.worst_eps = eps;
      out.worst_count = count;
    }
    if (static_cast<double>(count) > budget * (1.0 + 1e-12)) out.pass = false;
  };
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double v = sorted[i];
    if (v <= K) break;
    if (i > 0 && sorted[i - 1] == v) continue;
    double eps = (K / v) * (K / v);
    // Right limit: every ratio >= v (up to rounding) counts.
    auto count = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), v * (1.0 - 1e-9), std::greater<>()) - sorted.begin());
    consider(eps, count);
  }
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    double eps = static_cast<double>(k) / pairs;
    const double threshold = K / std::sqrt(eps) * (1.0 + 1e-9);
    auto count = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), threshold, std::greater<>()) - sorted.begin());
    consider(eps, count);
  }
  return out;
}

template <class Embedded>
ScalingCheck check_scaling_guarantee(const MetricSpace& base, const Embedded& embedded, double K) {
  auto values = pairwise_distortions(base, embedded);
  return check_scaling_guarantee(values, K);
}

struct BudgetCheck {
  bool pass = true;
  double worst_eps = 0.0;
  std::size_t worst_count = 0;
  double worst_budget = 0.0;
};

/// Separated close pairs of a cut P = (Z, Zbar) against eps |Z| (n - |Z|) beta, where a pair
/// is close at eps when its distance is <= sqrt(eps) * lambda_hat / scale. Checked at every
/// eps in (0, eps_max] where some cross pair becomes close.
template <PseudoMetric S>
BudgetCheck verify_cut_budget(const S& space, std::span<const PointId> Z, std::span<const PointId> Zbar,
                              double n, double beta, double eps_max, double lambda_hat, double scale) {
  BudgetCheck out;
  if (Z.empty() || Zbar.empty()) return out;
  std::vector<double> cross;
  cross.reserve(Z.size() * Zbar.size());
  for (PointId a : Z)
    for (PointId b : Zbar) cross.push_back(space.distance(a, b));
  std::sort(cross.begin(), cross.end());
  const double weight = static_cast<double>(Z.size()) * (n - static_cast<double>(Z.size())) * beta;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cross.size(); ++i) {
    if (i + 1 < cross.size() && cross[i + 1] == cross[i]) continue;
    double t = scale * cross[i] / lambda_hat;
    double eps = t * t;
    if (eps > eps_max) break;
    std::size_t count = i + 1;
    double budget = eps * weight;
    double ratio = budget / static_cast<double>(count);
    if (ratio < worst) {
      worst = ratio;
      out.worst_eps = eps;
      out.worst_count = count;
      out.worst_budget = budget;
    }
    if (static_cast<double>(count) > budget * (1.0 + 1e-9)) out.pass = false;
  }
  return out;
}

/// Budget of one decompose call: close means distance <= sqrt(eps) lambda_hat / (K C),
/// checked for eps <= min(eps_lim, 1).
template <PseudoMetric S>
BudgetCheck verify_decompose_budget(const S& space, std::span<const PointId> Z, std::span<const PointId> Zbar,
                                    double n_reset, double beta, double eps_lim, double lambda_hat,
                                    double K = 150.0, double C = constants::C) {
  return verify_cut_budget(space, Z, Zbar, n_reset, beta, std::min(eps_lim, 1.0), lambda_hat, K * C);
}

struct BadCount {
  double eps = 0.0;
  double threshold = 0.0;
  std::size_t count = 0;
  double budget = 0.0;
};

enum class CheckState { pass, fail, not_applicable };

inline const char* to_string(CheckState s) {
  switch (s) {
    case CheckState::pass: return "pass";
    case CheckState::fail: return "fail";
    default: return "n/a";
  }
}

struct DistortionReport {
  std::size_t n = 0;
  std::vector<double> values;                   // per unordered pair, lexicographic
  std::vector<std::pair<std::string, double>> lq;  // keyed "1", "2", "inf", ...
  std::vector<BadCount> bad_counts;
  ScalingCheck scaling;
  CheckState scaling_state = CheckState::not_applicable;
  CheckState radius_state = CheckState::not_applicable;
  CheckState budget_state = CheckState::not_applicable;
  std::size_t contractions = 0;
};

inline std::string q_label(double q) {
  if (std::isinf(q)) return "inf";
  std::ostringstream ss;
  ss << q;
  return ss.str();
}

/// l_q aggregates, bad-pair counts at eps = 2^-k down to 1 / C(n,2) plus the tightest eps, and
/// the scaling check for constant K.
inline DistortionReport make_report(std::vector<double> values, std::size_t n, double K,
                                    std::span<const double> qs = {}) {
  DistortionReport r;
  r.n = n;
  r.values = std::move(values);
  r.contractions = count_contractions(r.values);
  std::vector<double> q_list(qs.begin(), qs.end());
  if (q_list.empty()) q_list = {1.0, 2.0, std::numeric_limits<double>::infinity()};
  if (!r.values.empty()) {
    for (double q : q_list) r.lq.emplace_back(q_label(q), lq_distortion(r.values, q));
  }
  const double pairs = static_cast<double>(r.values.size());
  auto add = [&](double eps) {
    r.bad_counts.push_back({eps, K / std::sqrt(eps), count_bad_pairs(r.values, eps, K), eps * pairs});
  };
  if (!r.values.empty()) {
    for (double eps = 1.0; eps * pairs >= 1.0 - 1e-12; eps /= 2.0) add(eps);
    r.scaling = check_scaling_guarantee(r.values, K);
    if (r.scaling.worst_count > 0) add(r.scaling.worst_eps);
    r.scaling_state = r.scaling.pass ? CheckState::pass : CheckState::fail;
  }
  return r;
}

}  // namespace treebed
