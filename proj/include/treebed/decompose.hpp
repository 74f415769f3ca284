#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/metric.hpp"
#include "treebed/shell_cut.hpp"

namespace treebed {

namespace constants {
inline constexpr double c = 2.0 * std::numbers::e;
inline constexpr double c_prime = std::numbers::e * (2.0 * std::numbers::e + 1.0);
inline constexpr double c_hat = 22.0;
inline const double C = 8.0 * std::sqrt(c * c_hat);
inline const double C_hat = 150.0 * C * c_prime;
}  // namespace constants

struct DecomposeParams {
  double lambda_hat = 1.0;  // radius of the cluster being partitioned
  double theta = 0.0;       // the cut radius lies in [theta, theta + alpha] * lambda_hat
  double n_reset = 1.0;     // size of the last reset cluster
  double eps_lim = 1.0;
  double beta = 1.0;
  double window = 150.0;
  double C = constants::C;

  double alpha() const { return std::sqrt(eps_lim) / C; }
};

struct DecomposeCertificate {
  CutCertificate cut;  // shell coordinates measured from `origin`, outward in case 1, inward in case 2
  int which_case = 1;
  double theta = 0.0;
  double alpha = 0.0;
  double origin = 0.0;
  std::size_t inside = 0;
  std::size_t outside = 0;
};

struct DecomposeResult {
  std::vector<PointId> inside;   // Z, the closed ball around u
  std::vector<PointId> outside;  // the rest of W
  DecomposeCertificate cert;
};

namespace detail {

inline ShellCutConfig decompose_config(const DecomposeParams& p, bool inward) {
  ShellCutConfig cfg;
  cfg.length = p.lambda_hat / p.C;
  cfg.window = p.window;
  cfg.mass = p.n_reset * p.beta;
  cfg.eps_cap = p.eps_lim;
  cfg.domain_cap = p.eps_lim;
  cfg.open_count = inward;
  cfg.tol = 1e-12 * p.lambda_hat;
  return cfg;
}

}  // namespace detail

/// Shell coordinates for a decompose certificate, in the order of `dist_from_u` over W.
inline std::vector<double> decompose_coordinates(std::span<const PointId> W,
                                                 std::span<const double> dist_from_u,
                                                 const DecomposeCertificate& cert) {
  std::vector<double> s;
  s.reserve(W.size());
  for (PointId w : W) {
    double d = dist_from_u[w];
    s.push_back(cert.which_case == 1 ? d - cert.origin : cert.origin - d);
  }
  return s;
}

/// Ball cut of W around u with radius r / lambda_hat in [theta, theta + alpha] whose separated
/// close pairs stay within eps |Z| (n_reset - |Z|) beta for every eps in (0, eps_lim].
/// `dist_from_u` is indexed by ambient point id.
inline DecomposeResult decompose(std::span<const PointId> W, PointId u,
                                 std::span<const double> dist_from_u, const DecomposeParams& p) {
  const double size = static_cast<double>(W.size());
  if (W.empty()) throw InvalidArgument("decompose: empty point set");
  if (!(p.lambda_hat > 0.0)) throw InvalidArgument("decompose: cluster radius must be positive");
  if (!(p.beta > 0.0)) throw InvalidArgument("decompose: beta must be positive");
  if (p.n_reset < size) {
    throw InvalidArgument("decompose: n_reset = " + std::to_string(p.n_reset) +
                          " is smaller than |W| = " + std::to_string(W.size()));
  }
  if (p.eps_lim < size / (p.beta * p.n_reset) * (1.0 - 1e-9)) {
    throw InvalidArgument("decompose: eps_lim = " + std::to_string(p.eps_lim) +
                          " is below |W| / (beta n_reset) = " +
                          std::to_string(size / (p.beta * p.n_reset)));
  }
  bool has_u = false;
  for (PointId w : W) has_u = has_u || w == u;
  if (!has_u) throw InvalidArgument("decompose: center " + std::to_string(u) + " is not in W");

  const double tol = 1e-12 * p.lambda_hat;
  const double alpha = p.alpha();
  DecomposeResult out;
  DecomposeCertificate& cert = out.cert;
  cert.theta = p.theta;
  cert.alpha = alpha;
  cert.cut.u = u;

  if (W.size() == 1) {
    cert.origin = p.theta * p.lambda_hat;
    cert.cut.r = cert.origin;
  } else {
    std::size_t middle = 0;
    for (PointId w : W) middle += dist_from_u[w] <= (p.theta + alpha / 2.0) * p.lambda_hat + tol;
    const bool inward = 2.0 * static_cast<double>(middle) > p.n_reset;
    cert.which_case = inward ? 2 : 1;
    cert.origin = (inward ? p.theta + alpha : p.theta) * p.lambda_hat;
    auto cfg = detail::decompose_config(p, inward);
    auto s = decompose_coordinates(W, dist_from_u, cert);
    const double eps_hat = shell_epsilon_hat(s, cfg);
    try {
      cert.cut = shell_cut(s, eps_hat, cfg);
    } catch (CutFailure& f) {
      CutCertificate c = f.certificate();
      c.u = u;
      throw CutFailure(std::move(c));
    }
    cert.cut.u = u;
    cert.cut.r = inward ? cert.origin - cert.cut.rho : cert.origin + cert.cut.rho;
  }
  for (PointId w : W) (dist_from_u[w] <= cert.cut.r + tol ? out.inside : out.outside).push_back(w);
  cert.inside = out.inside.size();
  cert.outside = out.outside.size();
  return out;
}

template <PseudoMetric S>
DecomposeResult decompose(const S& space, PointId u, const DecomposeParams& p) {
  auto pts = space.points();
  PointId top = 0;
  for (PointId w : pts) top = std::max(top, w);
  std::vector<double> dist(std::size_t{top} + 1, kInfinity);
  for (PointId w : pts) dist[w] = space.distance(u, w);
  return decompose(pts, u, dist, p);
}

/// Re-checks the thin-shell certificate of a decompose call.
inline std::optional<double> audit_decompose_certificate(std::span<const PointId> W,
                                                         std::span<const double> dist_from_u,
                                                         const DecomposeCertificate& cert,
                                                         const DecomposeParams& p) {
  if (W.size() <= 1) return std::nullopt;
  auto cfg = detail::decompose_config(p, cert.which_case == 2);
  auto s = decompose_coordinates(W, dist_from_u, cert);
  return audit_shell_cut(s, cert.cut, cfg);
}

}  // namespace treebed
