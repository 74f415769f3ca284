#pragma once

// Shared machinery for choosing a cut radius around a center: the density level eps_hat and
// the greedy removal of radii whose thin shells hold too many points.
//
// Everything here works in shell coordinates s(w): the signed offset of point w from the
// origin of the admissible shell, measured in the direction the cut radius moves. A radius
// rho cuts off {w : s(w) <= rho} (outward cuts) or {w : s(w) < rho} (inward cuts).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treebed/error.hpp"
#include "treebed/graph.hpp"

namespace treebed {

struct ShellCutConfig {
  double length = 1.0;           // L: shell widths are multiples of sqrt(eps) * L
  double window = 150.0;         // K: thin-shell half-width is sqrt(eps) * L / K
  double mass = 1.0;             // M: point budget scale
  double eps_cap = 1.0;          // eps_hat is searched in (0, eps_cap]
  double domain_cap = kInfinity; // thin shells are checked for eps <= min(32 eps_hat, domain_cap)
  bool open_count = false;       // count s < sqrt(eps) L / 4 instead of s <= ...; allows eps_hat = 0
  double tol = 0.0;              // absolute slack on coordinate comparisons
};

struct Deletion {
  double r;
  double eps;
};

/// Record of one cut. `s_lo`, `s_hi`, the deletion centers and `rho` are shell coordinates;
/// `r` is the resulting radius in the space's own distances.
struct CutCertificate {
  PointId u = 0;
  double eps_hat = 0.0;
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::vector<Deletion> deleted;
  double rho = 0.0;
  double r = 0.0;
};

/// The greedy deletion removed every admissible radius. Never expected; carries the state.
class CutFailure : public Error {
 public:
  explicit CutFailure(CutCertificate cert)
      : Error("interval deletion emptied the admissible shell around point " +
              std::to_string(cert.u) + " (eps_hat=" + std::to_string(cert.eps_hat) + ")"),
        cert_(std::move(cert)) {}
  const CutCertificate& certificate() const noexcept { return cert_; }

 private:
  CutCertificate cert_;
};

namespace detail {

inline std::size_t shell_count(std::span<const double> sorted, double bound, bool open) {
  auto it = open ? std::lower_bound(sorted.begin(), sorted.end(), bound)
                 : std::upper_bound(sorted.begin(), sorted.end(), bound);
  return static_cast<std::size_t>(it - sorted.begin());
}

// Thin-shell check levels: the top of the domain, then every eps where the threshold
// sqrt(eps * eps_hat / 2) * M equals an integer m. Listed in descending eps.
struct Level {
  double eps;
  std::size_t required;  // a window holding this many points violates the bound
};

inline std::vector<Level> check_levels(double eps_hat, const ShellCutConfig& cfg, std::size_t n) {
  std::vector<Level> out;
  if (!(eps_hat > 0.0)) return out;
  const double top = std::min(32.0 * eps_hat, cfg.domain_cap);
  if (!(top > 0.0)) return out;
  double t = std::sqrt(top * eps_hat / 2.0) * cfg.mass;
  auto req = static_cast<std::size_t>(std::max(1.0, std::ceil(t - 1e-9)));
  if (req <= n) out.push_back({top, req});
  const double scale = 2.0 / (eps_hat * cfg.mass * cfg.mass);
  for (std::size_t m = std::min(n, req); m >= 1; --m) {
    double e = scale * static_cast<double>(m) * static_cast<double>(m);
    if (e < top * (1.0 - 1e-12)) out.push_back({e, m});
  }
  return out;
}

}  // namespace detail

/// Largest eps in (0, cap] with #{w : s(w) <= sqrt(eps) L / 4} >= eps * M (strict `<` when
/// `open_count`). Returns 0 when no positive eps qualifies, which only open counting allows.
inline double shell_epsilon_hat(std::span<const double> s, const ShellCutConfig& cfg) {
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> candidates{cfg.eps_cap};
  const std::size_t n = sorted.size();
  for (std::size_t k = 1; k <= n; ++k) candidates.push_back(static_cast<double>(k) / cfg.mass);
  for (double v : sorted) {
    if (v > 0.0) {
      double b = 4.0 * v / cfg.length;
      candidates.push_back(b * b);
    }
  }
  double best = 0.0;
  for (double e : candidates) {
    if (!(e > 0.0) || e > cfg.eps_cap || e <= best) continue;
    double bound = std::sqrt(e) * cfg.length / 4.0;
    auto count = detail::shell_count(sorted, cfg.open_count ? bound - cfg.tol : bound + cfg.tol,
                                     cfg.open_count);
    // count >= e * M, with a relative guard for e = k / M.
    if (static_cast<double>(count) >= e * cfg.mass * (1.0 - 1e-12)) best = e;
  }
  if (best == 0.0 && !cfg.open_count) {
    throw InvalidArgument("no positive density level: the center must lie inside its own shell");
  }
  return best;
}

/// Number of points whose coordinate is within the open thin shell of half-width h around rho.
inline std::size_t thin_shell_count(std::span<const double> sorted, double rho, double h) {
  auto lo = std::upper_bound(sorted.begin(), sorted.end(), rho - h);
  auto hi = std::lower_bound(sorted.begin(), sorted.end(), rho + h);
  return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

/// Picks rho in S = [(1/4 + 1/25), (1/2 - 1/25)] * sqrt(eps_hat) * L such that every thin shell
/// around rho stays under budget: #{|s - rho| < sqrt(eps) L / K} < sqrt(eps * eps_hat / 2) * M
/// for every eps in (0, min(32 eps_hat, domain_cap)].
inline CutCertificate shell_cut(std::span<const double> s, double eps_hat,
                                const ShellCutConfig& cfg) {
  CutCertificate cert;
  cert.eps_hat = eps_hat;
  const double root = std::sqrt(eps_hat) * cfg.length;
  cert.s_lo = (0.25 + 0.04) * root;
  cert.s_hi = (0.5 - 0.04) * root;
  if (!(eps_hat > 0.0)) {
    cert.s_lo = cert.s_hi = cert.rho = 0.0;
    return cert;
  }
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  struct Piece {
    double lo, hi;
  };
  std::vector<Piece> admissible{{cert.s_lo, cert.s_hi}};

  for (const auto& level : detail::check_levels(eps_hat, cfg, n)) {
    const double h = std::sqrt(level.eps) * cfg.length / cfg.window;
    const std::size_t m = level.required;
    for (;;) {
      // First admissible radius whose open thin shell holds at least m points.
      std::optional<double> witness;
      for (std::size_t i = 0; i + m <= n && !witness; ++i) {
        double a = sorted[i + m - 1] - h - cfg.tol;
        double b = sorted[i] + h + cfg.tol;
        if (a > b) continue;
        for (const Piece& p : admissible) {
          double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
          if (lo <= hi) {
            witness = 0.5 * (lo + hi);
            break;
          }
        }
      }
      if (!witness) break;
      const double w = *witness;
      cert.deleted.push_back({w, level.eps});
      std::vector<Piece> next;
      for (const Piece& p : admissible) {
        if (p.hi <= w - h || p.lo >= w + h) {
          next.push_back(p);
          continue;
        }
        if (p.lo <= w - h) next.push_back({p.lo, w - h});
        if (p.hi >= w + h) next.push_back({w + h, p.hi});
      }
      admissible = std::move(next);
      if (admissible.empty()) throw CutFailure(cert);
    }
  }
  const Piece* best = &admissible.front();
  for (const Piece& p : admissible)
    if (p.hi - p.lo > best->hi - best->lo) best = &p;
  cert.rho = 0.5 * (best->lo + best->hi);
  return cert;
}

/// Re-checks the thin-shell bound at rho for every check level. Returns the first violating
/// eps, or nothing when the certificate holds.
inline std::optional<double> audit_shell_cut(std::span<const double> s, const CutCertificate& cert,
                                             const ShellCutConfig& cfg) {
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  if (cert.eps_hat > 0.0 && (cert.rho < cert.s_lo || cert.rho > cert.s_hi)) return cert.eps_hat;
  for (const Deletion& d : cert.deleted) {
    double h = std::sqrt(d.eps) * cfg.length / cfg.window;
    if (std::abs(cert.rho - d.r) < h) return d.eps;
  }
  for (const auto& level : detail::check_levels(cert.eps_hat, cfg, sorted.size())) {
    double h = std::sqrt(level.eps) * cfg.length / cfg.window;
    if (thin_shell_count(sorted, cert.rho, h) >= level.required) return level.eps;
  }
  return std::nullopt;
}

}  // namespace treebed
