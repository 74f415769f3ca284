#pragma once

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "treebed/error.hpp"

namespace treebed {

/// Monotone f on [1, inf) with integral of 1/f over [1, inf) equal to 1.
///
/// inverse_square: f(x) = x^2.
/// iterated_log(t, theta): f(x) = (1/theta) * prod_{j<t} log^(j)(x+s) * (log^(t)(x+s))^(1+theta),
/// where the shift s makes log^(t)(1+s) = 1. Substituting u = log^(t)(x+s) turns the integral
/// into (1/theta) * int_1^inf u^(-1-theta) du = 1.
class DensityFunction {
 public:
  enum class Kind { inverse_square, iterated_log };

  static DensityFunction inverse_square() { return DensityFunction(Kind::inverse_square, 0, 0.0); }

  static DensityFunction iterated_log(int t, double theta) {
    if (t < 1) throw InvalidArgument("iterated-log density needs t >= 1");
    if (!(theta > 0.0)) throw InvalidArgument("iterated-log density needs theta > 0");
    return DensityFunction(Kind::iterated_log, t, theta);
  }

  /// k * f; normalizes only when k = 1.
  DensityFunction scaled(double k) const {
    if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("density scale must be positive");
    DensityFunction out = *this;
    out.scale_ *= k;
    return out;
  }

  Kind kind() const noexcept { return kind_; }
  int t() const noexcept { return t_; }
  double theta() const noexcept { return theta_; }
  double shift() const noexcept { return shift_; }
  double normalizer() const noexcept { return chat_; }

  std::string describe() const {
    std::string name = kind_ == Kind::inverse_square
                           ? "inverse-square"
                           : "iterated-log(t=" + std::to_string(t_) + ",theta=" + std::to_string(theta_) + ")";
    return scale_ == 1.0 ? name : std::to_string(scale_) + "*" + name;
  }

  double operator()(double x) const {
    if (kind_ == Kind::inverse_square) return scale_ * x * x;
    double y = x + shift_;
    double prod = 1.0;
    for (int j = 0; j < t_; ++j) {
      prod *= y;
      y = std::log(y);
    }
    return scale_ * chat_ * prod * std::pow(y, 1.0 + theta_);
  }

  /// Integral of 1/f over [x, inf) in closed form.
  double tail(double x) const {
    if (kind_ == Kind::inverse_square) return 1.0 / (scale_ * x);
    double y = x + shift_;
    for (int j = 0; j < t_; ++j) y = std::log(y);
    return std::pow(y, -theta_) / (scale_ * chat_ * theta_);
  }

  /// Adaptive Gauss-Kronrod quadrature of 1/f over [1, upper], integrated in log-space.
  double integral_to(double upper) const {
    auto g = [this](double y) {
      double x = std::exp(y);
      return x / (*this)(x);
    };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, std::log(upper), 30,
                                                                         1e-13, &err);
  }

 private:
  DensityFunction(Kind kind, int t, double theta) : kind_(kind), t_(t), theta_(theta) {
    if (kind_ == Kind::iterated_log) {
      double base = 1.0;
      for (int j = 0; j < t_; ++j) base = std::exp(base);
      shift_ = base - 1.0;
      chat_ = 1.0 / theta_;
    }
  }

  Kind kind_;
  int t_;
  double theta_;
  double shift_ = 0.0;
  double chat_ = 1.0;
  double scale_ = 1.0;
};

/// Builds the density and checks it: f(1) >= 1 and quadrature plus tail within 1e-6 of 1.
inline DensityFunction make_density(const DensityFunction& f) {
  if (f(1.0) < 1.0) {
    throw InvalidArgument(f.describe() + " has f(1) = " + std::to_string(f(1.0)) + " < 1");
  }
  constexpr double upper = 1e12;
  double total = f.integral_to(upper) + f.tail(upper);
  if (!(std::abs(total - 1.0) <= 1e-6)) {
    throw Error(f.describe() + " does not normalize: integral of 1/f = " + std::to_string(total));
  }
  return f;
}

inline DensityFunction make_density(DensityFunction::Kind kind, int t = 1, double theta = 1.0) {
  return make_density(kind == DensityFunction::Kind::inverse_square
                          ? DensityFunction::inverse_square()
                          : DensityFunction::iterated_log(t, theta));
}

}  // namespace treebed
