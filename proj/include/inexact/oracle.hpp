#pragma once

#include "inexact/core.hpp"

#include <algorithm>
#include <optional>

namespace inexact {

/// Simple convex term h of a composite model psi(y, x) = <g(x), y - x> + h(y) - h(x).
/// Each kind carries a closed-form proximal map.
class CompositeTerm {
 public:
  enum class Kind { none, l1, ball_indicator };

  CompositeTerm() = default;

  static CompositeTerm none() { return {}; }

  /// h(y) = weight * ||y||_1
  static CompositeTerm l1(double weight) {
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      throw std::invalid_argument("CompositeTerm::l1: weight must be nonnegative");
    }
    CompositeTerm t;
    t.kind_ = Kind::l1;
    t.weight_ = weight;
    return t;
  }

  /// h(y) = 0 inside the ball, +inf outside.
  static CompositeTerm ball_indicator(Vector center, double radius) {
    CompositeTerm t;
    t.kind_ = Kind::ball_indicator;
    t.ball_ = FeasibleSet::ball(std::move(center), radius);
    return t;
  }

  Kind kind() const { return kind_; }
  double weight() const { return weight_; }
  const FeasibleSet& ball() const { return ball_; }

  double value(const Vector& y) const {
    switch (kind_) {
      case Kind::none:
        return 0.0;
      case Kind::l1:
        return weight_ * y.lpNorm<1>();
      case Kind::ball_indicator:
        // Round-off slack keeps projected points inside.
        return ball_.contains(y, 1e-12) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  /// argmin_y { h(y) + ||y - u||^2 / (2 * step) }
  Vector prox(const Vector& u, double step) const {
    switch (kind_) {
      case Kind::none:
        return u;
      case Kind::l1: {
        const double thr = weight_ * step;
        return u.unaryExpr([thr](double v) {
          return v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
        });
      }
      case Kind::ball_indicator:
        return project(ball_, u);
    }
    return u;
  }

 private:
  Kind kind_ = Kind::none;
  double weight_ = 0.0;
  FeasibleSet ball_;
};

/// Constants an oracle may advertise. The adaptive methods never read them;
/// certificates, budgets and reports do.
struct OracleInfo {
  double gamma = 0.0;
  std::optional<double> known_Delta;
  std::optional<double> known_delta;
  std::optional<double> known_L;
  bool exact_values = true;  ///< f_delta == f
};

/// Supplies f_delta(x) and the model psi(y, x) = <g(x), y - x> + h(y) - h(x)
/// such that
///   f_delta(x) + psi(y,x) - gamma ||y-x|| <= f(y)
///                <= f_delta(x) + psi(y,x) + delta + Delta ||y-x|| + L V(y,x).
///
/// Implementations with internal randomness (noise injection) are not
/// thread-safe; create one instance per run.
class ModelOracle {
 public:
  virtual ~ModelOracle() = default;

  virtual Eigen::Index dim() const = 0;

  /// f_delta(x), the value the methods see.
  virtual double value(const Vector& x) const = 0;

  /// The vector defining the linear part of psi(., x); a (possibly inexact)
  /// gradient or subgradient of the smooth part.
  virtual Vector gradient(const Vector& x) const = 0;

  virtual const CompositeTerm& composite() const {
    static const CompositeTerm kNone;
    return kNone;
  }

  virtual OracleInfo info() const = 0;

  /// Exact objective value when known; used for reporting only.
  virtual double true_value(const Vector& x) const { return value(x); }

  double composite_part(const Vector& y) const { return composite().value(y); }

  Vector model_gradient_at(const Vector& x) const { return gradient(x); }

  /// psi(y, x). Queries the gradient at x, so noisy oracles draw fresh noise.
  double model(const Vector& y, const Vector& x) const {
    require_same_dim(y, x, "ModelOracle::model");
    const Vector g = gradient(x);
    return g.dot(y - x) + composite_part(y) - composite_part(x);
  }
};

/// One oracle query at a point, frozen so that a method's inner loop reuses
/// the same (possibly noisy) gradient across trials.
struct Linearization {
  Vector point;
  double value = 0.0;
  Vector gradient;
  const CompositeTerm* composite = nullptr;

  /// psi(y, point) with the frozen gradient.
  double model(const Vector& y) const {
    const double h = composite ? composite->value(y) - composite->value(point) : 0.0;
    return gradient.dot(y - point) + h;
  }
};

inline Linearization linearize(const ModelOracle& oracle, const Vector& x) {
  if (x.size() != oracle.dim()) {
    throw DimensionMismatch("linearize: point has dimension " + std::to_string(x.size()) +
                            ", oracle expects " + std::to_string(oracle.dim()));
  }
  Linearization lin{x, oracle.value(x), oracle.gradient(x), &oracle.composite()};
  return lin;
}

}  // namespace inexact
