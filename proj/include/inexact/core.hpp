#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>

namespace inexact {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The (prox setup, model) pair has no closed-form subproblem solver.
struct UnsupportedCombination : std::logic_error {
  using std::logic_error::logic_error;
};

/// A certificate term cannot be evaluated from the information at hand.
struct CertificateUnavailable : std::logic_error {
  using std::logic_error::logic_error;
};

/// Inputs to a bound are mutually inconsistent (e.g. a contraction factor
/// falls outside [0, 1)).
struct InconsistentBound : std::domain_error {
  using std::domain_error::domain_error;
};

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionMismatch(std::string(what) + ": dimension mismatch (" +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
  }
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Builds a vector from raw coordinates; rejects empty input and NaN/Inf.
inline Vector make_vector(std::span<const double> coords) {
  if (coords.empty()) throw std::invalid_argument("make_vector: empty coordinates");
  Vector v(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i])) {
      throw std::invalid_argument("make_vector: non-finite coordinate at index " +
                                  std::to_string(i));
    }
    v[static_cast<Eigen::Index>(i)] = coords[i];
  }
  return v;
}

inline Vector make_vector(std::initializer_list<double> coords) {
  return make_vector(std::span<const double>(coords.begin(), coords.size()));
}

// ---------------------------------------------------------------------------
// Feasible sets
// ---------------------------------------------------------------------------

struct WholeSpace {};

struct EuclideanBall {
  Vector center;
  double radius = 1.0;
};

class FeasibleSet {
 public:
  FeasibleSet() = default;

  static FeasibleSet whole_space() { return FeasibleSet(); }

  static FeasibleSet ball(Vector center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw std::invalid_argument("FeasibleSet::ball: radius must be positive and finite");
    }
    if (center.size() == 0 || !all_finite(center)) {
      throw std::invalid_argument("FeasibleSet::ball: center must be a finite nonempty vector");
    }
    FeasibleSet s;
    s.kind_ = EuclideanBall{std::move(center), radius};
    return s;
  }

  static FeasibleSet unit_ball(Eigen::Index dim) { return ball(Vector::Zero(dim), 1.0); }

  bool is_whole_space() const { return std::holds_alternative<WholeSpace>(kind_); }
  const EuclideanBall* as_ball() const { return std::get_if<EuclideanBall>(&kind_); }

  bool contains(const Vector& x, double slack = 0.0) const {
    if (const auto* b = as_ball()) {
      require_same_dim(x, b->center, "FeasibleSet::contains");
      return (x - b->center).norm() <= b->radius + slack;
    }
    return true;
  }

  /// Largest euclidean distance from x to a point of the set (infinite for
  /// the whole space).
  double max_distance_from(const Vector& x) const {
    if (const auto* b = as_ball()) return (x - b->center).norm() + b->radius;
    return std::numeric_limits<double>::infinity();
  }

 private:
  std::variant<WholeSpace, EuclideanBall> kind_;
};

/// Euclidean projection onto the ball {y : ||y - center|| <= radius}.
inline Vector project_ball(const Vector& x, const Vector& center, double radius) {
  require_same_dim(x, center, "project_ball");
  if (!(radius > 0.0)) throw std::invalid_argument("project_ball: radius must be positive");
  const Vector diff = x - center;
  const double dist = diff.norm();
  if (dist <= radius) return x;
  // Pull rounding overshoot back inside so that projecting again is a no-op.
  double scale = radius / dist;
  Vector y = center + scale * diff;
  for (int i = 0; i < 64 && (y - center).norm() > radius; ++i) {
    scale = std::nextafter(scale, 0.0) * (1.0 - std::numeric_limits<double>::epsilon());
    y = center + scale * diff;
  }
  return y;
}

inline Vector project(const FeasibleSet& set, const Vector& x) {
  if (const auto* b = set.as_ball()) return project_ball(x, b->center, b->radius);
  return x;
}

// ---------------------------------------------------------------------------
// Bregman setup
// ---------------------------------------------------------------------------

/// Distance-generating function d. Only d(x) = ||x||^2 / 2 is implemented;
/// new kinds must also teach model_step how to solve their subproblem.
enum class Generator { euclidean };

struct ProxSetup {
  Generator generator = Generator::euclidean;
  FeasibleSet set;

  static ProxSetup euclidean(FeasibleSet set = FeasibleSet::whole_space()) {
    return ProxSetup{Generator::euclidean, std::move(set)};
  }
};

/// V(y, x) = d(y) - d(x) - <grad d(x), y - x>.
inline double bregman_divergence(const ProxSetup& setup, const Vector& y, const Vector& x) {
  require_same_dim(y, x, "bregman_divergence");
  if (const auto* b = setup.set.as_ball()) require_same_dim(y, b->center, "bregman_divergence");
  switch (setup.generator) {
    case Generator::euclidean:
      return 0.5 * (y - x).squaredNorm();
  }
  throw UnsupportedCombination("bregman_divergence: unknown generator");
}

// ---------------------------------------------------------------------------
// Adaptive (L, delta, Delta) triple
// ---------------------------------------------------------------------------

struct AdaptiveTriple {
  double L = 1.0;
  double delta = 0.0;
  double Delta = 0.0;

  friend bool operator==(const AdaptiveTriple&, const AdaptiveTriple&) = default;
};

inline AdaptiveTriple make_triple(double L, double delta, double Delta) {
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("AdaptiveTriple: L must be positive");
  if (!(delta >= 0.0) || !(Delta >= 0.0)) {
    throw std::invalid_argument("AdaptiveTriple: delta and Delta must be nonnegative");
  }
  return {L, delta, Delta};
}

/// Joint halving/doubling. Multiplying by a power of two is exact in binary
/// floating point, so ratios between the components are preserved bitwise.
inline AdaptiveTriple scale_triple(const AdaptiveTriple& t, double factor) {
  if (factor != 0.5 && factor != 2.0) {
    throw std::invalid_argument("scale_triple: factor must be 0.5 or 2");
  }
  return {t.L * factor, t.delta * factor, t.Delta * factor};
}

}  // namespace inexact
