#pragma once

// Test objectives packaged as model oracles: the sum-of-distances-to-balls
// problem, the smallest covering ball, least-squares quadratics (PL without
// strong convexity when rank deficient), composites, and a noise-injecting
// wrapper.

#include "inexact/core.hpp"
#include "inexact/oracle.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace inexact {

// ---------------------------------------------------------------------------
// Sum of distances to balls
// ---------------------------------------------------------------------------

struct BallSumProblem {
  std::vector<Vector> centers;
  double ball_radius = 1.0;
  FeasibleSet feasible;
  std::optional<double> f_star;

  Eigen::Index dim() const { return centers.empty() ? 0 : centers.front().size(); }
};

inline void check_points(const std::vector<Vector>& pts, const char* what) {
  if (pts.empty()) throw std::invalid_argument(std::string(what) + ": needs at least one point");
  for (const auto& p : pts) require_same_dim(p, pts.front(), what);
}

/// sum_k max(||x - a_k|| - radius, 0)
inline double fts_value(const BallSumProblem& p, const Vector& x) {
  double total = 0.0;
  for (const auto& a : p.centers) {
    require_same_dim(x, a, "fts_value");
    total += std::max((x - a).norm() - p.ball_radius, 0.0);
  }
  return total;
}

/// Sum over active terms (||x - a_k|| > radius) of the unit vectors (x - a_k)/||x - a_k||.
inline Vector fts_subgradient(const BallSumProblem& p, const Vector& x) {
  Vector g = Vector::Zero(x.size());
  for (const auto& a : p.centers) {
    require_same_dim(x, a, "fts_subgradient");
    const Vector d = x - a;
    const double dn = d.norm();
    if (dn > p.ball_radius) g += d / dn;
  }
  return g;
}

class BallSumOracle final : public ModelOracle {
 public:
  explicit BallSumOracle(std::shared_ptr<const BallSumProblem> p) : p_(std::move(p)) {
    check_points(p_->centers, "BallSumOracle");
  }
  Eigen::Index dim() const override { return p_->dim(); }
  double value(const Vector& x) const override { return fts_value(*p_, x); }
  Vector gradient(const Vector& x) const override { return fts_subgradient(*p_, x); }
  OracleInfo info() const override { return {}; }
  const BallSumProblem& problem() const { return *p_; }

 private:
  std::shared_ptr<const BallSumProblem> p_;
};

// ---------------------------------------------------------------------------
// Smallest covering ball
// ---------------------------------------------------------------------------

struct MinMaxBallProblem {
  std::vector<Vector> points;
  FeasibleSet feasible;

  Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }
};

/// max_k ||x - a_k||
inline double covering_value(const MinMaxBallProblem& p, const Vector& x) {
  check_points(p.points, "covering_value");
  double best = -1.0;
  for (const auto& a : p.points) {
    require_same_dim(x, a, "covering_value");
    best = std::max(best, (x - a).norm());
  }
  return best;
}

/// Unit vector towards x from the lowest-index farthest point; zero when x
/// coincides with it.
inline Vector covering_subgradient(const MinMaxBallProblem& p, const Vector& x) {
  check_points(p.points, "covering_subgradient");
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t j = 0; j < p.points.size(); ++j) {
    require_same_dim(x, p.points[j], "covering_subgradient");
    const double d = (x - p.points[j]).norm();
    if (d > best) {
      best = d;
      arg = j;
    }
  }
  if (best == 0.0) return Vector::Zero(x.size());
  return (x - p.points[arg]) / best;
}

/// Largest pairwise half-distance: a lower bound on the covering radius.
inline double covering_lower_bound(const MinMaxBallProblem& p) {
  double lb = 0.0;
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    for (std::size_t j = i + 1; j < p.points.size(); ++j) {
      lb = std::max(lb, 0.5 * (p.points[i] - p.points[j]).norm());
    }
  }
  return lb;
}

class CoveringOracle final : public ModelOracle {
 public:
  explicit CoveringOracle(std::shared_ptr<const MinMaxBallProblem> p) : p_(std::move(p)) {
    check_points(p_->points, "CoveringOracle");
  }
  Eigen::Index dim() const override { return p_->dim(); }
  double value(const Vector& x) const override { return covering_value(*p_, x); }
  Vector gradient(const Vector& x) const override { return covering_subgradient(*p_, x); }
  OracleInfo info() const override { return {}; }
  const MinMaxBallProblem& problem() const { return *p_; }

 private:
  std::shared_ptr<const MinMaxBallProblem> p_;
};

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

namespace detail {

/// Points r * u with u uniform on the sphere and r uniform on (r_lo, r_hi);
/// draws whose rounded norm leaves the open interval are redrawn.
inline std::vector<Vector> shell_points(Eigen::Index n, int m, double r_lo, double r_hi, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("generate: n and m must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> radius(r_lo, r_hi);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(m));
  Vector u(n);
  while (static_cast<int>(pts.size()) < m) {
    for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
    const double un = u.norm();
    if (!(un > 0.0)) continue;
    Vector a = (radius(rng) / un) * u;
    const double an = a.norm();
    if (an > r_lo && an < r_hi) pts.push_back(std::move(a));
  }
  return pts;
}

}  // namespace detail

/// Centres with 1 < ||a_k|| < 1.5, unit balls, feasible set the unit ball.
inline BallSumProblem generate_task1(Eigen::Index n, int m, std::uint64_t seed) {
  BallSumProblem p;
  p.centers = detail::shell_points(n, m, 1.0, 1.5, seed);
  p.ball_radius = 1.0;
  p.feasible = FeasibleSet::unit_ball(n);
  return p;
}

/// Points with 0.5 < ||a_k|| < 1, feasible set the unit ball.
inline MinMaxBallProblem generate_task2(Eigen::Index n, int m, std::uint64_t seed) {
  MinMaxBallProblem p;
  p.points = detail::shell_points(n, m, 0.5, 1.0, seed);
  p.feasible = FeasibleSet::unit_ball(n);
  return p;
}

// ---------------------------------------------------------------------------
// Least-squares quadratics
// ---------------------------------------------------------------------------

/// f(x) = ||Ax - b||^2 / 2 with spectral constants of A^T A.
struct PLQuadratic {
  Matrix A;
  Vector b;
  double mu = 0.0;     ///< smallest positive eigenvalue of A^T A
  double L = 0.0;      ///< largest eigenvalue
  double f_star = 0.0;
  Vector x_star;       ///< minimum-norm minimiser

  double value(const Vector& x) const { return 0.5 * (A * x - b).squaredNorm(); }
  Vector gradient(const Vector& x) const { return A.transpose() * (A * x - b); }
};

inline PLQuadratic pl_quadratic_make(Matrix A, Vector b) {
  if (A.rows() != b.size()) throw DimensionMismatch("pl_quadratic_make: rows of A must match b");
  if (A.size() == 0 || A.isZero(0.0)) throw std::invalid_argument("pl_quadratic_make: A must be nonzero");
  if (!A.allFinite() || !b.allFinite()) throw std::invalid_argument("pl_quadratic_make: non-finite data");

  PLQuadratic q;
  const Matrix gram = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  q.L = ev.maxCoeff();
  const double tol = q.L * 1e-10 * static_cast<double>(std::max(A.rows(), A.cols()));
  q.mu = q.L;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > tol) q.mu = std::min(q.mu, ev[i]);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
  cod.setThreshold(1e-10);
  q.x_star = cod.solve(b);
  q.A = std::move(A);
  q.b = std::move(b);
  q.f_star = q.value(q.x_star);
  return q;
}

/// Random r x n least-squares problem of the given rank whose nonzero
/// singular values are spread log-uniformly over [1, sqrt(cond)], so that
/// L / mu = cond exactly. b has a component outside the range of A.
inline PLQuadratic random_pl_quadratic(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, double cond,
                                       std::uint64_t seed) {
  if (rank < 1 || rank > std::min(rows, cols)) throw std::invalid_argument("random_pl_quadratic: bad rank");
  if (!(cond >= 1.0)) throw std::invalid_argument("random_pl_quadratic: cond must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Matrix M(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) M(i, j) = normal(rng);
    return M;
  };
  const Matrix U = Eigen::HouseholderQR<Matrix>(gaussian(rows, rank)).householderQ() * Matrix::Identity(rows, rank);
  const Matrix V = Eigen::HouseholderQR<Matrix>(gaussian(cols, rank)).householderQ() * Matrix::Identity(cols, rank);
  Vector s(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    const double t = rank == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(rank - 1);
    s[i] = std::pow(cond, 0.5 * t);
  }
  Matrix A = U * s.asDiagonal() * V.transpose();
  Vector b = gaussian(rows, 1).col(0);
  return pl_quadratic_make(std::move(A), std::move(b));
}

class QuadraticOracle final : public ModelOracle {
 public:
  explicit QuadraticOracle(std::shared_ptr<const PLQuadratic> q) : q_(std::move(q)) {}
  Eigen::Index dim() const override { return q_->A.cols(); }
  double value(const Vector& x) const override {
    if (x.size() != dim()) throw DimensionMismatch("QuadraticOracle: dimension mismatch");
    return q_->value(x);
  }
  Vector gradient(const Vector& x) const override {
    if (x.size() != dim()) throw DimensionMismatch("QuadraticOracle: dimension mismatch");
    return q_->gradient(x);
  }
  OracleInfo info() const override {
    OracleInfo i;
    i.known_L = q_->L;
    i.known_Delta = 0.0;
    i.known_delta = 0.0;
    return i;
  }
  const PLQuadratic& problem() const { return *q_; }

 private:
  std::shared_ptr<const PLQuadratic> q_;
};

/// f(x) = ||x - c||^2 / 2.
inline PLQuadratic centered_quadratic(const Vector& c) {
  return pl_quadratic_make(Matrix::Identity(c.size(), c.size()), c);
}

// ---------------------------------------------------------------------------
// Callable-backed oracle
// ---------------------------------------------------------------------------

class LambdaOracle final : public ModelOracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;

  LambdaOracle(Eigen::Index dim, ValueFn f, GradFn g, OracleInfo info = {})
      : dim_(dim), f_(std::move(f)), g_(std::move(g)), info_(info) {}
  Eigen::Index dim() const override { return dim_; }
  double value(const Vector& x) const override { return f_(x); }
  Vector gradient(const Vector& x) const override { return g_(x); }
  OracleInfo info() const override { return info_; }

 private:
  Eigen::Index dim_;
  ValueFn f_;
  GradFn g_;
  OracleInfo info_;
};

// ---------------------------------------------------------------------------
// Composite
// ---------------------------------------------------------------------------

/// f = g + h with model psi(y,x) = <grad~ g(x), y - x> + h(y) - h(x).
class CompositeOracle final : public ModelOracle {
 public:
  CompositeOracle(std::shared_ptr<const ModelOracle> smooth, CompositeTerm h)
      : g_(std::move(smooth)), h_(std::move(h)) {
    if (g_->composite().kind() != CompositeTerm::Kind::none) {
      throw UnsupportedCombination("CompositeOracle: smooth part already carries a composite term");
    }
  }
  Eigen::Index dim() const override { return g_->dim(); }
  double value(const Vector& x) const override { return g_->value(x) + h_.value(x); }
  double true_value(const Vector& x) const override { return g_->true_value(x) + h_.value(x); }
  Vector gradient(const Vector& x) const override { return g_->gradient(x); }
  const CompositeTerm& composite() const override { return h_; }
  OracleInfo info() const override {
    OracleInfo i = g_->info();
    return i;
  }

 private:
  std::shared_ptr<const ModelOracle> g_;
  CompositeTerm h_;
};

inline std::shared_ptr<ModelOracle> composite_oracle(std::shared_ptr<const ModelOracle> g_smooth,
                                                     CompositeTerm h_simple) {
  return std::make_shared<CompositeOracle>(std::move(g_smooth), std::move(h_simple));
}

/// Composite term by name: "none", "l1" (weight), "ball" (radius, centred at
/// the origin of dimension `dim`).
inline CompositeTerm make_composite_term(const std::string& name, double param, Eigen::Index dim = 0) {
  if (name == "none") return CompositeTerm::none();
  if (name == "l1") return CompositeTerm::l1(param);
  if (name == "ball") return CompositeTerm::ball_indicator(Vector::Zero(dim), param);
  throw UnsupportedCombination("composite term '" + name + "' has no closed-form proximal operator");
}

// ---------------------------------------------------------------------------
// Noise injection
// ---------------------------------------------------------------------------

enum class NoiseMode { random_sphere, adversarial };

inline NoiseMode parse_noise_mode(const std::string& s) {
  if (s == "random-sphere" || s == "random") return NoiseMode::random_sphere;
  if (s == "adversarial" || s == "adversarial-fixed-direction") return NoiseMode::adversarial;
  throw std::invalid_argument("unknown noise mode '" + s + "'");
}

inline const char* to_string(NoiseMode m) {
  return m == NoiseMode::random_sphere ? "random-sphere" : "adversarial";
}

/// Wraps an oracle: gradients are perturbed by at most Delta, values are
/// lowered by at most delta (f_delta in [f - delta, f]). Noise is drawn per
/// query; the RNG stream makes this class unsuitable for sharing between runs.
class NoisyOracle final : public ModelOracle {
 public:
  NoisyOracle(std::shared_ptr<const ModelOracle> inner, double Delta, double delta, NoiseMode mode,
              std::uint64_t seed, std::optional<Vector> direction = std::nullopt)
      : inner_(std::move(inner)), Delta_(Delta), delta_(delta), mode_(mode), rng_(seed) {
    if (!(Delta >= 0.0) || !(delta >= 0.0)) throw std::invalid_argument("NoisyOracle: Delta, delta must be >= 0");
    if (direction) {
      if (direction->size() != inner_->dim() || !(direction->norm() > 0.0)) {
        throw std::invalid_argument("NoisyOracle: bad adversarial direction");
      }
      dir_ = direction->normalized();
    } else {
      dir_ = Vector::Zero(inner_->dim());
      dir_[0] = 1.0;
    }
  }

  Eigen::Index dim() const override { return inner_->dim(); }

  double value(const Vector& x) const override {
    const double f = inner_->value(x);
    if (delta_ == 0.0) return f;
    const double shift = mode_ == NoiseMode::adversarial ? delta_ : delta_ * unit_(rng_);
    const double fd = f - shift;
    if (!(fd <= f && fd >= f - delta_)) throw std::logic_error("NoisyOracle: value envelope violated");
    return fd;
  }

  Vector gradient(const Vector& x) const override {
    Vector g = inner_->gradient(x);
    if (Delta_ == 0.0) return g;
    Vector noise;
    if (mode_ == NoiseMode::adversarial) {
      noise = Delta_ * dir_;
    } else {
      Vector u(g.size());
      double un = 0.0;
      while (!(un > 0.0)) {
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal_(rng_);
        un = u.norm();
      }
      noise = (Delta_ * unit_(rng_) / un) * u;
    }
    const double nn = noise.norm();
    if (nn > Delta_) noise *= Delta_ / nn;  // round-off only
    g += noise;
    return g;
  }

  const CompositeTerm& composite() const override { return inner_->composite(); }

  OracleInfo info() const override {
    OracleInfo i = inner_->info();
    i.gamma += Delta_;
    i.known_Delta = i.known_Delta.value_or(0.0) + Delta_;
    i.known_delta = i.known_delta.value_or(0.0) + delta_;
    i.exact_values = i.exact_values && delta_ == 0.0;
    return i;
  }

  double true_value(const Vector& x) const override { return inner_->true_value(x); }
  Vector true_gradient(const Vector& x) const { return inner_->gradient(x); }
  double Delta() const { return Delta_; }
  double delta() const { return delta_; }

 private:
  std::shared_ptr<const ModelOracle> inner_;
  double Delta_;
  double delta_;
  NoiseMode mode_;
  Vector dir_;
  mutable std::mt19937_64 rng_;
  mutable std::normal_distribution<double> normal_{0.0, 1.0};
  mutable std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

inline Vector noisy_gradient(const NoisyOracle& o, const Vector& x) { return o.gradient(x); }

// ---------------------------------------------------------------------------
// Instance CSV: one centre / point per row, shortest round-trip decimals
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline void write_points_csv(std::ostream& os, const std::vector<Vector>& pts) {
  for (const auto& p : pts) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i) os << ',';
      os << format_double(p[i]);
    }
    os << '\n';
  }
}

inline std::vector<Vector> read_points_csv(std::istream& is) {
  std::vector<Vector> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<double> coords;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      try {
        coords.push_back(parse_double(rest.substr(0, comma)));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("points CSV line " + std::to_string(lineno) + ": " + e.what());
      }
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    pts.push_back(make_vector(coords));
    if (pts.size() > 1 && pts.back().size() != pts.front().size()) {
      throw DimensionMismatch("points CSV line " + std::to_string(lineno) + ": ragged row");
    }
  }
  return pts;
}

}  // namespace inexact
