#pragma once

// Independent reference implementations used as test oracles. They share
// nothing with the library beyond Eigen types.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace ref {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Plain adaptive gradient descent on f(x) = 0.5 x'Hx - c'x with the
/// halve-then-double rule, optionally projected onto the ball ||x|| <= radius.
struct AdaptiveGD {
  Mat H;
  Vec c;
  double radius = 0.0;  // 0 means unconstrained

  double f(const Vec& x) const { return 0.5 * x.dot(H * x) - c.dot(x); }
  Vec grad(const Vec& x) const { return H * x - c; }
  Vec proj(const Vec& y) const {
    if (radius <= 0.0) return y;
    const double n = y.norm();
    return n <= radius ? y : Vec(y * (radius / n));
  }

  /// Iterates x^1..x^N starting from x0 with initial estimate L0.
  std::vector<Vec> run(Vec x, double L, int N) const {
    std::vector<Vec> out;
    double fx = f(x);
    for (int k = 0; k < N; ++k) {
      L /= 2;
      const Vec g = grad(x);
      for (;;) {
        const Vec y = proj(x - g / L);
        const Vec s = y - x;
        const double fy = f(y);
        if (fy <= fx + g.dot(s) + 0.5 * L * s.squaredNorm()) {
          x = y;
          fx = fy;
          break;
        }
        L *= 2;
      }
      out.push_back(x);
    }
    return out;
  }
};

inline Mat random_spd(int n, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = nd(rng);
  Eigen::HouseholderQR<Mat> qr(G);
  const Mat Q = qr.householderQ();
  Vec ev(n);
  std::uniform_real_distribution<double> u(lo, hi);
  for (int i = 0; i < n; ++i) ev[i] = u(rng);
  ev[0] = lo;
  ev[n - 1] = hi;
  return Q * ev.asDiagonal() * Q.transpose();
}

inline Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

/// Soft-threshold minimiser of g*x + w|x| + (L/2)(x - x0)^2 in one dimension,
/// found by comparing the three candidate regions directly.
inline double prox_1d(double x0, double g, double w, double L) {
  auto obj = [&](double x) { return g * (x - x0) + w * std::abs(x) + 0.5 * L * (x - x0) * (x - x0); };
  double best = 0.0;
  const double right = x0 - (g + w) / L;  // stationary point on x > 0
  const double left = x0 - (g - w) / L;   // stationary point on x < 0
  if (right > 0.0 && obj(right) < obj(best)) best = right;
  if (left < 0.0 && obj(left) < obj(best)) best = left;
  return best;
}

}  // namespace ref
