#pragma once

// Adaptive gradient descent for objectives satisfying the
// Polyak-Lojasiewicz condition, with an inexact gradient (error <= Delta)
// and optionally inexact values (error <= delta).

#include "inexact/core.hpp"
#include "inexact/model_method.hpp"
#include "inexact/oracle.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace inexact {

/// The gradient surrogate is no longer than the current Delta estimate:
/// the step length would be <= 0.
struct SmallGradientSignal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PLConfig {
  Vector x0;
  double L0 = 1.0;
  double Delta0 = 0.0;
  /// Nonzero switches on the inexact-value acceptance test (+delta_{k+1}).
  double delta0 = 0.0;
  int N = 100;
  /// Dichotomy constant; reporting only.
  double C = 2.0;
  std::optional<double> mu;
  /// Enables Delta_{k+1} = min(Delta_{k+1}, Delta_cap).
  std::optional<double> Delta_cap;
  std::optional<double> f_star;
  int max_inner_per_iter = 200;
  /// false keeps Delta_{k+1} == Delta0 on every trial (non-adaptive arm).
  bool adapt_Delta = true;
  bool keep_iterates = false;
};

enum class PLTermination { completed_N, small_gradient_floor, inner_cap };

inline const char* to_string(PLTermination t) {
  switch (t) {
    case PLTermination::completed_N: return "completed-N";
    case PLTermination::small_gradient_floor: return "small-gradient-floor";
    case PLTermination::inner_cap: return "inner-cap";
  }
  return "?";
}

struct PLRecord {
  int k = 0;
  std::optional<Vector> x;
  double f_value = 0.0;       ///< f (or f_delta) at x^k
  double f_next = 0.0;        ///< at x^{k+1}
  double g_tilde_norm = 0.0;  ///< ||grad~ f(x^k)||
  double h = 0.0;
  double L = 0.0;             ///< L_{k+1}
  double Delta = 0.0;         ///< Delta_{k+1}
  double delta = 0.0;         ///< delta_{k+1}
  int inner_calls = 0;
  double elapsed_ms = 0.0;
};

struct PLTrace {
  std::vector<PLRecord> records;
  PLTermination termination = PLTermination::completed_N;
  std::string diagnostic;
  double f0 = 0.0;
  Vector x_last;
  double f_last = 0.0;
  /// ||grad~ f|| at x_last when the run ended in the floor regime.
  std::optional<double> final_g_tilde;
  long total_inner_calls = 0;
  bool advisory_mu_violation = false;  ///< 2 mu > L0 was requested

  double min_f() const {
    double m = f0;
    for (const auto& r : records) m = std::min(m, r.f_next);
    return m;
  }
};

/// h = (1/L)(1 - Delta / g_tilde).
inline double pl_step_size(double L, double Delta, double g_tilde) {
  if (!(L > 0.0)) throw std::invalid_argument("pl_step_size: L must be positive");
  if (!(g_tilde > Delta)) {
    throw SmallGradientSignal("pl_step_size: gradient norm " + std::to_string(g_tilde) +
                              " does not exceed Delta " + std::to_string(Delta));
  }
  return (1.0 / L) * (1.0 - Delta / g_tilde);
}

/// f(x+) <= f(x) + <g~, x+ - x> + (L/2)||x+ - x||^2 + Delta ||x+ - x|| (+ delta).
inline bool pl_acceptance(double f_k, const Vector& g_tilde, const Vector& x_k, const Vector& x_next,
                          double f_next, double L, double Delta, double delta) {
  require_same_dim(x_k, x_next, "pl_acceptance");
  const Vector s = x_next - x_k;
  const double sn = s.norm();
  return f_next <= f_k + g_tilde.dot(s) + 0.5 * L * sn * sn + Delta * sn + delta;
}

inline bool pl_acceptance(const ModelOracle& oracle, const Vector& x_k, const Vector& x_next, double L,
                          double Delta, double delta) {
  return pl_acceptance(oracle.value(x_k), oracle.gradient(x_k), x_k, x_next, oracle.value(x_next), L, Delta,
                       delta);
}

inline PLTrace algo2_run(const PLConfig& config, const ModelOracle& oracle) {
  if (config.x0.size() != oracle.dim()) throw DimensionMismatch("algo2_run: x0 dimension mismatch");
  if (!all_finite(config.x0)) throw std::invalid_argument("algo2_run: x0 must be finite");
  if (config.N < 1) throw std::invalid_argument("algo2_run: N must be >= 1");
  if (!(config.C > 1.0)) throw std::invalid_argument("algo2_run: C must exceed 1");
  if (!(config.L0 > 0.0) || !(config.Delta0 >= 0.0) || !(config.delta0 >= 0.0)) {
    throw std::invalid_argument("algo2_run: L0 > 0, Delta0 >= 0, delta0 >= 0 required");
  }
  if (config.max_inner_per_iter < 1) throw std::invalid_argument("algo2_run: inner cap must be >= 1");

  PLTrace trace;
  trace.advisory_mu_violation = config.mu && 2.0 * *config.mu > config.L0;

  const bool value_mode = config.delta0 > 0.0;
  const double L_floor = default_L_floor(config.L0);
  double L_k = config.L0;
  double Delta_k = config.Delta0;
  double delta_k = config.delta0;
  Vector x = config.x0;
  double f_x = oracle.value(x);
  trace.f0 = f_x;
  const auto start = std::chrono::steady_clock::now();

  auto clamp = [&](double D) { return config.Delta_cap ? std::min(D, *config.Delta_cap) : D; };

  for (int k = 0; k < config.N; ++k) {
    double L = L_k;
    double Delta = Delta_k;
    double delta = delta_k;
    if (L * 0.5 >= L_floor) {
      L *= 0.5;
      if (config.adapt_Delta) Delta *= 0.5;
      delta *= 0.5;
    }
    const Vector g = oracle.gradient(x);
    const double gn = g.norm();

    int calls = 0;
    bool accepted = false;
    double h = 0.0;
    Vector x_next;
    double f_next = 0.0;
    for (;;) {
      Delta = clamp(Delta);
      if (!(gn > Delta)) {
        trace.termination = PLTermination::small_gradient_floor;
        trace.final_g_tilde = gn;
        trace.diagnostic = "gradient norm " + std::to_string(gn) + " <= Delta_{k+1} " + std::to_string(Delta) +
                           " at iteration " + std::to_string(k);
        break;
      }
      ++calls;
      h = pl_step_size(L, Delta, gn);
      x_next = x - h * g;
      f_next = oracle.value(x_next);
      if (pl_acceptance(f_x, g, x, x_next, f_next, L, Delta, value_mode ? delta : 0.0)) {
        accepted = true;
        break;
      }
      if (calls >= config.max_inner_per_iter) {
        trace.termination = PLTermination::inner_cap;
        trace.diagnostic = "no acceptable step after " + std::to_string(calls) + " trials at iteration " +
                           std::to_string(k);
        break;
      }
      L *= 2.0;
      if (config.adapt_Delta) Delta *= 2.0;
      delta *= 2.0;
    }
    trace.total_inner_calls += calls;
    if (!accepted) break;

    PLRecord rec;
    rec.k = k;
    if (config.keep_iterates) rec.x = x;
    rec.f_value = f_x;
    rec.f_next = f_next;
    rec.g_tilde_norm = gn;
    rec.h = h;
    rec.L = L;
    rec.Delta = Delta;
    rec.delta = value_mode ? delta : 0.0;
    rec.inner_calls = calls;
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(std::move(rec));

    L_k = L;
    Delta_k = Delta;
    delta_k = delta;
    x = std::move(x_next);
    f_x = f_next;
  }
  trace.x_last = x;
  trace.f_last = f_x;
  return trace;
}

/// Adaptive product multiplier
///   prod_i (1 - (mu / L_{i+1}) ((g~_i - Delta_{i+1}) / (g~_i + Delta))^2);
/// multiply by f(x^0) - f* for the gap bound.
inline double pl_rate_bound(const PLTrace& trace, double mu, double Delta) {
  if (!(mu > 0.0)) throw std::invalid_argument("pl_rate_bound: mu must be positive");
  double prod = 1.0;
  for (const auto& r : trace.records) {
    const double ratio = (r.g_tilde_norm - r.Delta) / (r.g_tilde_norm + Delta);
    const double factor = 1.0 - (mu / r.L) * ratio * ratio;
    if (!(factor >= 0.0) || factor > 1.0) {
      throw InconsistentBound("pl_rate_bound: factor " + std::to_string(factor) + " at iteration " +
                              std::to_string(r.k) + " outside [0, 1]");
    }
    prod *= factor;
  }
  return prod;
}

/// Per-iteration factors of pl_rate_bound, for audit output.
inline std::vector<double> pl_rate_factors(const PLTrace& trace, double mu, double Delta) {
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    const double ratio = (r.g_tilde_norm - r.Delta) / (r.g_tilde_norm + Delta);
    out.push_back(1.0 - (mu / r.L) * ratio * ratio);
  }
  return out;
}

/// Same product with Delta_{i+1} replaced by the fixed Delta and L_{i+1} by
/// the fixed L: prod_i (1 - (mu/L) ((g~_i - Delta)_+ / (g~_i + Delta))^2).
/// A surrogate shorter than Delta yields factor 1 (no progress claimed).
inline double pl_nonadaptive_bound(const PLTrace& trace, double mu, double L, double Delta) {
  if (!(mu > 0.0) || !(L > 0.0)) throw std::invalid_argument("pl_nonadaptive_bound: mu, L must be positive");
  double prod = 1.0;
  for (const auto& r : trace.records) {
    const double ratio = std::max(0.0, r.g_tilde_norm - Delta) / (r.g_tilde_norm + Delta);
    prod *= 1.0 - (mu / L) * ratio * ratio;
  }
  return prod;
}

enum class DichotomyBranch { linear_rate, floor };

struct DichotomyReport {
  DichotomyBranch branch = DichotomyBranch::linear_rate;
  /// Linear branch: the rate bound after the last recorded iteration.
  /// Floor branch: (C+1)^2 Delta^2 / (2 mu).
  double bound = 0.0;
  std::optional<int> first_violation;  ///< first i with g~_i < C Delta
  /// The realised trace satisfies the certified branch.
  bool holds = false;
  double realized = 0.0;  ///< gap at the end (linear) or min gap (floor)
};

inline double pl_floor_value(double mu, double Delta, double C) {
  return (C + 1.0) * (C + 1.0) * Delta * Delta / (2.0 * mu);
}

/// Which side of the rate/floor dichotomy the trace certifies for constant
/// C. Guarantee hypotheses: the Delta clamp was active during the run; L is
/// the true smoothness constant. The rate branch is checked at every
/// iteration before the first violation; the floor branch compares the best
/// gap reached (including the violating point) with the floor.
inline DichotomyReport pl_dichotomy_check(const PLTrace& trace, double mu, double L, double Delta, double C,
                                          double gap0) {
  if (!(mu > 0.0) || !(L > 0.0) || !(C > 1.0)) {
    throw std::invalid_argument("pl_dichotomy_check: mu, L > 0 and C > 1 required");
  }
  DichotomyReport rep;
  const double f_star = trace.f0 - gap0;
  const double q = 1.0 - (mu / L) * std::pow((C - 1.0) / (C + 1.0), 2);

  std::optional<int> violation;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    if (trace.records[i].g_tilde_norm < C * Delta) {
      violation = static_cast<int>(i);
      break;
    }
  }
  if (!violation && trace.final_g_tilde && *trace.final_g_tilde < C * Delta) {
    violation = static_cast<int>(trace.records.size());
  }

  const int rate_until = violation ? *violation : static_cast<int>(trace.records.size());
  bool rate_ok = true;
  double gap_end = gap0;
  for (int k = 0; k < rate_until; ++k) {
    const double gap = trace.records[static_cast<std::size_t>(k)].f_next - f_star;
    gap_end = gap;
    if (gap > std::pow(q, k + 1) * gap0) rate_ok = false;
  }

  if (!violation) {
    rep.branch = DichotomyBranch::linear_rate;
    rep.bound = std::pow(q, static_cast<double>(trace.records.size())) * gap0;
    rep.realized = gap_end;
    rep.holds = rate_ok;
    return rep;
  }
  rep.branch = DichotomyBranch::floor;
  rep.first_violation = violation;
  rep.bound = pl_floor_value(mu, Delta, C);
  rep.realized = trace.min_f() - f_star;
  rep.holds = rep.realized < rep.bound;
  return rep;
}

/// 3 delta L / mu: limiting error of the inexact-value variant at Delta = 0
/// and constant L.
inline double pl_inexact_floor(double mu, double L, double delta) {
  if (!(mu > 0.0) || !(L > 0.0) || !(delta >= 0.0)) {
    throw std::invalid_argument("pl_inexact_floor: mu, L > 0 and delta >= 0 required");
  }
  return 3.0 * delta * L / mu;
}

}  // namespace inexact
