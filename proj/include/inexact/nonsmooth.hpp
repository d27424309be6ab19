#pragma once

// Restart modification of the adaptive model method for nonsmooth objectives
// with a known finite Delta: inside each outer iteration L is doubled at
// fixed Delta until either the Delta-term of the certificate is below
// epsilon/2 or the smooth-like descent inequality holds.

#include "inexact/model_method.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace inexact {

struct NonsmoothConfig {
  Algo1Config base;
  double epsilon = 1e-2;
  /// Class constant Delta (twice the summed subdifferential diameters).
  double Delta_known = 1.0;
  /// Without it the descent test uses the running L estimate and the
  /// complexity guarantee no longer applies.
  std::optional<double> L_known;
  /// Safety cap on doublings per outer iteration.
  int p_cap = 200;
};

enum class RestartStop { delta_term_small, smooth_inequality };

inline const char* to_string(RestartStop s) {
  return s == RestartStop::delta_term_small ? "delta-term-small" : "smooth-inequality";
}

struct RestartRecord {
  int k = 0;
  int p_used = 0;
  RestartStop stop_reason = RestartStop::delta_term_small;
  double final_L = 0.0;
};

struct NonsmoothTrace {
  Algo1Trace trace;
  std::vector<RestartRecord> restarts;
  bool guarantee_heuristic = false;  ///< L_known was absent
};

/// Smallest integer p with 2^p > 1 + 16 Delta^2 / (epsilon L).
inline int p_bound(double Delta, double epsilon, double L) {
  if (!(Delta >= 0.0) || !(epsilon > 0.0) || !(L > 0.0)) {
    throw std::invalid_argument("p_bound: Delta >= 0, epsilon > 0, L > 0 required");
  }
  const double rhs = 1.0 + 16.0 * Delta * Delta / (epsilon * L);
  int p = 0;
  double two_p = 1.0;
  while (!(two_p > rhs)) {
    two_p *= 2.0;
    ++p;
  }
  return p;
}

/// Subgradient-evaluation budget for f(x_hat) - f* <= epsilon:
/// ceil((4LR^2/eps + 64 Delta^2 R^2/eps^2) * max(1, log2(1 + 16 Delta^2/(eps L)))).
inline long complexity_estimate(double L, double R, double Delta, double epsilon) {
  if (!(L > 0.0) || !(R > 0.0) || !(epsilon > 0.0) || !(Delta >= 0.0)) {
    throw std::invalid_argument("complexity_estimate: L, R, epsilon > 0 and Delta >= 0 required");
  }
  const double outer = 4.0 * L * R * R / epsilon + 64.0 * Delta * Delta * R * R / (epsilon * epsilon);
  const double log_factor = std::max(1.0, std::log2(1.0 + 16.0 * Delta * Delta / (epsilon * L)));
  return static_cast<long>(std::ceil(outer * log_factor));
}

/// One outer iteration of the restart procedure from a frozen linearization.
/// `L_reference` is the constant multiplying 2^{p-1} in the descent test.
inline std::pair<Vector, RestartRecord> restart_inner(const Linearization& lin, const ModelOracle& oracle,
                                                      const ProxSetup& setup, double L_start,
                                                      double Delta_fixed, double epsilon, int p_cap,
                                                      double L_reference, double* f_next_out = nullptr) {
  if (!(L_start > 0.0)) throw std::invalid_argument("restart_inner: L_start must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("restart_inner: epsilon must be positive");
  if (!(Delta_fixed >= 0.0)) throw std::invalid_argument("restart_inner: Delta must be >= 0");

  RestartRecord rec;
  double L = L_start;
  for (int p = 0;; ++p) {
    Vector x_next = model_step(lin, setup, L);
    const Vector step = x_next - lin.point;
    const double step_norm = step.norm();
    if (Delta_fixed * step_norm <= 0.5 * epsilon) {
      rec.p_used = p;
      rec.stop_reason = RestartStop::delta_term_small;
      rec.final_L = L;
      if (f_next_out) *f_next_out = oracle.value(x_next);
      return {std::move(x_next), rec};
    }
    const double f_next = oracle.value(x_next);
    const double rhs = lin.value + lin.gradient.dot(step) + std::ldexp(L_reference, p - 1) * step_norm * step_norm;
    if (f_next <= rhs) {
      rec.p_used = p;
      rec.stop_reason = RestartStop::smooth_inequality;
      rec.final_L = L;
      if (f_next_out) *f_next_out = f_next;
      return {std::move(x_next), rec};
    }
    if (p >= p_cap) {
      throw NonTermination("restart_inner: no stop rule satisfied after " + std::to_string(p) +
                               " doublings (check Delta and epsilon)",
                           AdaptiveTriple{L, 0.0, Delta_fixed}, 0, p + 1);
    }
    L *= 2.0;
  }
}

inline std::pair<Vector, RestartRecord> restart_inner(const ModelOracle& oracle, const ProxSetup& setup,
                                                      const Vector& x_k, double L_start, double Delta_fixed,
                                                      double epsilon, int p_cap,
                                                      std::optional<double> L_known = std::nullopt) {
  return restart_inner(linearize(oracle, x_k), oracle, setup, L_start, Delta_fixed, epsilon, p_cap,
                       L_known.value_or(L_start));
}

/// Outer loop of the adaptive model method with restart_inner as the inner
/// procedure. L is carried across iterations and halved once at the start
/// of each. With Delta_known == 0 the procedure degenerates to the plain
/// adaptive method, which is run instead.
inline NonsmoothTrace nonsmooth_run(const NonsmoothConfig& config, const ModelOracle& oracle,
                                    const ProxSetup& setup) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("nonsmooth_run: epsilon must be positive");
  if (!(config.Delta_known >= 0.0)) throw std::invalid_argument("nonsmooth_run: Delta must be >= 0");
  const OracleInfo info = oracle.info();
  if (!info.exact_values) throw std::invalid_argument("nonsmooth_run: requires an exact-valued oracle");
  if (info.gamma != 0.0) throw std::invalid_argument("nonsmooth_run: requires gamma = 0");

  NonsmoothTrace out;
  if (config.Delta_known == 0.0) {
    Algo1Config plain = config.base;
    plain.delta0 = 0.0;
    plain.Delta0 = 0.0;
    out.trace = algo1_run(plain, oracle, setup);
    for (const auto& r : out.trace.records) {
      out.restarts.push_back({r.k, 0, RestartStop::delta_term_small, r.triple.L});
    }
    return out;
  }

  Algo1State state = algo1_initial_state(config.base);
  if (!setup.set.contains(config.base.x0, 1e-12)) throw std::invalid_argument("nonsmooth_run: x0 is not in Q");
  out.guarantee_heuristic = !config.L_known.has_value();
  const auto& R = config.base.R;
  const auto start = std::chrono::steady_clock::now();

  for (int k = 0; k < config.base.N; ++k) {
    double L_start = state.triple.L;
    if (L_start * 0.5 >= state.L_floor) L_start *= 0.5;

    const Linearization lin{state.x, state.f_x ? *state.f_x : oracle.value(state.x), oracle.gradient(state.x),
                            &oracle.composite()};
    double f_next = 0.0;
    auto [x_next, rr] = restart_inner(lin, oracle, setup, L_start, config.Delta_known, config.epsilon,
                                      config.p_cap, config.L_known.value_or(L_start), &f_next);
    rr.k = k;

    Algo1Record rec;
    rec.k = k;
    if (config.base.keep_iterates) rec.x = state.x;
    rec.f_delta = lin.value;
    rec.f_delta_next = f_next;
    rec.triple = AdaptiveTriple{rr.final_L, 0.0, config.Delta_known};
    rec.inner_calls = rr.p_used + 1;
    rec.step_norm = (x_next - state.x).norm();

    const double w = 1.0 / rr.final_L;
    state.S += w;
    state.weighted_sum += w * x_next;
    state.noise_sum += config.Delta_known * rec.step_norm * w;
    state.total_inner_calls += rec.inner_calls;
    if (f_next < state.f_best) {
      state.f_best = f_next;
      state.x_best = x_next;
    }
    rec.f_best = state.f_best;
    if (R) rec.cert_bound = (*R * *R) / state.S + state.noise_sum / state.S;
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    state.triple = rec.triple;
    state.x = std::move(x_next);
    state.f_x = f_next;
    ++state.k;
    out.trace.records.push_back(std::move(rec));
    out.restarts.push_back(rr);
  }
  out.trace.S_N = state.S;
  out.trace.x_hat = state.weighted_sum / state.S;
  out.trace.x_last = state.x;
  out.trace.total_inner_calls = state.total_inner_calls;
  out.trace.x_best = state.x_best;
  out.trace.f_best = state.f_best;
  return out;
}

}  // namespace inexact
