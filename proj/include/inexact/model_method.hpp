#pragma once

// Adaptive gradient method for convex objectives with an inexact
// (delta, gamma, Delta, L)-model: weighted-average output, the computable
// convergence certificate and the inner-call budget.

#include "inexact/core.hpp"
#include "inexact/oracle.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace inexact {

/// The inner loop could not find an acceptable step within its cap.
struct NonTermination : std::runtime_error {
  NonTermination(const std::string& what, AdaptiveTriple last_triple, int iter, int calls)
      : std::runtime_error(what), last(last_triple), iteration(iter), inner_calls(calls) {}
  AdaptiveTriple last;
  int iteration;
  int inner_calls;
};

struct Algo1Config {
  Vector x0;
  double L0 = 1.0;
  double delta0 = 0.0;
  double Delta0 = 0.0;
  int N = 100;
  /// Bound with V(x*, x0) <= R^2; enables the running certificate.
  std::optional<double> R;
  /// Stop once the running certificate drops to epsilon (needs R, gamma = 0).
  std::optional<double> epsilon;
  int max_inner_per_iter = 200;
  /// Irreducible value inexactness added to the certificate; defaults to 0
  /// for exact-valued oracles and to the oracle's known delta otherwise.
  std::optional<double> report_delta;
  /// Store x^k in every record (needed for the gamma-term of the certificate).
  bool keep_iterates = false;
};

inline void validate(const Algo1Config& c) {
  if (c.x0.size() == 0 || !all_finite(c.x0)) throw std::invalid_argument("Algo1Config: x0 must be finite and nonempty");
  if (c.N < 1) throw std::invalid_argument("Algo1Config: N must be >= 1");
  if (!(c.L0 > 0.0)) throw std::invalid_argument("Algo1Config: L0 must be positive");
  if (!(c.delta0 >= 0.0) || !(c.Delta0 >= 0.0)) throw std::invalid_argument("Algo1Config: delta0, Delta0 must be >= 0");
  if (c.max_inner_per_iter < 1) throw std::invalid_argument("Algo1Config: inner cap must be >= 1");
  if (c.R && !(*c.R >= 0.0)) throw std::invalid_argument("Algo1Config: R must be >= 0");
  if (c.epsilon && !(*c.epsilon > 0.0)) throw std::invalid_argument("Algo1Config: epsilon must be > 0");
}

struct Algo1Record {
  int k = 0;
  std::optional<Vector> x;      ///< x^k, only with keep_iterates
  double f_delta = 0.0;         ///< f_delta(x^k)
  double f_delta_next = 0.0;    ///< f_delta(x^{k+1})
  double f_best = 0.0;          ///< min over f_delta(x^1..x^{k+1})
  AdaptiveTriple triple;        ///< accepted (L_{k+1}, delta_{k+1}, Delta_{k+1})
  int inner_calls = 0;
  double step_norm = 0.0;       ///< ||x^{k+1} - x^k||
  double cert_bound = std::numeric_limits<double>::quiet_NaN();  ///< running certificate
  double elapsed_ms = 0.0;
};

struct Algo1Trace {
  std::vector<Algo1Record> records;
  double S_N = 0.0;
  Vector x_hat;
  Vector x_last;
  long total_inner_calls = 0;
  bool stopped_early = false;
  /// Best iterate seen (by f_delta); x_hat stays the contractual output.
  Vector x_best;
  double f_best = std::numeric_limits<double>::infinity();
};

/// argmin_{x in Q} { psi(x, x_k) + L V(x, x_k) } for a frozen linearization.
inline Vector model_step(const Linearization& lin, const ProxSetup& setup, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("model_step: L must be positive");
  if (setup.generator != Generator::euclidean) {
    throw UnsupportedCombination("model_step: only the euclidean generator is supported");
  }
  if (const auto* b = setup.set.as_ball()) require_same_dim(lin.point, b->center, "model_step");

  const Vector shifted = lin.point - lin.gradient / L;
  const CompositeTerm none;
  const CompositeTerm& h = lin.composite ? *lin.composite : none;

  switch (h.kind()) {
    case CompositeTerm::Kind::none:
      return project(setup.set, shifted);
    case CompositeTerm::Kind::l1: {
      // Soft-thresholding commutes with projection onto an origin-centred
      // ball (both are sign- and permutation-symmetric), nothing else.
      if (setup.set.is_whole_space()) return h.prox(shifted, 1.0 / L);
      const auto* b = setup.set.as_ball();
      if (b->center.isZero(0.0)) return project(setup.set, h.prox(shifted, 1.0 / L));
      throw UnsupportedCombination("model_step: l1 composite term with an off-centre ball");
    }
    case CompositeTerm::Kind::ball_indicator:
      if (setup.set.is_whole_space()) return h.prox(shifted, 1.0 / L);
      throw UnsupportedCombination("model_step: ball-indicator composite term on a constrained set");
  }
  throw UnsupportedCombination("model_step: unknown composite kind");
}

inline Vector model_step(const ModelOracle& oracle, const ProxSetup& setup, const Vector& x_k, double L) {
  return model_step(linearize(oracle, x_k), setup, L);
}

/// f_d(x+) <= f_d(x) + psi(x+, x) + L V(x+, x) + Delta ||x+ - x|| + delta.
inline bool acceptance_test(const Linearization& lin, const ProxSetup& setup, const Vector& x_next,
                            double f_next, const AdaptiveTriple& t) {
  require_same_dim(x_next, lin.point, "acceptance_test");
  const double rhs = lin.value + lin.model(x_next) + t.L * bregman_divergence(setup, x_next, lin.point) +
                     t.Delta * (x_next - lin.point).norm() + t.delta;
  return f_next <= rhs;
}

inline bool acceptance_test(const ModelOracle& oracle, const ProxSetup& setup, const Vector& x_k,
                            const Vector& x_next, const AdaptiveTriple& t) {
  const Linearization lin = linearize(oracle, x_k);
  return acceptance_test(lin, setup, x_next, oracle.value(x_next), t);
}

/// Mutable state of one Algorithm-1 run between outer iterations.
struct Algo1State {
  Vector x;
  AdaptiveTriple triple;
  int k = 0;
  double S = 0.0;
  Vector weighted_sum;
  long total_inner_calls = 0;
  /// f_delta(x^k) from the previous acceptance; reused so the chain of
  /// accepted inequalities refers to one value per point.
  std::optional<double> f_x;
  double f_best = std::numeric_limits<double>::infinity();
  Vector x_best;
  /// Sum over iterations of (delta_{k+1} + Delta_{k+1} ||x^{k+1}-x^k||) / L_{k+1}.
  double noise_sum = 0.0;
  /// Halving is skipped once L would drop below this value.
  double L_floor = 0.0;
};

inline double default_L_floor(double L0) { return std::ldexp(L0, -50); }

inline Algo1State algo1_initial_state(const Algo1Config& config) {
  validate(config);
  Algo1State s;
  s.x = config.x0;
  s.triple = make_triple(config.L0, config.delta0, config.Delta0);
  s.weighted_sum = Vector::Zero(config.x0.size());
  s.x_best = config.x0;
  s.L_floor = default_L_floor(config.L0);
  return s;
}

/// One outer iteration: halve the triple, then {model step; test; double}
/// until the test passes. Returns the record of the accepted step.
inline Algo1Record algo1_iterate(Algo1State& state, const ModelOracle& oracle, const ProxSetup& setup,
                                 int cap, bool keep_iterate = false) {
  AdaptiveTriple t = state.triple;
  if (t.L * 0.5 >= state.L_floor) t = scale_triple(t, 0.5);

  Linearization lin{state.x, state.f_x ? *state.f_x : oracle.value(state.x), oracle.gradient(state.x),
                    &oracle.composite()};

  int calls = 0;
  Vector x_next;
  double f_next = 0.0;
  for (;;) {
    ++calls;
    x_next = model_step(lin, setup, t.L);
    f_next = oracle.value(x_next);
    if (acceptance_test(lin, setup, x_next, f_next, t)) break;
    if (calls >= cap) {
      throw NonTermination("algo1: no acceptable step after " + std::to_string(calls) +
                               " trials at iteration " + std::to_string(state.k),
                           t, state.k, calls);
    }
    t = scale_triple(t, 2.0);
  }

  Algo1Record rec;
  rec.k = state.k;
  if (keep_iterate) rec.x = state.x;
  rec.f_delta = lin.value;
  rec.f_delta_next = f_next;
  rec.triple = t;
  rec.inner_calls = calls;
  rec.step_norm = (x_next - state.x).norm();

  const double w = 1.0 / t.L;
  state.S += w;
  state.weighted_sum += w * x_next;
  state.noise_sum += (t.delta + t.Delta * rec.step_norm) * w;
  state.total_inner_calls += calls;
  if (f_next < state.f_best) {
    state.f_best = f_next;
    state.x_best = x_next;
  }
  rec.f_best = state.f_best;
  state.triple = t;
  state.x = std::move(x_next);
  state.f_x = f_next;
  ++state.k;
  return rec;
}

inline double resolve_report_delta(const std::optional<double>& configured, const OracleInfo& info) {
  if (configured) return *configured;
  if (info.exact_values) return 0.0;
  return info.known_delta.value_or(0.0);
}

inline Algo1Trace algo1_run(const Algo1Config& config, const ModelOracle& oracle, const ProxSetup& setup) {
  Algo1State state = algo1_initial_state(config);
  require_same_dim(config.x0, Vector::Zero(oracle.dim()), "algo1_run");
  if (!setup.set.contains(config.x0, 1e-12)) throw std::invalid_argument("algo1_run: x0 is not in Q");

  const OracleInfo info = oracle.info();
  const double delta_rep = resolve_report_delta(config.report_delta, info);
  const bool running_cert = config.R.has_value() && info.gamma == 0.0;
  const auto start = std::chrono::steady_clock::now();

  Algo1Trace trace;
  trace.records.reserve(static_cast<std::size_t>(config.N));
  for (int k = 0; k < config.N; ++k) {
    Algo1Record rec = algo1_iterate(state, oracle, setup, config.max_inner_per_iter, config.keep_iterates);
    if (running_cert) {
      rec.cert_bound = (*config.R * *config.R) / state.S + state.noise_sum / state.S + delta_rep;
    }
    rec.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const double cert = rec.cert_bound;
    trace.records.push_back(std::move(rec));
    if (running_cert && config.epsilon && cert <= *config.epsilon) {
      trace.stopped_early = k + 1 < config.N;
      break;
    }
  }
  trace.S_N = state.S;
  trace.x_hat = state.weighted_sum / state.S;
  trace.x_last = state.x;
  trace.total_inner_calls = state.total_inner_calls;
  trace.x_best = state.x_best;
  trace.f_best = state.f_best;
  return trace;
}

/// Computable right-hand side of the convergence guarantee:
///   R^2/S_N + (1/S_N) sum_k [delta_{k+1} + Delta_{k+1}||x^{k+1}-x^k|| + gamma||x^k - x*||] / L_{k+1} + delta
/// The gamma-term needs a reference minimiser and stored iterates.
inline double certificate_bound(const Algo1Trace& trace, double R, double gamma,
                                const std::optional<Vector>& x_star, double delta) {
  if (trace.records.empty() || !(trace.S_N > 0.0)) {
    throw std::invalid_argument("certificate_bound: empty trace");
  }
  if (gamma > 0.0 && !x_star) {
    throw CertificateUnavailable("certificate_bound: gamma > 0 requires a reference minimiser");
  }
  double S = 0.0;
  double sum = 0.0;
  for (const auto& r : trace.records) {
    double num = r.triple.delta + r.triple.Delta * r.step_norm;
    if (gamma > 0.0) {
      if (!r.x) throw CertificateUnavailable("certificate_bound: gamma > 0 requires stored iterates");
      num += gamma * (*r.x - *x_star).norm();
    }
    S += 1.0 / r.triple.L;
    sum += num / r.triple.L;
  }
  return R * R / S + sum / S + delta;
}

/// Upper bound on model-step evaluations over N iterations:
/// ceil(2N + max{log2(2L/L0), log2(2 delta/delta0), log2(2 Delta/Delta0)}),
/// each log clamped at 0. A term whose starting value is zero is skipped
/// since that component never moves.
inline long inner_call_budget(int N, double L0, double delta0, double Delta0, double L, double delta,
                              double Delta) {
  double worst = 0.0;
  auto term = [&](double num, double den) {
    if (!(den > 0.0) || !(num > 0.0)) return;
    worst = std::max(worst, std::log2(2.0 * num / den));
  };
  term(L, L0);
  term(delta, delta0);
  term(Delta, Delta0);
  return static_cast<long>(std::ceil(2.0 * N + worst));
}

}  // namespace inexact
