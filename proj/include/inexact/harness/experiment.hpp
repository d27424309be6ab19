#pragma once

// Experiment runner: instance construction, single runs, Table-1 style
// grids, paired adaptive/non-adaptive PL comparisons, and oracle checks.

#include "inexact/harness/spec.hpp"
#include "inexact/model_method.hpp"
#include "inexact/nonsmooth.hpp"
#include "inexact/pl_method.hpp"
#include "inexact/problems.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

namespace inexact::harness {

inline constexpr long kFullScaleDim = 100000;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Dimension actually used for the run.
inline long effective_dim(const ExperimentSpec& s) {
  if (s.full_scale && (s.task == Task::task1 || s.task == Task::task2)) return kFullScaleDim;
  return s.n;
}

/// Seed of replication r. Noise streams use a separate derived seed.
inline std::uint64_t replication_seed(const ExperimentSpec& s, int r) { return s.seed + static_cast<std::uint64_t>(r); }
inline std::uint64_t noise_seed(std::uint64_t problem_seed) { return problem_seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL; }

struct Instance {
  std::shared_ptr<const ModelOracle> exact;
  std::shared_ptr<ModelOracle> oracle;  ///< what the solver queries
  ProxSetup setup;
  Vector x0;
  /// sqrt of an upper bound on V(x*, x0); absent when unknown.
  std::optional<double> R;
  std::optional<double> f_star;
  /// f_star when known, otherwise a lower bound on the optimum.
  double f_lower = 0.0;
  std::optional<double> mu;
  std::optional<double> L_true;
  /// Model constants (L, Delta) the objective provably satisfies with psi linear.
  double L_class = 1.0;
  double Delta_class = 0.0;
};

namespace detail {

inline std::shared_ptr<const PLQuadratic> make_quadratic(const ExperimentSpec& s, std::uint64_t seed) {
  const long rows = s.m;
  const long cols = s.n;
  const long rank = s.rank > 0 ? s.rank : std::min(rows, cols);
  return std::make_shared<const PLQuadratic>(random_pl_quadratic(rows, cols, rank, s.cond, seed));
}

}  // namespace detail

inline Instance make_instance(const ExperimentSpec& s, std::uint64_t seed) {
  const long n = effective_dim(s);
  Instance inst;
  switch (s.task) {
    case Task::task1: {
      auto p = std::make_shared<const BallSumProblem>(generate_task1(n, s.m, seed));
      inst.exact = std::make_shared<BallSumOracle>(p);
      inst.setup = ProxSetup::euclidean(p->feasible);
      inst.x0 = Vector::Zero(n);
      inst.R = std::sqrt(0.5) * p->feasible.max_distance_from(inst.x0);
      inst.f_lower = 0.0;
      // Each term is 1-Lipschitz with curvature <= 1 where active.
      inst.L_class = static_cast<double>(s.m);
      inst.Delta_class = 2.0 * s.m;
      break;
    }
    case Task::task2: {
      auto p = std::make_shared<const MinMaxBallProblem>(generate_task2(n, s.m, seed));
      inst.exact = std::make_shared<CoveringOracle>(p);
      inst.setup = ProxSetup::euclidean(p->feasible);
      inst.x0 = Vector::Zero(n);
      inst.R = std::sqrt(0.5) * p->feasible.max_distance_from(inst.x0);
      inst.f_lower = covering_lower_bound(*p);
      // 1-Lipschitz: f(y) <= f(x) + <g, y-x> + 2||y-x|| for any L > 0.
      inst.L_class = 1.0;
      inst.Delta_class = 2.0;
      break;
    }
    case Task::pl_quadratic: {
      auto q = detail::make_quadratic(s, seed);
      inst.exact = std::make_shared<QuadraticOracle>(q);
      inst.setup = ProxSetup::euclidean();
      inst.x0 = Vector::Zero(q->A.cols());
      inst.f_star = q->f_star;
      inst.f_lower = q->f_star;
      inst.mu = q->mu;
      inst.L_true = q->L;
      inst.R = std::sqrt(0.5) * (q->x_star - inst.x0).norm();
      inst.L_class = q->L;
      inst.Delta_class = 0.0;
      break;
    }
    case Task::composite: {
      auto q = detail::make_quadratic(s, seed);
      auto smooth = std::make_shared<QuadraticOracle>(q);
      inst.exact = composite_oracle(smooth, CompositeTerm::l1(s.l1_weight));
      inst.setup = ProxSetup::euclidean();
      inst.x0 = Vector::Zero(q->A.cols());
      inst.L_true = q->L;
      inst.L_class = q->L;
      // Reference optimum from a long run of the exact method.
      Algo1Config ref;
      ref.x0 = inst.x0;
      ref.L0 = q->L;
      ref.N = 20000;
      const Algo1Trace t = algo1_run(ref, *inst.exact, inst.setup);
      inst.f_star = std::min(t.f_best, inst.exact->value(t.x_hat));
      inst.f_lower = *inst.f_star;
      inst.R = std::sqrt(0.5) * (t.x_best - inst.x0).norm();
      break;
    }
  }
  if (s.Delta > 0.0 || s.delta > 0.0) {
    inst.oracle = std::make_shared<NoisyOracle>(inst.exact, s.Delta, s.delta, s.mode, noise_seed(seed));
  } else {
    inst.oracle = std::const_pointer_cast<ModelOracle>(inst.exact);
  }
  return inst;
}

/// One row of the trace CSV.
struct TraceRow {
  int iter = 0;
  double f_value = 0.0;
  double f_best = 0.0;
  double L_k = 0.0;
  double delta_k = 0.0;
  double Delta_k = 0.0;
  int inner_calls = 0;
  double step_norm = 0.0;
  double cert_bound = kNaN;
  double elapsed_ms = 0.0;
};

struct RunOutcome {
  std::vector<TraceRow> rows;
  bool failed = false;
  std::string diagnostic;
  double f_hat = kNaN;  ///< exact f at the method's output
  std::string termination = "completed-N";
};

inline double resolved_L0(const ExperimentSpec& s, const Instance& inst) {
  if (s.L0) return *s.L0;
  if (s.solver == SolverKind::algo2 && inst.L_true) return 2.0 * *inst.L_true;
  return 1.0;
}

inline double resolved_Delta0(const ExperimentSpec& s, double L0) {
  if (s.Delta0) return *s.Delta0;
  if (s.solver == SolverKind::algo2) return 2.0 * s.Delta;
  return 0.01 * L0;
}

inline std::vector<TraceRow> rows_from(const Algo1Trace& t) {
  std::vector<TraceRow> rows;
  rows.reserve(t.records.size());
  for (const auto& r : t.records) {
    rows.push_back({r.k + 1, r.f_delta_next, r.f_best, r.triple.L, r.triple.delta, r.triple.Delta, r.inner_calls,
                    r.step_norm, r.cert_bound, r.elapsed_ms});
  }
  return rows;
}

/// Runs the configured solver for N iterations on one instance.
inline RunOutcome run_solver(const ExperimentSpec& s, const Instance& inst, int N) {
  RunOutcome out;
  const double L0 = resolved_L0(s, inst);
  const double Delta0 = resolved_Delta0(s, L0);
  try {
    switch (s.solver) {
      case SolverKind::algo1: {
        Algo1Config c;
        c.x0 = inst.x0;
        c.L0 = L0;
        c.Delta0 = Delta0;
        c.delta0 = s.delta0;
        c.N = N;
        c.R = inst.R;
        c.epsilon = s.epsilon;
        c.max_inner_per_iter = s.max_inner;
        const Algo1Trace t = algo1_run(c, *inst.oracle, inst.setup);
        out.rows = rows_from(t);
        out.f_hat = inst.exact->true_value(t.x_hat);
        if (t.stopped_early) out.termination = "epsilon-reached";
        break;
      }
      case SolverKind::nonsmooth: {
        NonsmoothConfig c;
        c.base.x0 = inst.x0;
        c.base.L0 = L0;
        c.base.N = N;
        c.base.R = inst.R;
        c.epsilon = s.epsilon.value_or(0.01);
        c.Delta_known = s.Delta_known.value_or(inst.Delta_class);
        c.L_known = s.L_known.value_or(inst.L_class);
        c.p_cap = s.max_inner;
        const NonsmoothTrace t = nonsmooth_run(c, *inst.oracle, inst.setup);
        out.rows = rows_from(t.trace);
        out.f_hat = inst.exact->true_value(t.trace.x_hat);
        break;
      }
      case SolverKind::algo2: {
        if (!inst.setup.set.is_whole_space()) {
          throw std::invalid_argument("algo2 needs an unconstrained problem (pl-quadratic or composite-free)");
        }
        PLConfig c;
        c.x0 = inst.x0;
        c.L0 = L0;
        c.Delta0 = Delta0;
        c.delta0 = s.delta0;
        c.N = N;
        c.C = s.C;
        c.mu = inst.mu;
        if (s.Delta > 0.0) c.Delta_cap = s.Delta;
        c.f_star = inst.f_star;
        c.max_inner_per_iter = s.max_inner;
        const PLTrace t = algo2_run(c, *inst.oracle);
        double prod = 1.0;
        double f_best = t.f0;
        const bool have_bound = inst.mu && inst.f_star;
        for (const auto& r : t.records) {
          f_best = std::min(f_best, r.f_next);
          TraceRow row{r.k + 1, r.f_next, f_best, r.L, r.delta, r.Delta, r.inner_calls,
                       r.h * r.g_tilde_norm, kNaN, r.elapsed_ms};
          if (have_bound) {
            const double ratio = (r.g_tilde_norm - r.Delta) / (r.g_tilde_norm + s.Delta);
            prod *= 1.0 - (*inst.mu / r.L) * ratio * ratio;
            row.cert_bound = prod * (t.f0 - *inst.f_star);
          }
          out.rows.push_back(row);
        }
        out.f_hat = inst.exact->true_value(t.x_last);
        out.termination = to_string(t.termination);
        if (t.termination == PLTermination::inner_cap) {
          out.failed = true;
          out.diagnostic = t.diagnostic;
        }
        break;
      }
    }
  } catch (const NonTermination& e) {
    out.failed = true;
    out.diagnostic = e.what();
  }
  return out;
}

/// Estimate reported after `iters` iterations (prefix of a longer run).
inline double estimate_at(const ExperimentSpec& s, const Instance& inst, const RunOutcome& run, int iters) {
  if (run.rows.empty()) return kNaN;
  const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(iters), run.rows.size()) - 1;
  const TraceRow& row = run.rows[idx];
  if (s.estimate == EstimateKind::certificate) return row.cert_bound;
  return row.f_best - inst.f_lower;
}

struct TableRow {
  int iters = 0;
  double mean_estimate = kNaN;
  double std_estimate = kNaN;
  double mean_time_ms = kNaN;
  std::vector<double> per_seed;       ///< NaN for failed replications
  std::vector<double> per_seed_time;
  int failed = 0;
};

struct ResultTable {
  std::vector<TableRow> rows;
  std::vector<std::string> diagnostics;
};

/// Calls fn(r) for r in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline void fill_stats(TableRow& row) {
  double sum = 0.0;
  double tsum = 0.0;
  int ok = 0;
  for (std::size_t i = 0; i < row.per_seed.size(); ++i) {
    if (std::isnan(row.per_seed[i])) continue;
    sum += row.per_seed[i];
    tsum += row.per_seed_time[i];
    ++ok;
  }
  if (ok == 0) return;
  row.mean_estimate = sum / ok;
  row.mean_time_ms = tsum / ok;
  double var = 0.0;
  for (double v : row.per_seed) {
    if (!std::isnan(v)) var += (v - row.mean_estimate) * (v - row.mean_estimate);
  }
  row.std_estimate = ok > 1 ? std::sqrt(var / (ok - 1)) : 0.0;
}

/// Table-1 protocol: per replication one run up to the largest grid value;
/// the estimate and elapsed time are read off at every grid point.
inline ResultTable run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  const int reps = spec.replications;
  const int n_max = spec.iteration_grid.back();
  ResultTable table;
  table.rows.resize(spec.iteration_grid.size());
  for (std::size_t g = 0; g < spec.iteration_grid.size(); ++g) {
    table.rows[g].iters = spec.iteration_grid[g];
    table.rows[g].per_seed.assign(static_cast<std::size_t>(reps), kNaN);
    table.rows[g].per_seed_time.assign(static_cast<std::size_t>(reps), kNaN);
  }
  std::vector<std::string> diag(static_cast<std::size_t>(reps));

  parallel_for(reps, spec.threads, [&](int r) {
    const Instance inst = make_instance(spec, replication_seed(spec, r));
    const RunOutcome run = run_solver(spec, inst, n_max);
    if (run.failed) diag[static_cast<std::size_t>(r)] = "seed " + std::to_string(replication_seed(spec, r)) + ": " + run.diagnostic;
    for (std::size_t g = 0; g < spec.iteration_grid.size(); ++g) {
      if (run.failed) continue;
      const int N = spec.iteration_grid[g];
      const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(N), run.rows.size());
      table.rows[g].per_seed[static_cast<std::size_t>(r)] = estimate_at(spec, inst, run, N);
      table.rows[g].per_seed_time[static_cast<std::size_t>(r)] = idx > 0 ? run.rows[idx - 1].elapsed_ms : 0.0;
    }
  });

  for (auto& row : table.rows) {
    row.failed = static_cast<int>(std::count_if(row.per_seed.begin(), row.per_seed.end(),
                                                [](double v) { return std::isnan(v); }));
    fill_stats(row);
  }
  for (auto& d : diag) {
    if (!d.empty()) table.diagnostics.push_back(std::move(d));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Adaptive vs non-adaptive PL comparison
// ---------------------------------------------------------------------------

struct CompareRow {
  std::uint64_t seed = 0;
  /// Adaptive product bound on the adaptive trace (times the initial gap).
  double adaptive_bound = kNaN;
  /// Non-adaptive product with Delta_{i+1} = Delta, L_{i+1} = L on the same trace.
  double nonadaptive_bound = kNaN;
  /// Non-adaptive product on the fixed-Delta arm's own trace.
  double fixed_arm_bound = kNaN;
  double adaptive_gap = kNaN;
  double fixed_gap = kNaN;
  std::string adaptive_termination;
  std::string fixed_termination;
  bool arms_identical = false;
  std::vector<double> adaptive_factors;
  std::vector<double> nonadaptive_factors;
};

struct CompareReport {
  std::vector<CompareRow> rows;
};

inline bool same_trace(const PLTrace& a, const PLTrace& b) {
  if (a.records.size() != b.records.size() || a.termination != b.termination) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.f_next != y.f_next || x.L != y.L || x.Delta != y.Delta || x.h != y.h || x.g_tilde_norm != y.g_tilde_norm) {
      return false;
    }
  }
  return a.x_last == b.x_last;
}

/// Paired runs of the PL method on identical seeds: adaptive Delta_k (with
/// the clamp at Delta) against Delta_k fixed at Delta.
inline CompareReport compare_adaptive_nonadaptive(const ExperimentSpec& spec) {
  validate(spec);
  if (spec.solver != SolverKind::algo2) throw std::invalid_argument("compare requires solver = algo2");
  if (spec.task != Task::pl_quadratic) throw std::invalid_argument("compare requires task = pl-quadratic");
  const int N = spec.iteration_grid.back();
  CompareReport rep;
  rep.rows.resize(static_cast<std::size_t>(spec.replications));

  parallel_for(spec.replications, spec.threads, [&](int r) {
    const std::uint64_t seed = replication_seed(spec, r);
    const Instance a_inst = make_instance(spec, seed);
    const Instance f_inst = make_instance(spec, seed);
    const double mu = *a_inst.mu;
    const double L = *a_inst.L_true;
    const double gap0 = a_inst.exact->value(a_inst.x0) - *a_inst.f_star;

    PLConfig base;
    base.x0 = a_inst.x0;
    base.L0 = spec.L0.value_or(2.0 * L);
    base.N = N;
    base.C = spec.C;
    base.mu = mu;
    base.f_star = a_inst.f_star;
    base.delta0 = spec.delta0;
    base.max_inner_per_iter = spec.max_inner;

    PLConfig adaptive = base;
    adaptive.Delta0 = spec.Delta0.value_or(2.0 * spec.Delta);
    if (spec.Delta > 0.0) adaptive.Delta_cap = spec.Delta;
    PLConfig fixed = base;
    fixed.Delta0 = spec.Delta;
    fixed.adapt_Delta = false;
    if (spec.Delta == 0.0) fixed.Delta0 = adaptive.Delta0;

    const PLTrace ta = algo2_run(adaptive, *a_inst.oracle);
    const PLTrace tf = algo2_run(fixed, *f_inst.oracle);

    CompareRow row;
    row.seed = seed;
    row.adaptive_bound = pl_rate_bound(ta, mu, spec.Delta) * gap0;
    row.nonadaptive_bound = pl_nonadaptive_bound(ta, mu, L, spec.Delta) * gap0;
    row.fixed_arm_bound = pl_nonadaptive_bound(tf, mu, L, spec.Delta) * gap0;
    row.adaptive_gap = ta.f_last - *a_inst.f_star;
    row.fixed_gap = tf.f_last - *f_inst.f_star;
    row.adaptive_termination = to_string(ta.termination);
    row.fixed_termination = to_string(tf.termination);
    row.arms_identical = same_trace(ta, tf);
    row.adaptive_factors = pl_rate_factors(ta, mu, spec.Delta);
    for (const auto& rec : ta.records) {
      const double ratio = std::max(0.0, rec.g_tilde_norm - spec.Delta) / (rec.g_tilde_norm + spec.Delta);
      row.nonadaptive_factors.push_back(1.0 - (mu / L) * ratio * ratio);
    }
    rep.rows[static_cast<std::size_t>(r)] = std::move(row);
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Oracle checks
// ---------------------------------------------------------------------------

/// max_i |g_i - fd_i| / max(||g||_inf, ||fd||_inf) with central differences
/// of step h; 0 when both vectors vanish.
inline double finite_diff_check(const ModelOracle& oracle, const Vector& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");
  const Vector g = oracle.gradient(x);
  Vector fd(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = oracle.value(xp);
    xp[i] = xi - h;
    const double fm = oracle.value(xp);
    xp[i] = xi;
    fd[i] = (fp - fm) / (2.0 * h);
  }
  const double scale = std::max(g.lpNorm<Eigen::Infinity>(), fd.lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  return (g - fd).lpNorm<Eigen::Infinity>() / scale;
}

struct ConformanceResult {
  double max_abs_psi_xx = 0.0;       ///< max |psi(x, x)|
  int midpoint_violations = 0;       ///< psi((y1+y2)/2, x) > mean + tol
  int trials = 0;
};

/// psi(x, x) = 0 and midpoint convexity of psi(., x) on random triples drawn
/// by `sample`.
template <class Sampler>
ConformanceResult conformance_check(const ModelOracle& oracle, Sampler&& sample, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ConformanceResult res;
  res.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const Vector x = sample(rng);
    const Vector y1 = sample(rng);
    const Vector y2 = sample(rng);
    const Linearization lin = linearize(oracle, x);
    res.max_abs_psi_xx = std::max(res.max_abs_psi_xx, std::abs(lin.model(x)));
    const double mid = lin.model(0.5 * (y1 + y2));
    const double avg = 0.5 * (lin.model(y1) + lin.model(y2));
    const double tol = 1e-12 * (1.0 + std::abs(lin.model(y1)) + std::abs(lin.model(y2)));
    if (mid > avg + tol) ++res.midpoint_violations;
  }
  return res;
}

/// Uniform point in the ball of the given radius around the origin.
inline Vector sample_ball(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector u(n);
  for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
  return (r / u.norm()) * u;
}

/// Point at which the objective is differentiable with margin `margin`
/// (away from every kink), or nullopt for a problem without kinks.
inline bool is_smooth_point(const BallSumProblem& p, const Vector& x, double margin) {
  for (const auto& a : p.centers) {
    if (std::abs((x - a).norm() - p.ball_radius) < margin) return false;
  }
  return true;
}

inline bool is_smooth_point(const MinMaxBallProblem& p, const Vector& x, double margin) {
  double first = -1.0;
  double second = -1.0;
  for (const auto& a : p.points) {
    const double d = (x - a).norm();
    if (d > first) {
      second = first;
      first = d;
    } else if (d > second) {
      second = d;
    }
  }
  return first - second >= margin && first > margin;
}

struct CheckLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Oracle conformance and gradient checks for every problem family.
inline std::vector<CheckLine> run_checks(const ExperimentSpec& spec, int fd_points = 100, int triples = 1000) {
  std::vector<CheckLine> out;
  const long n = effective_dim(spec);
  const std::uint64_t seed = spec.seed;
  std::mt19937_64 rng(seed + 17);
  constexpr double kFdTol = 1e-5;
  constexpr double kH = 1e-6;

  auto add = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };
  auto conformance_line = [&](const std::string& family, const ModelOracle& o, auto sampler) {
    const ConformanceResult c = conformance_check(o, sampler, triples, seed + 1);
    add(family + " model conformance", c.max_abs_psi_xx == 0.0 && c.midpoint_violations == 0,
        "max|psi(x,x)|=" + format_double(c.max_abs_psi_xx) + " midpoint violations=" +
            std::to_string(c.midpoint_violations) + "/" + std::to_string(c.trials));
  };

  {
    auto p = std::make_shared<const BallSumProblem>(generate_task1(n, spec.m, seed));
    BallSumOracle o(p);
    auto sampler = [n](std::mt19937_64& g) { return sample_ball(g, n, 1.0); };
    conformance_line("task1", o, sampler);
    double worst = 0.0;
    for (int i = 0; i < fd_points;) {
      const Vector x = sample_ball(rng, n, 1.0);
      if (!is_smooth_point(*p, x, 1e-3)) continue;
      worst = std::max(worst, finite_diff_check(o, x, kH));
      ++i;
    }
    add("task1 finite differences", worst < kFdTol, "max rel err=" + format_double(worst));
  }
  {
    auto p = std::make_shared<const MinMaxBallProblem>(generate_task2(n, spec.m, seed));
    CoveringOracle o(p);
    auto sampler = [n](std::mt19937_64& g) { return sample_ball(g, n, 1.0); };
    conformance_line("task2", o, sampler);
    double worst = 0.0;
    for (int i = 0; i < fd_points;) {
      const Vector x = sample_ball(rng, n, 1.0);
      if (!is_smooth_point(*p, x, 1e-3)) continue;
      worst = std::max(worst, finite_diff_check(o, x, kH));
      ++i;
    }
    add("task2 finite differences", worst < kFdTol, "max rel err=" + format_double(worst));
  }
  {
    ExperimentSpec qs = spec;
    qs.n = 50;
    qs.m = 20;
    auto q = detail::make_quadratic(qs, seed);
    auto o = std::make_shared<QuadraticOracle>(q);
    auto sampler = [](std::mt19937_64& g) { return sample_ball(g, 50, 3.0); };
    conformance_line("pl-quadratic", *o, sampler);
    double worst = 0.0;
    for (int i = 0; i < fd_points; ++i) worst = std::max(worst, finite_diff_check(*o, sample_ball(rng, 50, 3.0), kH));
    add("pl-quadratic finite differences", worst < kFdTol, "max rel err=" + format_double(worst));

    // PL inequality f - f* <= ||grad f||^2 / (2 mu) on random points.
    int pl_viol = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vector x = sample_ball(rng, 50, 3.0);
      const double lhs = q->value(x) - q->f_star;
      const double rhs = q->gradient(x).squaredNorm() / (2.0 * q->mu);
      if (lhs > rhs + 1e-9 * (1.0 + std::abs(rhs))) ++pl_viol;
    }
    add("pl-quadratic PL inequality", pl_viol == 0, "violations=" + std::to_string(pl_viol) + "/1000");

    auto comp = composite_oracle(o, CompositeTerm::l1(spec.l1_weight));
    conformance_line("composite", *comp, sampler);
    double worst_c = 0.0;
    for (int i = 0; i < fd_points; ++i) worst_c = std::max(worst_c, finite_diff_check(*o, sample_ball(rng, 50, 3.0), kH));
    add("composite smooth-part finite differences", worst_c < kFdTol, "max rel err=" + format_double(worst_c));

    const double Delta = spec.Delta > 0.0 ? spec.Delta : 0.1;
    const double delta = spec.delta > 0.0 ? spec.delta : 0.01;
    NoisyOracle noisy(o, Delta, delta, spec.mode, noise_seed(seed));
    double worst_g = 0.0;
    double worst_f = 0.0;
    bool value_ok = true;
    bool grad_ok = true;
    for (int i = 0; i < 10000; ++i) {
      const Vector x = sample_ball(rng, 50, 3.0);
      const Vector g = o->gradient(x);
      const double dev = (noisy.gradient(x) - g).norm();
      worst_g = std::max(worst_g, dev);
      // Adding the noise to g rounds at the scale of ||g||.
      grad_ok = grad_ok && dev <= Delta + 1e-13 * (1.0 + g.norm());
      const double f = o->value(x);
      const double fd = noisy.value(x);
      value_ok = value_ok && fd <= f && fd >= f - delta;
      worst_f = std::max(worst_f, f - fd);
    }
    add("noisy oracle envelopes", grad_ok && value_ok,
        "max ||g~ - g||=" + format_double(worst_g) + " (Delta=" + format_double(Delta) + "), max f - f_delta=" +
            format_double(worst_f) + " (delta=" + format_double(delta) + ")");
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "iter,f_value,f_best,L_k,delta_k,Delta_k,inner_calls,step_norm,cert_bound,elapsed_ms";
inline constexpr const char* kTableHeader = "iters,mean_estimate,std_estimate,mean_time_ms";

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << kTraceHeader << '\n';
  for (const auto& r : rows) {
    os << r.iter << ',' << csv_number(r.f_value) << ',' << csv_number(r.f_best) << ',' << csv_number(r.L_k) << ','
       << csv_number(r.delta_k) << ',' << csv_number(r.Delta_k) << ',' << r.inner_calls << ','
       << csv_number(r.step_norm) << ',' << csv_number(r.cert_bound) << ',' << csv_number(r.elapsed_ms) << '\n';
  }
}

inline void write_table_csv(std::ostream& os, const ResultTable& table) {
  os << kTableHeader << '\n';
  for (const auto& r : table.rows) {
    os << r.iters << ',' << csv_number(r.mean_estimate) << ',' << csv_number(r.std_estimate) << ','
       << csv_number(r.mean_time_ms) << '\n';
  }
}

inline void write_seed_csv(std::ostream& os, const ExperimentSpec& spec, const ResultTable& table) {
  os << "iters,seed,estimate,time_ms\n";
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
      os << r.iters << ',' << replication_seed(spec, static_cast<int>(i)) << ',' << csv_number(r.per_seed[i]) << ','
         << csv_number(r.per_seed_time[i]) << '\n';
    }
  }
}

inline void write_compare_csv(std::ostream& os, const CompareReport& rep) {
  os << "seed,adaptive_bound,nonadaptive_bound,fixed_arm_bound,adaptive_gap,fixed_gap,adaptive_termination,"
        "fixed_termination,arms_identical\n";
  for (const auto& r : rep.rows) {
    os << r.seed << ',' << csv_number(r.adaptive_bound) << ',' << csv_number(r.nonadaptive_bound) << ','
       << csv_number(r.fixed_arm_bound) << ',' << csv_number(r.adaptive_gap) << ',' << csv_number(r.fixed_gap) << ','
       << r.adaptive_termination << ',' << r.fixed_termination << ',' << (r.arms_identical ? 1 : 0) << '\n';
  }
}

inline void write_factor_csv(std::ostream& os, const CompareReport& rep) {
  os << "seed,iter,adaptive_factor,nonadaptive_factor\n";
  for (const auto& r : rep.rows) {
    for (std::size_t i = 0; i < r.adaptive_factors.size(); ++i) {
      os << r.seed << ',' << i << ',' << csv_number(r.adaptive_factors[i]) << ','
         << csv_number(r.nonadaptive_factors[i]) << '\n';
    }
  }
}

/// Writes via a temporary file in the same directory, then renames.
template <class Writer>
void write_file_atomic(const std::string& path, Writer&& write) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    write(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace inexact::harness
