// Command-line front end: solve, table1, compare, check.

#include "inexact/harness/experiment.hpp"
#include "inexact/harness/spec.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace h = inexact::harness;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> task, iters, solver, mode, estimate;
  std::optional<long> n;
  std::optional<int> m, reps, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> Delta, delta, epsilon, L0, Delta0, C;
  bool full_scale = false;
  std::string out;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "config file with `key = value` lines");
  app->add_option("--task", o.task, "task1 | task2 | pl-quadratic | composite");
  app->add_option("--n", o.n, "dimension");
  app->add_option("--m", o.m, "number of balls / rows");
  app->add_option("--iters", o.iters, "iteration grid: 200..1000, 200..1000:100 or 100,200");
  app->add_option("--reps", o.reps, "replications");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--solver", o.solver, "algo1 | nonsmooth | algo2");
  app->add_option("--Delta", o.Delta, "injected gradient noise bound");
  app->add_option("--delta", o.delta, "injected value noise bound");
  app->add_option("--epsilon", o.epsilon, "target accuracy");
  app->add_option("--L0", o.L0, "initial L estimate");
  app->add_option("--Delta0", o.Delta0, "initial Delta estimate");
  app->add_option("--C", o.C, "PL constant C > 1");
  app->add_option("--mode", o.mode, "noise mode: random | adversarial");
  app->add_option("--estimate", o.estimate, "certificate | gap");
  app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app->add_flag("--full-scale", o.full_scale, "use n = 100000 for the ball tasks");
  app->add_option("--out", o.out, "output CSV path (stdout when omitted)");
}

h::ExperimentSpec build_spec(const Overrides& o) {
  h::ExperimentSpec s;
  if (!o.config.empty()) {
    s = h::parse_config_file(o.config);
  } else if (!o.task) {
    throw std::invalid_argument("either --config or --task is required");
  }
  if (o.task) s.task = h::parse_task(*o.task);
  if (o.n) s.n = *o.n;
  if (o.m) s.m = *o.m;
  if (o.iters) s.iteration_grid = h::parse_grid(*o.iters);
  if (o.reps) s.replications = *o.reps;
  if (o.seed) s.seed = *o.seed;
  if (o.solver) s.solver = h::parse_solver(*o.solver);
  if (o.Delta) s.Delta = *o.Delta;
  if (o.delta) s.delta = *o.delta;
  if (o.epsilon) s.epsilon = *o.epsilon;
  if (o.L0) s.L0 = *o.L0;
  if (o.Delta0) s.Delta0 = *o.Delta0;
  if (o.C) s.C = *o.C;
  if (o.mode) s.mode = inexact::parse_noise_mode(*o.mode);
  if (o.estimate) s.estimate = h::parse_estimate(*o.estimate);
  if (o.threads) s.threads = *o.threads;
  if (o.full_scale) s.full_scale = true;
  h::validate(s);
  return s;
}

template <class Writer>
void emit(const std::string& out, Writer&& w) {
  if (out.empty() || out == "-") {
    w(std::cout);
  } else {
    h::write_file_atomic(out, w);
  }
}

int cmd_solve(const Overrides& o) {
  const h::ExperimentSpec s = build_spec(o);
  const int N = s.iteration_grid.back();
  const h::Instance inst = h::make_instance(s, h::replication_seed(s, 0));
  const h::RunOutcome run = h::run_solver(s, inst, N);
  emit(o.out, [&](std::ostream& os) { h::write_trace_csv(os, run.rows); });
  std::cerr << "termination: " << run.termination << ", f(x_out) = " << h::csv_number(run.f_hat) << '\n';
  if (run.failed) {
    std::cerr << "error: " << run.diagnostic << '\n';
    return 2;
  }
  return 0;
}

int cmd_table1(const Overrides& o, const std::string& seeds_out) {
  const h::ExperimentSpec s = build_spec(o);
  const h::ResultTable t = h::run_experiment(s);
  emit(o.out, [&](std::ostream& os) { h::write_table_csv(os, t); });
  if (!seeds_out.empty()) h::write_file_atomic(seeds_out, [&](std::ostream& os) { h::write_seed_csv(os, s, t); });
  for (const auto& d : t.diagnostics) std::cerr << "warning: " << d << '\n';
  return 0;
}

int cmd_compare(const Overrides& o, const std::string& factors_out) {
  h::ExperimentSpec s = build_spec(o);
  const h::CompareReport rep = h::compare_adaptive_nonadaptive(s);
  emit(o.out, [&](std::ostream& os) { h::write_compare_csv(os, rep); });
  if (!factors_out.empty()) h::write_file_atomic(factors_out, [&](std::ostream& os) { h::write_factor_csv(os, rep); });
  int worse = 0;
  for (const auto& r : rep.rows) worse += r.adaptive_bound > r.nonadaptive_bound;
  std::cerr << rep.rows.size() - worse << "/" << rep.rows.size() << " seeds: adaptive bound <= nonadaptive bound\n";
  return 0;
}

int cmd_check(const Overrides& o, int points, int triples) {
  h::ExperimentSpec s = o.config.empty() && !o.task ? h::ExperimentSpec{} : build_spec(o);
  const auto lines = h::run_checks(s, points, triples);
  int failed = 0;
  for (const auto& l : lines) {
    std::cout << (l.passed ? "PASS " : "FAIL ") << l.name << "  " << l.detail << '\n';
    failed += !l.passed;
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive methods for inexact first-order models"};
  app.require_subcommand(1);

  Overrides solve_o, table_o, compare_o, check_o;
  std::string seeds_out, factors_out;
  int points = 100, triples = 1000;

  auto* solve = app.add_subcommand("solve", "single run, writes the per-iteration trace CSV");
  add_common(solve, solve_o);
  auto* table = app.add_subcommand("table1", "replicated runs over an iteration grid, writes the table CSV");
  add_common(table, table_o);
  table->add_option("--seeds-out", seeds_out, "per-seed CSV path");
  auto* compare = app.add_subcommand("compare", "adaptive vs fixed Delta for the PL method");
  add_common(compare, compare_o);
  compare->add_option("--factors-out", factors_out, "per-iteration factor CSV path");
  auto* check = app.add_subcommand("check", "oracle conformance and finite-difference checks");
  add_common(check, check_o);
  check->add_option("--points", points, "finite-difference points per family");
  check->add_option("--triples", triples, "conformance triples per family");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_o);
    if (*table) return cmd_table1(table_o, seeds_out);
    if (*compare) return cmd_compare(compare_o, factors_out);
    if (*check) return cmd_check(check_o, points, triples);
  } catch (const h::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
