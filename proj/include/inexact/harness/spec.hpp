#pragma once

// Experiment description and its line-based `key = value` config format.

#include "inexact/problems.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace inexact::harness {

enum class Task { task1, task2, pl_quadratic, composite };
enum class SolverKind { algo1, nonsmooth, algo2 };
/// certificate: computable upper estimate of f(x_hat) - f* after N steps.
/// gap: f(x_best) - f_ref with f_ref the known optimum or a lower bound.
enum class EstimateKind { certificate, gap };

struct ParseError : std::runtime_error {
  ParseError(int line_no, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
  int line;
};

struct ExperimentSpec {
  Task task = Task::task1;
  long n = 1000;
  int m = 10;
  std::vector<int> iteration_grid{200, 400, 600, 800, 1000};
  int replications = 10;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::algo1;
  /// Unset means problem-dependent: 2L for the PL method on quadratics, 1 otherwise.
  std::optional<double> L0;
  /// Unset means 2 * Delta for the PL method, 0.01 * L0 otherwise.
  std::optional<double> Delta0;
  double delta0 = 0.0;
  std::optional<double> epsilon;
  double C = 3.0;
  /// Injected gradient noise bound.
  double Delta = 0.0;
  /// Injected value noise bound.
  double delta = 0.0;
  NoiseMode mode = NoiseMode::random_sphere;
  EstimateKind estimate = EstimateKind::certificate;
  /// Condition number L/mu of generated quadratics.
  double cond = 100.0;
  /// Rank of generated quadratics; 0 means min(n, m).
  long rank = 0;
  double l1_weight = 0.1;
  /// Class constants supplied to the restart method; unset uses the
  /// problem's Lipschitz-derived defaults.
  std::optional<double> L_known;
  std::optional<double> Delta_known;
  int max_inner = 200;
  /// Paper-scale dimension (n = 100000) for the ball tasks.
  bool full_scale = false;
  /// Worker threads for replications; 0 = hardware concurrency.
  int threads = 0;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

inline const char* to_string(Task t) {
  switch (t) {
    case Task::task1: return "task1";
    case Task::task2: return "task2";
    case Task::pl_quadratic: return "pl-quadratic";
    case Task::composite: return "composite";
  }
  return "?";
}

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::algo1: return "algo1";
    case SolverKind::nonsmooth: return "nonsmooth";
    case SolverKind::algo2: return "algo2";
  }
  return "?";
}

inline const char* to_string(EstimateKind e) { return e == EstimateKind::certificate ? "certificate" : "gap"; }

inline Task parse_task(const std::string& s) {
  if (s == "task1") return Task::task1;
  if (s == "task2") return Task::task2;
  if (s == "pl-quadratic" || s == "pl_quadratic") return Task::pl_quadratic;
  if (s == "composite") return Task::composite;
  throw std::invalid_argument("unknown task '" + s + "'");
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "algo1") return SolverKind::algo1;
  if (s == "nonsmooth") return SolverKind::nonsmooth;
  if (s == "algo2") return SolverKind::algo2;
  throw std::invalid_argument("unknown solver '" + s + "'");
}

inline EstimateKind parse_estimate(const std::string& s) {
  if (s == "certificate") return EstimateKind::certificate;
  if (s == "gap") return EstimateKind::gap;
  throw std::invalid_argument("unknown estimate '" + s + "'");
}

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline long parse_long(const std::string& s) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

inline std::optional<double> parse_auto_double(const std::string& s) {
  if (s == "auto") return std::nullopt;
  return parse_double(s);
}

}  // namespace detail

/// "200,400,600", "200..1000" (step = first value) or "200..1000:100".
inline std::vector<int> parse_grid(const std::string& text) {
  const std::string s = detail::trim(text);
  std::vector<int> grid;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const long lo = detail::parse_long(detail::trim(s.substr(0, dots)));
    std::string rest = s.substr(dots + 2);
    long step = lo;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
      step = detail::parse_long(detail::trim(rest.substr(colon + 1)));
      rest = rest.substr(0, colon);
    }
    const long hi = detail::parse_long(detail::trim(rest));
    if (lo < 1 || step < 1 || hi < lo) throw std::invalid_argument("bad iteration range '" + s + "'");
    for (long v = lo; v <= hi; v += step) grid.push_back(static_cast<int>(v));
  } else {
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(static_cast<int>(detail::parse_long(detail::trim(item))));
  }
  if (grid.empty()) throw std::invalid_argument("empty iteration grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw std::invalid_argument("iteration counts must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1]) throw std::invalid_argument("iteration grid must be strictly increasing");
  }
  return grid;
}

inline void validate(const ExperimentSpec& s) {
  if (s.n < 1 || s.m < 1) throw std::invalid_argument("n and m must be >= 1");
  if (s.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (s.iteration_grid.empty()) throw std::invalid_argument("empty iteration grid");
  for (std::size_t i = 1; i < s.iteration_grid.size(); ++i) {
    if (s.iteration_grid[i] <= s.iteration_grid[i - 1]) {
      throw std::invalid_argument("iteration grid must be strictly increasing");
    }
  }
  if (s.iteration_grid.front() < 1) throw std::invalid_argument("iteration counts must be >= 1");
  if (!(s.C > 1.0)) throw std::invalid_argument("C must exceed 1");
  if (!(s.Delta >= 0.0) || !(s.delta >= 0.0) || !(s.delta0 >= 0.0)) {
    throw std::invalid_argument("noise levels must be >= 0");
  }
  if (s.L0 && !(*s.L0 > 0.0)) throw std::invalid_argument("L0 must be positive");
  if (s.Delta0 && !(*s.Delta0 >= 0.0)) throw std::invalid_argument("Delta0 must be >= 0");
  if (s.epsilon && !(*s.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (s.max_inner < 1) throw std::invalid_argument("max_inner must be >= 1");
}

/// Applies one `key = value` assignment. Throws std::invalid_argument on a
/// bad value and std::out_of_range on an unknown key.
inline void apply_setting(ExperimentSpec& s, const std::string& key, const std::string& value) {
  using detail::parse_auto_double;
  using detail::parse_bool;
  using detail::parse_long;
  if (key == "task") s.task = parse_task(value);
  else if (key == "n") s.n = parse_long(value);
  else if (key == "m") s.m = static_cast<int>(parse_long(value));
  else if (key == "iteration_grid") s.iteration_grid = parse_grid(value);
  else if (key == "replications") s.replications = static_cast<int>(parse_long(value));
  else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_long(value));
  else if (key == "solver") s.solver = parse_solver(value);
  else if (key == "L0") s.L0 = parse_auto_double(value);
  else if (key == "Delta0") s.Delta0 = parse_auto_double(value);
  else if (key == "delta0") s.delta0 = parse_double(value);
  else if (key == "epsilon") s.epsilon = parse_auto_double(value);
  else if (key == "C") s.C = parse_double(value);
  else if (key == "Delta") s.Delta = parse_double(value);
  else if (key == "delta") s.delta = parse_double(value);
  else if (key == "mode") s.mode = parse_noise_mode(value);
  else if (key == "estimate") s.estimate = parse_estimate(value);
  else if (key == "cond") s.cond = parse_double(value);
  else if (key == "rank") s.rank = parse_long(value);
  else if (key == "l1_weight") s.l1_weight = parse_double(value);
  else if (key == "L_known") s.L_known = parse_auto_double(value);
  else if (key == "Delta_known") s.Delta_known = parse_auto_double(value);
  else if (key == "max_inner") s.max_inner = static_cast<int>(parse_long(value));
  else if (key == "full_scale") s.full_scale = parse_bool(value);
  else if (key == "threads") s.threads = static_cast<int>(parse_long(value));
  else throw std::out_of_range("unknown key '" + key + "'");
}

inline ExperimentSpec parse_config(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  int line_no = 0;
  bool saw_task = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = detail::trim(body.substr(0, eq));
    const std::string value = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");
    try {
      apply_setting(spec, key, value);
    } catch (const std::out_of_range& e) {
      throw ParseError(line_no, e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, std::string("bad value for '") + key + "': " + e.what());
    }
    if (key == "task") saw_task = true;
  }
  if (!saw_task) throw ParseError(line_no, "missing required key 'task'");
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line_no, e.what());
  }
  return spec;
}

inline ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in);
}

inline ExperimentSpec parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// Serialises every field; parse_config(write_config(s)) == s.
inline std::string write_config(const ExperimentSpec& s) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("auto"); };
  std::ostringstream os;
  os << "task = " << to_string(s.task) << '\n';
  os << "n = " << s.n << '\n';
  os << "m = " << s.m << '\n';
  os << "iteration_grid = ";
  for (std::size_t i = 0; i < s.iteration_grid.size(); ++i) os << (i ? "," : "") << s.iteration_grid[i];
  os << '\n';
  os << "replications = " << s.replications << '\n';
  os << "seed = " << s.seed << '\n';
  os << "solver = " << to_string(s.solver) << '\n';
  os << "L0 = " << opt(s.L0) << '\n';
  os << "Delta0 = " << opt(s.Delta0) << '\n';
  os << "delta0 = " << format_double(s.delta0) << '\n';
  os << "epsilon = " << opt(s.epsilon) << '\n';
  os << "C = " << format_double(s.C) << '\n';
  os << "Delta = " << format_double(s.Delta) << '\n';
  os << "delta = " << format_double(s.delta) << '\n';
  os << "mode = " << to_string(s.mode) << '\n';
  os << "estimate = " << to_string(s.estimate) << '\n';
  os << "cond = " << format_double(s.cond) << '\n';
  os << "rank = " << s.rank << '\n';
  os << "l1_weight = " << format_double(s.l1_weight) << '\n';
  os << "L_known = " << opt(s.L_known) << '\n';
  os << "Delta_known = " << opt(s.Delta_known) << '\n';
  os << "max_inner = " << s.max_inner << '\n';
  os << "full_scale = " << (s.full_scale ? "true" : "false") << '\n';
  os << "threads = " << s.threads << '\n';
  return os.str();
}

}  // namespace inexact::harness
