#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "scendo/types.hpp"

namespace scendo {

/// Objective and inequality values (feasible when every entry is <= 0) at one point.
struct NlpEvaluation {
  double objective = 0.0;
  Vector constraints;
};

/// Box-constrained nonlinear program with inequality constraints.
///
/// Objective and constraints come from a single callback so builders can share work between
/// them; `from_functions` adapts the one-callable-per-inequality form.
struct NlpProblem {
  std::size_t dim = 0;
  std::function<NlpEvaluation(const Vector&)> evaluate;
  Box bounds;
  std::vector<Vector> starts;

  static NlpProblem from_functions(std::size_t dim, std::function<double(const Vector&)> objective,
                                   std::vector<std::function<double(const Vector&)>> inequalities,
                                   Box bounds, std::vector<Vector> starts = {});
};

struct NlpOptions {
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e10;
  double fd_step = 1e-6;  // relative: h_i = fd_step * max(1, |x_i|)
  std::size_t max_outer = 40;
  std::size_t max_inner = 400;
  double tol_x = 1e-6;  // relative outer-step stagnation
  double tol_con = 1e-7;
  std::size_t n_starts = 8;  // used only when the problem has no start points
  std::uint64_t seed = 1;

  void validate() const;
};

struct NlpResult {
  Vector x;
  double objective = 0.0;
  double max_violation = 0.0;
  SolverStatus status = SolverStatus::Failed;
  std::size_t best_start = 0;
  std::size_t starts_run = 0;
  std::size_t evaluations = 0;
  /// max(0, g_i) at the end of each outer iteration of the winning start.
  std::vector<double> violation_history;
};

/// Central finite-difference gradient. Throws NumericalError naming the coordinate when an
/// evaluation is not finite.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step);

/// Latin hypercube design of n points inside `box`, deterministic in seed.
std::vector<Vector> latin_hypercube(const Box& box, std::size_t n, std::uint64_t seed);

/// Minimizes the problem from every start point (Latin hypercube starts when none are given)
/// and returns the best result: lowest objective among points with violation <= tol_con,
/// otherwise the least infeasible point. Deterministic for a fixed problem and options.
NlpResult minimize(const NlpProblem& problem, const NlpOptions& options);

}  // namespace scendo
