#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "scendo/nlp.hpp"
#include "scendo/types.hpp"

namespace scendo {

/// Moment of the response used by the moment-based programs. Only the mean is implemented.
struct MomentSpec {
  enum class Kind { Mean };
  ResponseFn response;
  Kind kind = Kind::Mean;
  /// Fraction of epistemic scenarios ignored when taking each response quantile.
  double alpha_e = 0.0;
};

/// Which set of epistemic outliers a program removes.
enum class OutlierScope { Global, Local };

struct ProgramOptions {
  NlpOptions nlp;
  /// Latin hypercube design starts, in addition to any warm starts.
  std::size_t n_starts = 8;
  /// Design vectors tried first; slack/level/alpha coordinates are filled in feasibly.
  std::vector<Vector> warm_starts;
  double xi_upper = 1e6;
  double lambda_lower = -1e6;
  double lambda_upper = 1e6;
  /// sgn(xi) ~ xi / (xi + sgn_eps) inside the global risk-averse weights.
  double sgn_eps = 1e-8;
  /// Slacks above this count as nonzero; quantiles above it mark aleatory outliers.
  double report_tol = 1e-6;
  /// Run the feasibility seed when a risk-agnostic solve comes back infeasible.
  bool suggest_on_infeasible = true;
};

/// The n_e requirement values r_k(theta, a_i, E) of one aleatory scenario.
struct PseudoDistribution {
  std::vector<double> values;
  std::size_t aleatory_index = 0;
  std::size_t requirement_index = 0;
};

PseudoDistribution pseudo_distribution(const ProblemSpec& spec, const Vector& theta, std::size_t k,
                                       std::size_t i, const ScenarioData& data);

/// min J + rho sum xi  s.t.  w_kj r_k(theta, a_i, e_j) <= xi_i, with weights shared by all
/// aleatory scenarios (one global set of epistemic outliers).
SolveResult solve_risk_averse_global(const ProblemSpec& spec, const ScenarioData& data,
                                     const AlphaConfig& cfg, const ProgramOptions& opts = {});

/// min J + rho sum xi  s.t.  quantile_j(r_k(theta, a_i, e_j), 1 - alpha_e,k) <= xi_i.
SolveResult solve_risk_averse_local(const ProblemSpec& spec, const ScenarioData& data,
                                    const AlphaConfig& cfg, const ProgramOptions& opts = {});

/// min J  s.t.  quantile_i(max_j w_kj r_k(theta, a_i, e_j), 1 - alpha_a,k) <= 0.
SolveResult solve_risk_agnostic_global(const ProblemSpec& spec, const ScenarioData& data,
                                       const AlphaConfig& cfg, const ProgramOptions& opts = {});

/// min J  s.t.  quantile_i(quantile_j(r_k(theta, a_i, e_j), 1 - alpha_e,k), 1 - alpha_a,k) <= 0.
SolveResult solve_risk_agnostic_local(const ProblemSpec& spec, const ScenarioData& data,
                                      const AlphaConfig& cfg, const ProgramOptions& opts = {});

struct FeasibilitySeedResult {
  Vector theta;
  /// Lower bound on the alpha_a making the matching risk-agnostic program feasible.
  Vector alpha_a;
  SolveResult result;
};

/// min omega.alpha_a over (theta, alpha_a in [0,1]^n_r) subject to the risk-agnostic quantile
/// constraints with alpha_a as a decision variable.
FeasibilitySeedResult solve_feasibility_seed(const ProblemSpec& spec, const ScenarioData& data,
                                             const AlphaConfig& cfg, const Vector& omega,
                                             OutlierScope variant, const ProgramOptions& opts = {});

/// min lambda + rho sum xi  s.t.  local quantile constraints <= xi_i and
/// weighted-mean(H, exp(-kappa xi)) <= lambda.
SolveResult solve_moment_risk_averse(const ProblemSpec& spec, const ScenarioData& data,
                                     const AlphaConfig& cfg, const MomentSpec& moment,
                                     const ProgramOptions& opts = {});

/// min lambda  s.t.  quantile_i(G_i, 1 - alpha_a) <= 0 where G_i is the larger of the mean of
/// the rank(i) lowest response quantiles minus lambda and the requirement quantiles of a_i.
SolveResult solve_moment_risk_agnostic(const ProblemSpec& spec, const ScenarioData& data,
                                       const AlphaConfig& cfg, const MomentSpec& moment,
                                       double alpha_a, const ProgramOptions& opts = {});

struct Outliers {
  IndexSet aleatory;
  std::vector<IndexSet> epistemic;  // per aleatory scenario
};

/// O_a = {i : max_k q_ki > tol}, O_e(i) = {j : r_k(theta, a_i, e_j) > q_ki for some k}, with
/// q_ki the (1 - alpha_e,k) quantile of the i-th pseudo-distribution.
Outliers extract_outliers(const ProblemSpec& spec, const ScenarioData& data, const AlphaConfig& cfg,
                          const Vector& theta, double tol = 1e-6);

/// Risk-averse local solve at rho = 1e6, then the fraction of aleatory scenarios violating
/// each requirement: the simple strategy for picking a feasible alpha_a.
Vector suggest_alpha_by_penalty(const ProblemSpec& spec, const ScenarioData& data,
                                const AlphaConfig& cfg, const ProgramOptions& opts = {});

/// Everything needed to run any formulation through one entry point.
struct ProgramRequest {
  Formulation formulation = Formulation::RiskAverseLocal;
  AlphaConfig alphas;
  std::optional<MomentSpec> moment;
  /// Fraction for the moment risk-agnostic program; defaults to alphas.alpha_a[0].
  std::optional<double> moment_alpha_a;
  /// Feasibility seed weights (all ones when empty) and outlier scope.
  Vector omega;
  OutlierScope seed_scope = OutlierScope::Local;
  ProgramOptions options;

  void validate(const ProblemSpec& spec) const;
};

SolveResult solve(const ProblemSpec& spec, const ScenarioData& data, const ProgramRequest& request);

}  // namespace scendo
