#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scendo/programs.hpp"
#include "scendo/rmc.hpp"
#include "scendo/types.hpp"

namespace scendo {

using DensityFn = std::function<double(std::span<const double> a)>;

struct SdConfig {
  std::size_t max_iter = 12;
  /// phi_k(theta) = metric_k <= threshold; K collects the requirements where it fails.
  RmcMetric metric = RmcMetric::AUpper;
  double threshold = 1e-3;
  RmcConfig rmc;
  double j_bound = std::numeric_limits<double>::infinity();
  /// Training size of the baseline design; grown by n_a_growth while K is nonempty.
  std::size_t n_a_init = 20;
  double n_a_growth = 1.3;
  std::size_t n_a_cap = 200;
  std::size_t n_e = 100;
  double lambda_div = 10.0;
  /// Aleatory density f_a; constant when empty.
  DensityFn density;
  /// Program re-solved at every iteration. alpha_a is driven by the loop; alpha_e, rho, kappa
  /// and gamma come from `alphas`.
  Formulation formulation = Formulation::RiskAgnosticLocal;
  AlphaConfig alphas;
  std::optional<MomentSpec> moment;
  ProgramOptions program;
  std::size_t threads = 0;

  void validate(const ProblemSpec& spec) const;
};

struct SdIteration {
  std::size_t iteration = 0;
  std::size_t n_a = 0;
  std::size_t n_e = 0;
  Vector alpha_a;
  double objective = 0.0;
  std::vector<double> metric;  // per report row
  IndexSet violated;           // K
  Vector theta;
};

struct SdResult {
  Vector theta;
  std::vector<SdIteration> trace;
  bool spec_met = false;
  bool failed = false;
  std::string failure;
  IndexSet training_aleatory;  // rows of the testing aleatory set
  IndexSet training_epistemic;
  RmcReport final_report;
};

struct TrainingSelection {
  IndexSet indices;
  double value = 0.0;
  /// Per-requirement amounts by which the budgets had to be relaxed (0 when met exactly).
  std::vector<std::size_t> budget_slack;
};

/// Value of a selection for the training-set program: sum of gamma_i f_i over the selection
/// plus lambda times the log-determinant of the selection's covariance (regularized by
/// `ridge` times the identity).
double selection_value(const ScenarioMatrix& points, const std::vector<std::vector<bool>>& violates,
                       const std::vector<double>& density, double lambda, double ridge, const IndexSet& s);

/// Approximately maximizes selection_value over subsets of size n_target containing exactly
/// budgets[k] scenarios that violate requirement k (violates[i][k]). Greedy construction then
/// 1-swap refinement between scenarios of equal violation pattern; the best of the combined,
/// pure-likelihood and pure-diversity seeds is returned. Budgets above what the data allows
/// are relaxed and reported in budget_slack.
TrainingSelection select_training_aleatory(const ScenarioMatrix& points,
                                           const std::vector<std::vector<bool>>& violates,
                                           const std::vector<double>& density, std::size_t n_target,
                                           const std::vector<std::size_t>& budgets, double lambda);

/// The n_target epistemic scenarios with the largest max_i worst[i, j] over the selected rows.
IndexSet select_training_epistemic(const Eigen::MatrixXd& worst, const IndexSet& aleatory_rows,
                                   std::size_t n_target);

/// b_k = ceil(n_a / n'_a * #{i : max_j r_k(a_i, e_j) > 0}).
std::vector<std::size_t> default_budgets(const std::vector<std::vector<bool>>& violates, std::size_t n_a);

SdResult run_sd(const ProblemSpec& spec, const ScenarioMatrix& testing_aleatory,
                const ScenarioMatrix& testing_epistemic, const Vector& baseline, const SdConfig& cfg);

}  // namespace scendo
