#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scendo/binomial.hpp"
#include "scendo/types.hpp"

namespace scendo {

struct RmcConfig {
  Vector alpha_a_prime;  // per requirement, [0, 1]
  Vector alpha_e_prime;  // per requirement, [0, 1]
  double sigma = 0.95;
  Vector p_max;  // acceptable failure probability per requirement
  /// Analyze r_max instead of each r_k; the report then has a single row and the per-requirement
  /// vectors must hold one entry.
  bool total_failure = false;

  static RmcConfig uniform(std::size_t n_r, double alpha_a, double alpha_e, double sigma, double p_max);
  /// Number of report rows: 1 for total failure, else n_r.
  std::size_t rows(std::size_t n_r) const { return total_failure ? 1 : n_r; }
  void validate(std::size_t n_r) const;
};

struct RmcRequirementReport {
  Interval range_a;
  Interval range_b;
  double point_c = 0.0;
  Interval range_d;
  std::vector<double> failure_probs;        // p_k(e_j), one per epistemic scenario
  std::vector<double> upper_failure_probs;  // 1 - lower CI of F(0), one per epistemic scenario
};

struct RmcReport {
  std::vector<RmcRequirementReport> requirements;
  std::size_t n_a_test = 0;
  std::size_t n_e_test = 0;
};

/// Which robustness metric a specification is cast in.
enum class RmcMetric { AUpper, BUpper, C, DUpper };
std::string to_string(RmcMetric m);
RmcMetric rmc_metric_from_string(const std::string& s);
double metric_value(const RmcRequirementReport& r, RmcMetric m);

/// Requirement values on the testing grid, column j holding r(theta, A', e_j) for all a in A'.
/// One matrix per requirement, or a single r_max matrix when total_failure is set.
std::vector<Eigen::MatrixXd> testing_grid(const ProblemSpec& spec, const Vector& theta,
                                          const ScenarioMatrix& aleatory, const ScenarioMatrix& epistemic,
                                          bool total_failure, std::size_t threads = 0);

/// Range of failure probabilities over the epistemic scenarios for one requirement grid.
Interval failure_prob_range(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime);

/// Range widened by the aleatory confidence intervals.
Interval ci_range(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime, double sigma);

struct SpecViolation {
  double point_c = 0.0;
  Interval range_d;
};
SpecViolation spec_violation(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime,
                             double sigma, double p_max);

/// Everything above for one requirement grid.
RmcRequirementReport analyze_grid(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime,
                                  double sigma, double p_max);

/// Full analysis on the testing sets (n'_a, n'_e >= 2).
RmcReport rmc_analyze(const ProblemSpec& spec, const Vector& theta, const ScenarioMatrix& aleatory,
                      const ScenarioMatrix& epistemic, const RmcConfig& cfg, std::size_t threads = 0);

}  // namespace scendo
