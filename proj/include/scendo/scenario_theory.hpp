#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "scendo/nlp.hpp"
#include "scendo/types.hpp"

namespace scendo {

/// 1 - t, with t the smaller root in [0, 1] of
///   C(n,k) t^(n-k) - beta/(2n) sum_{i=k}^{n-1} C(i,k) t^(i-k) - beta/(6n) sum_{i=n+1}^{4n} C(i,k) t^(i-k) = 0.
/// Returns 1 for k = n. Requires 0 <= k <= n, n >= 1, beta in (0, 1).
double epsilon_bar(std::size_t n_a, std::size_t k, double beta);

/// Log of the residual ratio lhs / rhs of the polynomial above at t = exp(s); positive strictly
/// between the two roots. Exposed for tests.
double epsilon_log_ratio(std::size_t n_a, std::size_t k, double beta, double s);

/// A scenario program: same data in, same result out.
using ScenarioSolver = std::function<SolveResult(const ScenarioData&)>;

/// Leave-one-out support set: i is a support scenario when removing aleatory scenario i moves
/// the optimum by more than tol in the max norm. Throws NumericalError naming i when a
/// leave-one-out solve fails.
IndexSet support_scenarios(const ScenarioSolver& solver, const ScenarioData& data, const Vector& theta_star,
                           double tol = 1e-4, std::size_t threads = 0);

enum class ContainmentVerdict { Violated, ProbablyContained, Contained };
std::string to_string(ContainmentVerdict v);

enum class ContainmentTest { Auto, Sampling, Optimization };
std::string to_string(ContainmentTest t);
ContainmentTest containment_test_from_string(const std::string& s);

struct SamplingContainment {
  ContainmentVerdict verdict = ContainmentVerdict::ProbablyContained;
  /// Zero-failure upper bound on the violating fraction of E (0 when violated).
  double bound = 0.0;
  std::size_t probes_used = 0;
  double worst_value = 0.0;  // largest r_max seen
  Vector worst_point;
};

/// Draws up to n_probe uniform points of E and stops at the first with r_max > 0.
SamplingContainment set_containment_sampling(const ProblemSpec& spec, const Vector& theta, const Vector& a,
                                             const EpistemicSet& set, std::size_t n_probe,
                                             std::uint64_t seed, double sigma = 0.95);

struct OptContainmentOptions {
  double activation = 1e-8;  // r_max >= activation counts as a violation
  /// The violating point is sought inside E scaled by this factor, so radii slightly beyond
  /// E are still reported.
  double search_factor = 2.0;
  std::size_t seed_probes = 64;
  std::size_t n_starts = 4;
  std::uint64_t seed = 1;
  NlpOptions nlp{.tol_con = 1e-10, .n_starts = 4};
};

struct OptContainment {
  ContainmentVerdict verdict = ContainmentVerdict::Contained;
  Vector e_star;  // empty when no violating point was found
  /// Distance from the center of E to the closest violating point, +inf when none was found.
  double radius = 0.0;
  bool fell_back = false;  // the inner solve failed and the sampling test decided
};

/// Maximal-set test: min ||c - e|| subject to r_max(theta, a, e) >= activation.
OptContainment set_containment_opt(const ProblemSpec& spec, const Vector& theta, const Vector& a,
                                   const EpistemicSet& set, const OptContainmentOptions& opts = {});

struct RiskBoundReport {
  std::size_t n_a = 0;
  std::size_t n_support = 0;
  std::size_t n_violation = 0;
  std::size_t set_complexity = 0;
  double epsilon_bar = 1.0;
  double beta = 1e-4;
  std::string containment_test;
  /// False for designs trained on non-IID data, where the bound does not apply.
  bool valid = true;
  IndexSet support;
  IndexSet violating;
};

struct SetComplexityOptions {
  double beta = 1e-4;
  ContainmentTest test = ContainmentTest::Auto;
  std::size_t n_probe = 2000;
  double tol_support = 1e-4;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  bool iid = true;
};

/// Counts scenarios that are support scenarios or lie in the failure domain of theta_star over
/// E, and the resulting bound. Moment formulations count every scenario as support, so their
/// bound is 1.
RiskBoundReport set_complexity(const ProblemSpec& spec, const ScenarioSolver& solver, const ScenarioData& data,
                               const Vector& theta_star, const EpistemicSet& set, Formulation formulation,
                               const SetComplexityOptions& opts = {});

}  // namespace scendo
