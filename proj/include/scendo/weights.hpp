#pragma once

#include <cstddef>
#include <vector>

#include "scendo/types.hpp"

namespace scendo {

/// Epistemic weights for one requirement: w_j = exp(-gamma * max(0, v_j - s)), where v_j is the
/// worst requirement value over the aleatory inliers at epistemic scenario j and s is the
/// (1 - alpha_e) quantile of v.
struct WeightSequence {
  std::vector<double> weights;
  double threshold = 0.0;
  std::vector<double> worst_case;  // v_j
  IndexSet aleatory_inliers;       // I_a
};

/// `values` is the n_a x n_e grid r_k(theta, a_i, e_j) for a single requirement k.
/// Requires alpha_a in [0, 1], alpha_e in [0, 1), gamma >= 1.
WeightSequence compute_weights(const ScenarioMatrix& values, double alpha_a, double alpha_e,
                               double gamma);

WeightSequence compute_weights(const ProblemSpec& spec, const Vector& theta, std::size_t k,
                               const ScenarioData& data, double alpha_a, double alpha_e,
                               double gamma);

/// Empirical failure probability of each pseudo-distribution: 1 - F_{row i}(0).
std::vector<double> pseudo_failure_probabilities(const ScenarioMatrix& values);

}  // namespace scendo
