#include "scendo/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scendo/ecdf.hpp"

namespace scendo {

std::vector<double> pseudo_failure_probabilities(const ScenarioMatrix& values) {
  std::vector<double> p(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    p[static_cast<std::size_t>(i)] = 1.0 - empirical_cdf(row_span(values, i), 0.0);
  return p;
}

WeightSequence compute_weights(const ScenarioMatrix& values, double alpha_a, double alpha_e,
                               double gamma) {
  if (!(alpha_a >= 0.0 && alpha_a <= 1.0)) throw InputError("compute_weights: alpha_a outside [0,1]");
  if (!(alpha_e >= 0.0 && alpha_e < 1.0)) throw InputError("compute_weights: alpha_e outside [0,1)");
  if (!(gamma >= 1.0)) throw InputError("compute_weights: gamma must be >= 1");
  if (values.rows() < 1 || values.cols() < 1) throw InputError("compute_weights: empty grid");

  WeightSequence out;
  const auto p = pseudo_failure_probabilities(values);
  const double cut = empirical_quantile(p, 1.0 - alpha_a);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] <= cut) out.aleatory_inliers.push_back(i);
  if (out.aleatory_inliers.empty()) throw NumericalError("compute_weights: empty aleatory inlier set");

  const auto n_e = static_cast<std::size_t>(values.cols());
  out.worst_case.assign(n_e, -std::numeric_limits<double>::infinity());
  for (auto i : out.aleatory_inliers)
    for (std::size_t j = 0; j < n_e; ++j)
      out.worst_case[j] = std::max(out.worst_case[j], values(static_cast<Eigen::Index>(i),
                                                             static_cast<Eigen::Index>(j)));
  out.threshold = empirical_quantile(out.worst_case, 1.0 - alpha_e);
  out.weights.resize(n_e);
  for (std::size_t j = 0; j < n_e; ++j)
    out.weights[j] = std::exp(-gamma * std::max(0.0, out.worst_case[j] - out.threshold));
  return out;
}

WeightSequence compute_weights(const ProblemSpec& spec, const Vector& theta, std::size_t k,
                               const ScenarioData& data, double alpha_a, double alpha_e,
                               double gamma) {
  if (k >= spec.requirement_count()) throw InputError("compute_weights: requirement index out of range");
  ScenarioMatrix g(data.aleatory.rows(), data.epistemic.rows());
  const auto& r = spec.requirements[k];
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      g(i, j) = r(as_span(theta), row_span(data.aleatory, i), row_span(data.epistemic, j));
  return compute_weights(g, alpha_a, alpha_e, gamma);
}

}  // namespace scendo
