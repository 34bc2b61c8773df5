#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scendo {

using Vector = Eigen::VectorXd;
/// Scenario matrices store one scenario per row; row-major so a row is a contiguous span.
using ScenarioMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexSet = std::vector<std::size_t>;

/// Malformed or dimensionally inconsistent input.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a valid result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::span<const double> row_span(const ScenarioMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Axis-aligned box in R^n.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  bool contains(const Vector& x) const;
  Vector project(const Vector& x) const;
  Vector center() const { return 0.5 * (lower + upper); }
};

/// Objective J(theta).
using ObjectiveFn = std::function<double(std::span<const double> theta)>;
/// Requirement r_k(theta, a, e); satisfied when <= 0. Must be pure and reentrant.
using RequirementFn = std::function<double(std::span<const double> theta, std::span<const double> a,
                                           std::span<const double> e)>;
/// Response h(theta, a, e) used by the moment-based programs.
using ResponseFn = RequirementFn;

struct ProblemSpec {
  std::string name;
  ObjectiveFn objective;
  std::vector<RequirementFn> requirements;
  Box design_bounds;
  std::size_t aleatory_dim = 0;
  std::size_t epistemic_dim = 0;

  std::size_t design_dim() const { return design_bounds.dim(); }
  std::size_t requirement_count() const { return requirements.size(); }

  /// Throws InputError when the spec is incomplete or inconsistent.
  void validate() const;
};

/// Worst-case requirement: max over k of r_k(theta, a, e).
double r_max(const ProblemSpec& spec, std::span<const double> theta, std::span<const double> a,
             std::span<const double> e);

/// Training sets A (n_a x m_a) and E (n_e x m_e), with optional testing sets A', E'.
struct ScenarioData {
  ScenarioMatrix aleatory;
  ScenarioMatrix epistemic;
  std::optional<ScenarioMatrix> testing_aleatory;
  std::optional<ScenarioMatrix> testing_epistemic;

  std::size_t n_a() const { return static_cast<std::size_t>(aleatory.rows()); }
  std::size_t n_e() const { return static_cast<std::size_t>(epistemic.rows()); }

  /// Checks column counts against the spec and that both training sets are nonempty.
  void validate(const ProblemSpec& spec) const;

  /// Copy without aleatory row i (the multi-point scenario a_i x E is removed as a whole).
  ScenarioData without_aleatory(std::size_t i) const;
  ScenarioData with_training(IndexSet aleatory_rows, const ScenarioMatrix& epistemic_rows) const;
};

/// E = {e : ||c - e|| <= nu} for a weighted max-norm (hyper-rectangle) or weighted 2-norm
/// (hyper-ellipsoid).
class EpistemicSet {
 public:
  enum class Norm { WeightedMax, Weighted2 };

  EpistemicSet(Vector center, double radius, Norm norm, Vector weights);

  /// Rectangle [lower, upper] as center (l+u)/2, weights 2/(u-l), radius 1.
  static EpistemicSet from_box(const Vector& lower, const Vector& upper);
  static EpistemicSet ellipsoid(Vector center, Vector semi_axes);
  static EpistemicSet singleton(Vector point);

  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  Norm norm_kind() const { return norm_; }
  const Vector& weights() const { return weights_; }
  std::size_t dim() const { return static_cast<std::size_t>(center_.size()); }

  double distance(std::span<const double> e) const;
  bool contains(std::span<const double> e) const;
  /// Smallest box enclosing the set.
  Box bounding_box() const;
  EpistemicSet with_radius(double radius) const;

  template <class Rng>
  Vector sample(Rng& rng) const;

 private:
  Vector center_;
  double radius_;
  Norm norm_;
  Vector weights_;
};

struct AlphaConfig {
  Vector alpha_a;  // per requirement, in [0, 1]
  Vector alpha_e;  // per requirement, in [0, 1]
  double rho = 1e3;
  double kappa = 1000.0;
  double gamma = 100.0;

  static AlphaConfig uniform(std::size_t n_r, double alpha_a, double alpha_e, double rho = 1e3);
  void validate(std::size_t n_r) const;
};

enum class SolverStatus { Converged, MaxIter, Infeasible, Failed };
std::string to_string(SolverStatus s);

enum class Formulation {
  RiskAverseGlobal,
  RiskAverseLocal,
  RiskAgnosticGlobal,
  RiskAgnosticLocal,
  FeasibilitySeed,
  MomentRiskAverse,
  MomentRiskAgnostic,
};
std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);
inline bool is_moment(Formulation f) {
  return f == Formulation::MomentRiskAverse || f == Formulation::MomentRiskAgnostic;
}

struct SolveResult {
  Formulation formulation = Formulation::RiskAverseLocal;
  Vector theta_star;
  std::optional<Vector> xi_star;
  std::optional<double> lambda_star;
  double objective = 0.0;
  IndexSet aleatory_outliers;
  /// Set for the global-outlier programs.
  std::optional<IndexSet> epistemic_outliers_global;
  /// O_e(i) for every aleatory scenario i.
  std::vector<IndexSet> epistemic_outliers;
  SolverStatus status = SolverStatus::Failed;
  std::size_t restarts_used = 0;
  double max_violation = 0.0;
  std::size_t evaluations = 0;
  std::optional<Vector> suggested_alpha_a;
};

/// Requirement values r_k(theta, a_i, e_j) as an n_a x n_e matrix for each k.
std::vector<ScenarioMatrix> requirement_grid(const ProblemSpec& spec, std::span<const double> theta,
                                             const ScenarioMatrix& aleatory,
                                             const ScenarioMatrix& epistemic);

}  // namespace scendo

#include "scendo/types_impl.hpp"
