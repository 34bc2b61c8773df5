#include "scendo/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scendo {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw InputError("box bounds have different dimensions");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw InputError("box bounds must be finite");
    if (lower[i] > upper[i]) throw InputError("box lower bound exceeds upper bound");
  }
}

bool Box::contains(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

Vector Box::project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

void ProblemSpec::validate() const {
  if (!objective) throw InputError("problem '" + name + "' has no objective");
  if (requirements.empty()) throw InputError("problem '" + name + "' needs at least one requirement");
  for (const auto& r : requirements)
    if (!r) throw InputError("problem '" + name + "' has an empty requirement callable");
  if (design_dim() == 0) throw InputError("problem '" + name + "' has no design variables");
  if (aleatory_dim == 0 || epistemic_dim == 0)
    throw InputError("problem '" + name + "' needs positive aleatory and epistemic dimensions");
}

double r_max(const ProblemSpec& spec, std::span<const double> theta, std::span<const double> a,
             std::span<const double> e) {
  if (theta.size() != spec.design_dim() || a.size() != spec.aleatory_dim ||
      e.size() != spec.epistemic_dim)
    throw InputError("r_max: vector dimensions do not match the problem");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : spec.requirements) worst = std::max(worst, r(theta, a, e));
  return worst;
}

void ScenarioData::validate(const ProblemSpec& spec) const {
  if (aleatory.rows() < 1 || epistemic.rows() < 1)
    throw InputError("training sets must contain at least one scenario each");
  if (static_cast<std::size_t>(aleatory.cols()) != spec.aleatory_dim)
    throw InputError("aleatory scenarios have " + std::to_string(aleatory.cols()) +
                     " columns, problem expects " + std::to_string(spec.aleatory_dim));
  if (static_cast<std::size_t>(epistemic.cols()) != spec.epistemic_dim)
    throw InputError("epistemic scenarios have " + std::to_string(epistemic.cols()) +
                     " columns, problem expects " + std::to_string(spec.epistemic_dim));
  if (testing_aleatory && static_cast<std::size_t>(testing_aleatory->cols()) != spec.aleatory_dim)
    throw InputError("testing aleatory set has the wrong column count");
  if (testing_epistemic && static_cast<std::size_t>(testing_epistemic->cols()) != spec.epistemic_dim)
    throw InputError("testing epistemic set has the wrong column count");
  if (!aleatory.allFinite() || !epistemic.allFinite())
    throw InputError("training scenarios contain non-finite entries");
}

ScenarioData ScenarioData::without_aleatory(std::size_t i) const {
  if (i >= n_a()) throw InputError("without_aleatory: index out of range");
  ScenarioData out = *this;
  const auto n = static_cast<Eigen::Index>(n_a());
  out.aleatory.resize(n - 1, aleatory.cols());
  const auto idx = static_cast<Eigen::Index>(i);
  if (idx > 0) out.aleatory.topRows(idx) = aleatory.topRows(idx);
  if (idx < n - 1) out.aleatory.bottomRows(n - 1 - idx) = aleatory.bottomRows(n - 1 - idx);
  return out;
}

ScenarioData ScenarioData::with_training(IndexSet aleatory_rows,
                                         const ScenarioMatrix& epistemic_rows) const {
  if (!testing_aleatory) throw InputError("with_training: no testing aleatory set");
  ScenarioData out = *this;
  out.aleatory.resize(static_cast<Eigen::Index>(aleatory_rows.size()), testing_aleatory->cols());
  for (std::size_t r = 0; r < aleatory_rows.size(); ++r)
    out.aleatory.row(static_cast<Eigen::Index>(r)) =
        testing_aleatory->row(static_cast<Eigen::Index>(aleatory_rows[r]));
  out.epistemic = epistemic_rows;
  return out;
}

EpistemicSet::EpistemicSet(Vector center, double radius, Norm norm, Vector weights)
    : center_(std::move(center)), radius_(radius), norm_(norm), weights_(std::move(weights)) {
  if (!(radius_ >= 0.0)) throw InputError("epistemic set radius must be nonnegative");
  if (weights_.size() != center_.size())
    throw InputError("epistemic set weights and center differ in dimension");
  for (Eigen::Index i = 0; i < weights_.size(); ++i)
    if (!(weights_[i] > 0.0)) throw InputError("epistemic set norm weights must be positive");
}

EpistemicSet EpistemicSet::from_box(const Vector& lower, const Vector& upper) {
  Box box(lower, upper);
  Vector w(lower.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double width = upper[i] - lower[i];
    w[i] = width > 0.0 ? 2.0 / width : std::numeric_limits<double>::infinity();
  }
  return {box.center(), 1.0, Norm::WeightedMax, std::move(w)};
}

EpistemicSet EpistemicSet::ellipsoid(Vector center, Vector semi_axes) {
  Vector w(semi_axes.size());
  for (Eigen::Index i = 0; i < w.size(); ++i)
    w[i] = semi_axes[i] > 0.0 ? 1.0 / semi_axes[i] : std::numeric_limits<double>::infinity();
  return {std::move(center), 1.0, Norm::Weighted2, std::move(w)};
}

EpistemicSet EpistemicSet::singleton(Vector point) {
  Vector w = Vector::Ones(point.size());
  return {std::move(point), 0.0, Norm::WeightedMax, std::move(w)};
}

namespace {
double weighted_term(double diff, double w) {
  if (std::isinf(w)) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(diff) * w;
}
}  // namespace

double EpistemicSet::distance(std::span<const double> e) const {
  if (e.size() != dim()) throw InputError("epistemic point has the wrong dimension");
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double t = weighted_term(e[i] - center_[static_cast<Eigen::Index>(i)],
                                   weights_[static_cast<Eigen::Index>(i)]);
    if (norm_ == Norm::WeightedMax)
      acc = std::max(acc, t);
    else
      acc += t * t;
  }
  return norm_ == Norm::WeightedMax ? acc : std::sqrt(acc);
}

bool EpistemicSet::contains(std::span<const double> e) const {
  // Relative slack of a few ulps so that box corners round-trip through the encoding.
  constexpr double kRel = 1e-12;
  if (norm_ == Norm::WeightedMax) {
    if (e.size() != dim()) throw InputError("epistemic point has the wrong dimension");
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double diff = std::abs(e[i] - center_[ii]);
      if (std::isinf(weights_[ii])) {
        if (diff > kRel * std::max(1.0, std::abs(center_[ii]))) return false;
        continue;
      }
      const double half = radius_ / weights_[ii];
      if (diff > half + kRel * std::max({1.0, half, std::abs(center_[ii])})) return false;
    }
    return true;
  }
  return distance(e) <= radius_ * (1.0 + kRel) + kRel;
}

Box EpistemicSet::bounding_box() const {
  Vector half(center_.size());
  for (Eigen::Index i = 0; i < half.size(); ++i)
    half[i] = std::isinf(weights_[i]) ? 0.0 : radius_ / weights_[i];
  return {center_ - half, center_ + half};
}

EpistemicSet EpistemicSet::with_radius(double radius) const {
  return {center_, radius, norm_, weights_};
}

AlphaConfig AlphaConfig::uniform(std::size_t n_r, double alpha_a, double alpha_e, double rho) {
  AlphaConfig cfg;
  cfg.alpha_a = Vector::Constant(static_cast<Eigen::Index>(n_r), alpha_a);
  cfg.alpha_e = Vector::Constant(static_cast<Eigen::Index>(n_r), alpha_e);
  cfg.rho = rho;
  return cfg;
}

void AlphaConfig::validate(std::size_t n_r) const {
  if (static_cast<std::size_t>(alpha_a.size()) != n_r || static_cast<std::size_t>(alpha_e.size()) != n_r)
    throw InputError("alpha_a and alpha_e need one entry per requirement");
  for (Eigen::Index k = 0; k < alpha_a.size(); ++k) {
    if (!(alpha_a[k] >= 0.0 && alpha_a[k] <= 1.0) || !(alpha_e[k] >= 0.0 && alpha_e[k] <= 1.0))
      throw InputError("alpha fractions must lie in [0, 1]");
  }
  if (!(rho >= 0.0)) throw InputError("rho must be nonnegative");
  if (!(kappa >= 1.0)) throw InputError("kappa must be >= 1");
  if (!(gamma >= 1.0)) throw InputError("gamma must be >= 1");
}

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::MaxIter: return "max-iter";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::Failed: return "failed";
  }
  return "unknown";
}

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::RiskAverseGlobal: return "risk-averse-global";
    case Formulation::RiskAverseLocal: return "risk-averse-local";
    case Formulation::RiskAgnosticGlobal: return "risk-agnostic-global";
    case Formulation::RiskAgnosticLocal: return "risk-agnostic-local";
    case Formulation::FeasibilitySeed: return "feasibility-seed";
    case Formulation::MomentRiskAverse: return "moment-risk-averse";
    case Formulation::MomentRiskAgnostic: return "moment-risk-agnostic";
  }
  return "unknown";
}

Formulation formulation_from_string(const std::string& s) {
  for (auto f : {Formulation::RiskAverseGlobal, Formulation::RiskAverseLocal,
                 Formulation::RiskAgnosticGlobal, Formulation::RiskAgnosticLocal,
                 Formulation::FeasibilitySeed, Formulation::MomentRiskAverse,
                 Formulation::MomentRiskAgnostic})
    if (to_string(f) == s) return f;
  throw InputError("unknown formulation '" + s + "'");
}

std::vector<ScenarioMatrix> requirement_grid(const ProblemSpec& spec, std::span<const double> theta,
                                             const ScenarioMatrix& aleatory,
                                             const ScenarioMatrix& epistemic) {
  std::vector<ScenarioMatrix> grids;
  grids.reserve(spec.requirement_count());
  for (const auto& r : spec.requirements) {
    ScenarioMatrix g(aleatory.rows(), epistemic.rows());
    for (Eigen::Index i = 0; i < aleatory.rows(); ++i) {
      const auto a = row_span(aleatory, i);
      for (Eigen::Index j = 0; j < epistemic.rows(); ++j) g(i, j) = r(theta, a, row_span(epistemic, j));
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

}  // namespace scendo
