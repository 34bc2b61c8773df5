#include "scendo/rmc.hpp"

#include <algorithm>
#include <cmath>

#include "scendo/ecdf.hpp"
#include "scendo/parallel.hpp"

namespace scendo {

namespace {

// ceil/floor that ignore rounding noise in n * (1 - alpha)
std::size_t safe_ceil(double v) { return static_cast<std::size_t>(std::ceil(v - 1e-9)); }
std::size_t safe_floor(double v) { return static_cast<std::size_t>(std::floor(v + 1e-9)); }

struct ColumnStats {
  std::vector<double> cdf0;  // F_{R'}(0)
  std::vector<Interval> ci;  // CI of F_{R'}(0), widened to contain cdf0
};

Interval widen(Interval ci, double point) {
  return {std::min(ci.lower, point), std::max(ci.upper, point)};
}

void check_grid(const Eigen::MatrixXd& grid) {
  if (grid.rows() < 2 || grid.cols() < 2)
    throw InputError("robust Monte Carlo needs at least two testing scenarios of each kind");
}

void check_alpha(double a, const char* what) {
  if (!(a >= 0.0 && a <= 1.0)) throw InputError(std::string(what) + " must lie in [0, 1]");
}

ColumnStats column_stats(const Eigen::MatrixXd& grid, double alpha_a_prime, double sigma) {
  check_grid(grid);
  check_alpha(alpha_a_prime, "alpha_a_prime");
  const auto n = static_cast<std::size_t>(grid.rows());
  const std::size_t m = safe_ceil(static_cast<double>(n) * (1.0 - alpha_a_prime));
  if (m == 0) throw InputError("trimmed aleatory sequence is empty; lower alpha_a_prime");
  ColumnStats s;
  s.cdf0.resize(static_cast<std::size_t>(grid.cols()));
  s.ci.resize(s.cdf0.size());
  std::vector<double> col(n);
  for (Eigen::Index j = 0; j < grid.cols(); ++j) {
    std::copy(grid.col(j).data(), grid.col(j).data() + n, col.begin());
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(m - 1), col.end());
    const std::span<const double> trimmed(col.data(), m);
    const double f = empirical_cdf(trimmed, 0.0);
    const auto ok = static_cast<std::size_t>(std::count_if(trimmed.begin(), trimmed.end(), [](double v) { return v <= 0.0; }));
    s.cdf0[static_cast<std::size_t>(j)] = f;
    s.ci[static_cast<std::size_t>(j)] = widen(clopper_pearson(ok, m, sigma), f);
  }
  return s;
}

Interval range_a_from(const ColumnStats& s, double alpha_e_prime) {
  std::vector<double> p(s.cdf0.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = 1.0 - s.cdf0[j];
  return {empirical_quantile(p, 0.0), empirical_quantile(p, 1.0 - alpha_e_prime)};
}

std::vector<double> upper_failure(const ColumnStats& s) {
  std::vector<double> d(s.ci.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = 1.0 - s.ci[j].lower;
  return d;
}

Interval range_b_from(const ColumnStats& s, double alpha_e_prime) {
  double worst_upper = 0.0;
  for (const auto& ci : s.ci) worst_upper = std::max(worst_upper, ci.upper);
  return {1.0 - worst_upper, empirical_quantile(upper_failure(s), 1.0 - alpha_e_prime)};
}

SpecViolation violation_from(const ColumnStats& s, double alpha_e_prime, double sigma, double p_max) {
  if (!(p_max >= 0.0 && p_max <= 1.0)) throw InputError("p_max must lie in [0, 1]");
  std::vector<double> q = upper_failure(s);
  const std::size_t keep = safe_floor(static_cast<double>(q.size()) * (1.0 - alpha_e_prime));
  if (keep == 0) throw InputError("trimmed epistemic sequence is empty; lower alpha_e_prime");
  std::sort(q.begin(), q.end());
  q.resize(keep);
  const double f = empirical_cdf(q, p_max);
  const auto ok = static_cast<std::size_t>(std::count_if(q.begin(), q.end(), [p_max](double v) { return v <= p_max; }));
  const Interval ci = widen(clopper_pearson(ok, keep, sigma), f);
  return {1.0 - f, {1.0 - ci.upper, 1.0 - ci.lower}};
}

}  // namespace

RmcConfig RmcConfig::uniform(std::size_t n_r, double alpha_a, double alpha_e, double sigma, double p_max) {
  RmcConfig c;
  const auto n = static_cast<Eigen::Index>(n_r);
  c.alpha_a_prime = Vector::Constant(n, alpha_a);
  c.alpha_e_prime = Vector::Constant(n, alpha_e);
  c.sigma = sigma;
  c.p_max = Vector::Constant(n, p_max);
  return c;
}

void RmcConfig::validate(std::size_t n_r) const {
  const auto rows_expected = static_cast<Eigen::Index>(rows(n_r));
  if (alpha_a_prime.size() != rows_expected || alpha_e_prime.size() != rows_expected ||
      p_max.size() != rows_expected)
    throw InputError("rmc config needs " + std::to_string(rows_expected) +
                     " entries in alpha_a_prime, alpha_e_prime and p_max");
  for (Eigen::Index k = 0; k < rows_expected; ++k) {
    check_alpha(alpha_a_prime[k], "alpha_a_prime");
    check_alpha(alpha_e_prime[k], "alpha_e_prime");
    if (!(p_max[k] >= 0.0 && p_max[k] <= 1.0)) throw InputError("p_max must lie in [0, 1]");
  }
  if (!(sigma > 0.0 && sigma < 1.0)) throw InputError("sigma must lie in (0, 1)");
}

std::string to_string(RmcMetric m) {
  switch (m) {
    case RmcMetric::AUpper: return "a_hi";
    case RmcMetric::BUpper: return "b_hi";
    case RmcMetric::C: return "c";
    case RmcMetric::DUpper: return "d_hi";
  }
  return "unknown";
}

RmcMetric rmc_metric_from_string(const std::string& s) {
  for (auto m : {RmcMetric::AUpper, RmcMetric::BUpper, RmcMetric::C, RmcMetric::DUpper})
    if (to_string(m) == s) return m;
  throw InputError("unknown robustness metric '" + s + "' (expected a_hi, b_hi, c or d_hi)");
}

double metric_value(const RmcRequirementReport& r, RmcMetric m) {
  switch (m) {
    case RmcMetric::AUpper: return r.range_a.upper;
    case RmcMetric::BUpper: return r.range_b.upper;
    case RmcMetric::C: return r.point_c;
    case RmcMetric::DUpper: return r.range_d.upper;
  }
  return r.range_a.upper;
}

std::vector<Eigen::MatrixXd> testing_grid(const ProblemSpec& spec, const Vector& theta,
                                          const ScenarioMatrix& aleatory, const ScenarioMatrix& epistemic,
                                          bool total_failure, std::size_t threads) {
  spec.validate();
  if (static_cast<std::size_t>(theta.size()) != spec.design_dim())
    throw InputError("design vector has the wrong dimension");
  if (static_cast<std::size_t>(aleatory.cols()) != spec.aleatory_dim ||
      static_cast<std::size_t>(epistemic.cols()) != spec.epistemic_dim)
    throw InputError("testing scenarios have the wrong dimension");
  const std::size_t n_out = total_failure ? 1 : spec.requirement_count();
  std::vector<Eigen::MatrixXd> grids(n_out, Eigen::MatrixXd(aleatory.rows(), epistemic.rows()));
  parallel_for(static_cast<std::size_t>(epistemic.rows()), [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const auto e = row_span(epistemic, j);
    for (Eigen::Index i = 0; i < aleatory.rows(); ++i) {
      const auto a = row_span(aleatory, i);
      if (total_failure) {
        grids[0](i, j) = r_max(spec, as_span(theta), a, e);
      } else {
        for (std::size_t k = 0; k < n_out; ++k) grids[k](i, j) = spec.requirements[k](as_span(theta), a, e);
      }
    }
  }, threads);
  return grids;
}

Interval failure_prob_range(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime) {
  check_alpha(alpha_e_prime, "alpha_e_prime");
  return range_a_from(column_stats(grid, alpha_a_prime, 0.95), alpha_e_prime);
}

Interval ci_range(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime, double sigma) {
  check_alpha(alpha_e_prime, "alpha_e_prime");
  return range_b_from(column_stats(grid, alpha_a_prime, sigma), alpha_e_prime);
}

SpecViolation spec_violation(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime,
                             double sigma, double p_max) {
  check_alpha(alpha_e_prime, "alpha_e_prime");
  return violation_from(column_stats(grid, alpha_a_prime, sigma), alpha_e_prime, sigma, p_max);
}

RmcRequirementReport analyze_grid(const Eigen::MatrixXd& grid, double alpha_a_prime, double alpha_e_prime,
                                  double sigma, double p_max) {
  check_alpha(alpha_e_prime, "alpha_e_prime");
  const ColumnStats s = column_stats(grid, alpha_a_prime, sigma);
  RmcRequirementReport r;
  r.range_a = range_a_from(s, alpha_e_prime);
  r.range_b = range_b_from(s, alpha_e_prime);
  const SpecViolation v = violation_from(s, alpha_e_prime, sigma, p_max);
  r.point_c = v.point_c;
  r.range_d = v.range_d;
  r.failure_probs.resize(s.cdf0.size());
  for (std::size_t j = 0; j < s.cdf0.size(); ++j) r.failure_probs[j] = 1.0 - s.cdf0[j];
  r.upper_failure_probs = upper_failure(s);
  return r;
}

RmcReport rmc_analyze(const ProblemSpec& spec, const Vector& theta, const ScenarioMatrix& aleatory,
                      const ScenarioMatrix& epistemic, const RmcConfig& cfg, std::size_t threads) {
  cfg.validate(spec.requirement_count());
  if (aleatory.rows() < 2 || epistemic.rows() < 2)
    throw InputError("robust Monte Carlo needs at least two testing scenarios of each kind");
  const auto grids = testing_grid(spec, theta, aleatory, epistemic, cfg.total_failure, threads);
  RmcReport rep;
  rep.n_a_test = static_cast<std::size_t>(aleatory.rows());
  rep.n_e_test = static_cast<std::size_t>(epistemic.rows());
  rep.requirements.resize(grids.size());
  parallel_for(grids.size(), [&](std::size_t k) {
    const auto ki = static_cast<Eigen::Index>(k);
    rep.requirements[k] = analyze_grid(grids[k], cfg.alpha_a_prime[ki], cfg.alpha_e_prime[ki], cfg.sigma, cfg.p_max[ki]);
  }, threads);
  return rep;
}

}  // namespace scendo
