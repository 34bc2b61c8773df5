#include "scendo/programs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "scendo/ecdf.hpp"
#include "scendo/weights.hpp"

namespace scendo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Requirement grids and per-scenario quantiles for the most recent design vector. FD gradients
// perturb slack coordinates far more often than design coordinates, so most evaluations hit.
class DesignCache {
 public:
  DesignCache(const ProblemSpec& spec, const ScenarioData& data, const AlphaConfig& cfg,
              const MomentSpec* moment)
      : spec_(spec), data_(data), cfg_(cfg), moment_(moment) {}

  void refresh(std::span<const double> theta) {
    if (valid_ && std::equal(theta.begin(), theta.end(), key_.begin(), key_.end())) return;
    key_.assign(theta.begin(), theta.end());
    grids_ = requirement_grid(spec_, theta, data_.aleatory, data_.epistemic);
    local_q_.clear();
    response_q_.reset();
    valid_ = true;
  }

  const std::vector<ScenarioMatrix>& grids() const { return grids_; }

  /// q_ki = quantile_j(r_k(theta, a_i, e_j), 1 - alpha_e,k), one vector per k.
  const std::vector<std::vector<double>>& local_quantiles() {
    if (local_q_.empty()) {
      local_q_.resize(grids_.size());
      for (std::size_t k = 0; k < grids_.size(); ++k) {
        const double level = 1.0 - cfg_.alpha_e[static_cast<Eigen::Index>(k)];
        auto& q = local_q_[k];
        q.resize(static_cast<std::size_t>(grids_[k].rows()));
        for (Eigen::Index i = 0; i < grids_[k].rows(); ++i)
          q[static_cast<std::size_t>(i)] = empirical_quantile(row_span(grids_[k], i), level);
      }
    }
    return local_q_;
  }

  /// H_i = quantile_j(h(theta, a_i, e_j), 1 - alpha_e of the moment).
  const std::vector<double>& response_quantiles() {
    if (!response_q_) {
      std::vector<double> h(static_cast<std::size_t>(data_.n_a()));
      std::vector<double> row(data_.n_e());
      const std::span<const double> theta(key_);
      for (Eigen::Index i = 0; i < data_.aleatory.rows(); ++i) {
        for (Eigen::Index j = 0; j < data_.epistemic.rows(); ++j)
          row[static_cast<std::size_t>(j)] =
              moment_->response(theta, row_span(data_.aleatory, i), row_span(data_.epistemic, j));
        h[static_cast<std::size_t>(i)] = empirical_quantile(row, 1.0 - moment_->alpha_e);
      }
      response_q_ = std::move(h);
    }
    return *response_q_;
  }

 private:
  const ProblemSpec& spec_;
  const ScenarioData& data_;
  const AlphaConfig& cfg_;
  const MomentSpec* moment_;
  std::vector<double> key_;
  bool valid_ = false;
  std::vector<ScenarioMatrix> grids_;
  std::vector<std::vector<double>> local_q_;
  std::optional<std::vector<double>> response_q_;
};

void check_inputs(const ProblemSpec& spec, const ScenarioData& data, const AlphaConfig& cfg) {
  spec.validate();
  data.validate(spec);
  cfg.validate(spec.requirement_count());
}

std::vector<Vector> design_starts(const ProblemSpec& spec, const ProgramOptions& opts) {
  std::vector<Vector> starts;
  for (const auto& w : opts.warm_starts) {
    if (static_cast<std::size_t>(w.size()) != spec.design_dim())
      throw InputError("warm start has the wrong dimension");
    starts.push_back(spec.design_bounds.project(w));
  }
  for (auto& p : latin_hypercube(spec.design_bounds, opts.n_starts, opts.nlp.seed))
    starts.push_back(std::move(p));
  return starts;
}

Box extend_box(const Box& base, const Vector& lo, const Vector& hi) {
  Vector l(base.lower.size() + lo.size()), h(base.upper.size() + hi.size());
  l << base.lower, lo;
  h << base.upper, hi;
  return {l, h};
}

double design_objective(const ProblemSpec& spec, const Vector& x) {
  return spec.objective(std::span<const double>(x.data(), spec.design_dim()));
}

std::vector<double> weighted_worst(const ScenarioMatrix& grid, const std::vector<double>& w) {
  std::vector<double> z(static_cast<std::size_t>(grid.rows()), kNegInf);
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    for (Eigen::Index j = 0; j < grid.cols(); ++j)
      z[static_cast<std::size_t>(i)] =
          std::max(z[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(j)] * grid(i, j));
  return z;
}

// Slack start: the smallest xi_i making every constraint of scenario i hold at theta.
Vector slack_start(const std::vector<double>& per_scenario_max, double xi_upper) {
  Vector xi(static_cast<Eigen::Index>(per_scenario_max.size()));
  for (std::size_t i = 0; i < per_scenario_max.size(); ++i)
    xi[static_cast<Eigen::Index>(i)] = std::clamp(per_scenario_max[i], 0.0, xi_upper);
  return xi;
}

std::vector<double> scenario_max_local(DesignCache& cache) {
  const auto& q = cache.local_quantiles();
  std::vector<double> m(q.front().size(), kNegInf);
  for (const auto& qk : q)
    for (std::size_t i = 0; i < qk.size(); ++i) m[i] = std::max(m[i], qk[i]);
  return m;
}

SolveResult finish(const ProblemSpec& spec, const ScenarioData& data, const AlphaConfig& cfg,
                   const ProgramOptions& opts, Formulation f, const NlpResult& nlp) {
  SolveResult r;
  r.formulation = f;
  const auto m = static_cast<Eigen::Index>(spec.design_dim());
  r.theta_star = spec.design_bounds.project(nlp.x.head(m));
  r.objective = spec.objective(as_span(r.theta_star));
  r.status = nlp.status;
  r.restarts_used = nlp.starts_run;
  r.max_violation = nlp.max_violation;
  r.evaluations = nlp.evaluations;
  const Outliers o = extract_outliers(spec, data, cfg, r.theta_star, opts.report_tol);
  r.aleatory_outliers = o.aleatory;
  r.epistemic_outliers = o.epistemic;
  return r;
}

// Global set of epistemic outliers: scenarios above the weight threshold for some k.
IndexSet global_epistemic_outliers(const ProblemSpec& spec, const ScenarioData& data,
                                   const AlphaConfig& cfg, const Vector& theta,
                                   const Vector& alpha_a, double tol) {
  const auto grids = requirement_grid(spec, as_span(theta), data.aleatory, data.epistemic);
  std::vector<bool> mark(data.n_e(), false);
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const WeightSequence w = compute_weights(grids[k], alpha_a[ki], cfg.alpha_e[ki], cfg.gamma);
    for (std::size_t j = 0; j < w.worst_case.size(); ++j)
      if (w.worst_case[j] > w.threshold + tol) mark[j] = true;
  }
  IndexSet out;
  for (std::size_t j = 0; j < mark.size(); ++j)
    if (mark[j]) out.push_back(j);
  return out;
}

void check_alpha_e_below_one(const AlphaConfig& cfg) {
  for (Eigen::Index k = 0; k < cfg.alpha_e.size(); ++k)
    if (!(cfg.alpha_e[k] < 1.0)) throw InputError("alpha_e must be below 1 for weight-based programs");
}

void attach_suggestion(const ProblemSpec& spec, const ScenarioData& data, const AlphaConfig& cfg,
                       const ProgramOptions& opts, OutlierScope scope, SolveResult& r) {
  if (r.status != SolverStatus::Infeasible || !opts.suggest_on_infeasible) return;
  ProgramOptions inner = opts;
  inner.suggest_on_infeasible = false;
  inner.warm_starts.insert(inner.warm_starts.begin(), r.theta_star);
  const Vector omega = Vector::Ones(static_cast<Eigen::Index>(spec.requirement_count()));
  r.suggested_alpha_a = solve_feasibility_seed(spec, data, cfg, omega, scope, inner).alpha_a;
}

}  // namespace

PseudoDistribution pseudo_distribution(const ProblemSpec& spec, const Vector& theta, std::size_t k,
                                       std::size_t i, const ScenarioData& data) {
  if (k >= spec.requirement_count() || i >= data.n_a())
    throw InputError("pseudo_distribution: index out of range");
  PseudoDistribution pd;
  pd.aleatory_index = i;
  pd.requirement_index = k;
  pd.values.resize(data.n_e());
  for (Eigen::Index j = 0; j < data.epistemic.rows(); ++j)
    pd.values[static_cast<std::size_t>(j)] = spec.requirements[k](
        as_span(theta), row_span(data.aleatory, static_cast<Eigen::Index>(i)), row_span(data.epistemic, j));
  return pd;
}

SolveResult solve_risk_averse_global(const ProblemSpec& spec, const ScenarioData& data,
                                     const AlphaConfig& cfg, const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  check_alpha_e_below_one(cfg);
  const std::size_t m = spec.design_dim(), n_a = data.n_a(), n_e = data.n_e(),
                    n_r = spec.requirement_count();
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, nullptr);

  auto weights_at = [&spec, &cfg](DesignCache& c, double frac) {
    std::vector<std::vector<double>> ws;
    for (std::size_t k = 0; k < spec.requirement_count(); ++k)
      ws.push_back(compute_weights(c.grids()[k], frac, cfg.alpha_e[static_cast<Eigen::Index>(k)],
                                   cfg.gamma)
                       .weights);
    return ws;
  };

  NlpProblem p;
  p.dim = m + n_a;
  p.bounds = extend_box(spec.design_bounds, Vector::Zero(static_cast<Eigen::Index>(n_a)),
                        Vector::Constant(static_cast<Eigen::Index>(n_a), opts.xi_upper));
  p.evaluate = [&, cache, weights_at](const Vector& x) {
    cache->refresh(std::span<const double>(x.data(), m));
    const auto xi = x.tail(static_cast<Eigen::Index>(n_a));
    double frac = 0.0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) frac += xi[i] / (xi[i] + opts.sgn_eps);
    frac = std::clamp(frac / static_cast<double>(n_a), 0.0, 1.0);
    const auto ws = weights_at(*cache, frac);
    NlpEvaluation ev;
    ev.objective = design_objective(spec, x) + cfg.rho * xi.sum();
    ev.constraints.resize(static_cast<Eigen::Index>(n_r * n_a * n_e));
    Eigen::Index c = 0;
    for (std::size_t k = 0; k < n_r; ++k) {
      const auto& g = cache->grids()[k];
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
          ev.constraints[c++] = ws[k][static_cast<std::size_t>(j)] * g(i, j) - xi[i];
    }
    return ev;
  };
  for (const auto& theta : design_starts(spec, opts)) {
    cache->refresh(as_span(theta));
    std::vector<double> worst(n_a, kNegInf);
    for (const auto& g : cache->grids())
      for (Eigen::Index i = 0; i < g.rows(); ++i)
        worst[static_cast<std::size_t>(i)] = std::max(worst[static_cast<std::size_t>(i)], g.row(i).maxCoeff());
    Vector x(p.dim);
    x << theta, slack_start(worst, opts.xi_upper);
    p.starts.push_back(std::move(x));
  }
  const NlpResult nlp = minimize(p, opts.nlp);
  SolveResult r = finish(spec, data, cfg, opts, Formulation::RiskAverseGlobal, nlp);
  const Vector xi = nlp.x.tail(static_cast<Eigen::Index>(n_a));
  r.xi_star = xi;
  double frac = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) frac += xi[i] > opts.report_tol ? 1.0 : 0.0;
  frac /= static_cast<double>(n_a);
  r.epistemic_outliers_global = global_epistemic_outliers(
      spec, data, cfg, r.theta_star, Vector::Constant(static_cast<Eigen::Index>(n_r), frac),
      opts.report_tol);
  return r;
}

SolveResult solve_risk_averse_local(const ProblemSpec& spec, const ScenarioData& data,
                                    const AlphaConfig& cfg, const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  const std::size_t m = spec.design_dim(), n_a = data.n_a(), n_r = spec.requirement_count();
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, nullptr);

  NlpProblem p;
  p.dim = m + n_a;
  p.bounds = extend_box(spec.design_bounds, Vector::Zero(static_cast<Eigen::Index>(n_a)),
                        Vector::Constant(static_cast<Eigen::Index>(n_a), opts.xi_upper));
  p.evaluate = [&, cache](const Vector& x) {
    cache->refresh(std::span<const double>(x.data(), m));
    const auto xi = x.tail(static_cast<Eigen::Index>(n_a));
    const auto& q = cache->local_quantiles();
    NlpEvaluation ev;
    ev.objective = design_objective(spec, x) + cfg.rho * xi.sum();
    ev.constraints.resize(static_cast<Eigen::Index>(n_r * n_a));
    Eigen::Index c = 0;
    for (std::size_t k = 0; k < n_r; ++k)
      for (std::size_t i = 0; i < n_a; ++i) ev.constraints[c++] = q[k][i] - xi[static_cast<Eigen::Index>(i)];
    return ev;
  };
  for (const auto& theta : design_starts(spec, opts)) {
    cache->refresh(as_span(theta));
    Vector x(p.dim);
    x << theta, slack_start(scenario_max_local(*cache), opts.xi_upper);
    p.starts.push_back(std::move(x));
  }
  const NlpResult nlp = minimize(p, opts.nlp);
  SolveResult r = finish(spec, data, cfg, opts, Formulation::RiskAverseLocal, nlp);
  r.xi_star = nlp.x.tail(static_cast<Eigen::Index>(n_a));
  return r;
}

SolveResult solve_risk_agnostic_global(const ProblemSpec& spec, const ScenarioData& data,
                                       const AlphaConfig& cfg, const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  check_alpha_e_below_one(cfg);
  const std::size_t m = spec.design_dim(), n_r = spec.requirement_count();
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, nullptr);

  NlpProblem p;
  p.dim = m;
  p.bounds = spec.design_bounds;
  p.starts = design_starts(spec, opts);
  p.evaluate = [&, cache](const Vector& x) {
    cache->refresh(as_span(x));
    NlpEvaluation ev;
    ev.objective = spec.objective(as_span(x));
    ev.constraints.resize(static_cast<Eigen::Index>(n_r));
    for (std::size_t k = 0; k < n_r; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      const auto w = compute_weights(cache->grids()[k], cfg.alpha_a[ki], cfg.alpha_e[ki], cfg.gamma);
      ev.constraints[ki] = empirical_quantile(weighted_worst(cache->grids()[k], w.weights), 1.0 - cfg.alpha_a[ki]);
    }
    return ev;
  };
  const NlpResult nlp = minimize(p, opts.nlp);
  SolveResult r = finish(spec, data, cfg, opts, Formulation::RiskAgnosticGlobal, nlp);
  r.epistemic_outliers_global =
      global_epistemic_outliers(spec, data, cfg, r.theta_star, cfg.alpha_a, opts.report_tol);
  attach_suggestion(spec, data, cfg, opts, OutlierScope::Global, r);
  return r;
}

SolveResult solve_risk_agnostic_local(const ProblemSpec& spec, const ScenarioData& data,
                                      const AlphaConfig& cfg, const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  const std::size_t m = spec.design_dim(), n_r = spec.requirement_count();
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, nullptr);

  NlpProblem p;
  p.dim = m;
  p.bounds = spec.design_bounds;
  p.starts = design_starts(spec, opts);
  p.evaluate = [&, cache](const Vector& x) {
    cache->refresh(as_span(x));
    const auto& q = cache->local_quantiles();
    NlpEvaluation ev;
    ev.objective = spec.objective(as_span(x));
    ev.constraints.resize(static_cast<Eigen::Index>(n_r));
    for (std::size_t k = 0; k < n_r; ++k)
      ev.constraints[static_cast<Eigen::Index>(k)] =
          empirical_quantile(q[k], 1.0 - cfg.alpha_a[static_cast<Eigen::Index>(k)]);
    return ev;
  };
  (void)m;
  const NlpResult nlp = minimize(p, opts.nlp);
  SolveResult r = finish(spec, data, cfg, opts, Formulation::RiskAgnosticLocal, nlp);
  attach_suggestion(spec, data, cfg, opts, OutlierScope::Local, r);
  return r;
}

FeasibilitySeedResult solve_feasibility_seed(const ProblemSpec& spec, const ScenarioData& data,
                                             const AlphaConfig& cfg, const Vector& omega,
                                             OutlierScope variant, const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  const std::size_t m = spec.design_dim(), n_r = spec.requirement_count();
  if (static_cast<std::size_t>(omega.size()) != n_r) throw InputError("omega needs one weight per requirement");
  for (Eigen::Index k = 0; k < omega.size(); ++k)
    if (!(omega[k] > 0.0)) throw InputError("omega entries must be positive");
  if (variant == OutlierScope::Global) check_alpha_e_below_one(cfg);
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, nullptr);

  auto scenario_values = [&spec, &cfg, variant](DesignCache& c, std::size_t k, double alpha_a) {
    if (variant == OutlierScope::Local) return c.local_quantiles()[k];
    const auto ki = static_cast<Eigen::Index>(k);
    const auto w = compute_weights(c.grids()[k], alpha_a, cfg.alpha_e[ki], cfg.gamma);
    (void)spec;
    return weighted_worst(c.grids()[k], w.weights);
  };

  NlpProblem p;
  p.dim = m + n_r;
  p.bounds = extend_box(spec.design_bounds, Vector::Zero(static_cast<Eigen::Index>(n_r)),
                        Vector::Ones(static_cast<Eigen::Index>(n_r)));
  p.evaluate = [&, cache, scenario_values](const Vector& x) {
    cache->refresh(std::span<const double>(x.data(), m));
    const auto alpha = x.tail(static_cast<Eigen::Index>(n_r));
    NlpEvaluation ev;
    ev.objective = omega.dot(alpha);
    ev.constraints.resize(static_cast<Eigen::Index>(n_r));
    for (std::size_t k = 0; k < n_r; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      const double a = std::clamp(alpha[ki], 0.0, 1.0);
      ev.constraints[ki] = empirical_quantile(scenario_values(*cache, k, a), 1.0 - a);
    }
    return ev;
  };
  for (const auto& theta : design_starts(spec, opts)) {
    Vector x(p.dim);
    x << theta, Vector::Constant(static_cast<Eigen::Index>(n_r), 0.5);
    p.starts.push_back(std::move(x));
  }
  const NlpResult nlp = minimize(p, opts.nlp);
  FeasibilitySeedResult out;
  AlphaConfig solved = cfg;
  solved.alpha_a = nlp.x.tail(static_cast<Eigen::Index>(n_r)).cwiseMax(0.0).cwiseMin(1.0);
  out.result = finish(spec, data, solved, opts, Formulation::FeasibilitySeed, nlp);
  out.theta = out.result.theta_star;
  out.alpha_a = solved.alpha_a;
  return out;
}

SolveResult solve_moment_risk_averse(const ProblemSpec& spec, const ScenarioData& data,
                                     const AlphaConfig& cfg, const MomentSpec& moment,
                                     const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  if (!moment.response) throw InputError("moment program needs a response function");
  if (!(moment.alpha_e >= 0.0 && moment.alpha_e <= 1.0)) throw InputError("moment alpha_e outside [0,1]");
  const std::size_t m = spec.design_dim(), n_a = data.n_a(), n_r = spec.requirement_count();
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, &moment);

  auto weighted_mean = [&cfg](const std::vector<double>& h, const auto& xi) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double w = std::exp(-cfg.kappa * xi[static_cast<Eigen::Index>(i)]);
      num += w * h[i];
      den += w;
    }
    return den > 0.0 ? num / den : 0.0;
  };

  NlpProblem p;
  p.dim = m + 1 + n_a;
  {
    Vector lo(1 + n_a), hi(1 + n_a);
    lo << opts.lambda_lower, Vector::Zero(static_cast<Eigen::Index>(n_a));
    hi << opts.lambda_upper, Vector::Constant(static_cast<Eigen::Index>(n_a), opts.xi_upper);
    p.bounds = extend_box(spec.design_bounds, lo, hi);
  }
  p.evaluate = [&, cache, weighted_mean](const Vector& x) {
    cache->refresh(std::span<const double>(x.data(), m));
    const double lambda = x[static_cast<Eigen::Index>(m)];
    const auto xi = x.tail(static_cast<Eigen::Index>(n_a));
    const auto& q = cache->local_quantiles();
    NlpEvaluation ev;
    ev.objective = lambda + cfg.rho * xi.sum();
    ev.constraints.resize(static_cast<Eigen::Index>(n_r * n_a + 1));
    Eigen::Index c = 0;
    for (std::size_t k = 0; k < n_r; ++k)
      for (std::size_t i = 0; i < n_a; ++i) ev.constraints[c++] = q[k][i] - xi[static_cast<Eigen::Index>(i)];
    ev.constraints[c] = weighted_mean(cache->response_quantiles(), xi) - lambda;
    return ev;
  };
  for (const auto& theta : design_starts(spec, opts)) {
    cache->refresh(as_span(theta));
    const Vector xi = slack_start(scenario_max_local(*cache), opts.xi_upper);
    const double lambda =
        std::clamp(weighted_mean(cache->response_quantiles(), xi), opts.lambda_lower, opts.lambda_upper);
    Vector x(p.dim);
    x << theta, lambda, xi;
    p.starts.push_back(std::move(x));
  }
  const NlpResult nlp = minimize(p, opts.nlp);
  SolveResult r = finish(spec, data, cfg, opts, Formulation::MomentRiskAverse, nlp);
  r.lambda_star = nlp.x[static_cast<Eigen::Index>(m)];
  r.xi_star = nlp.x.tail(static_cast<Eigen::Index>(n_a));
  r.objective = *r.lambda_star;
  return r;
}

SolveResult solve_moment_risk_agnostic(const ProblemSpec& spec, const ScenarioData& data,
                                       const AlphaConfig& cfg, const MomentSpec& moment,
                                       double alpha_a, const ProgramOptions& opts) {
  check_inputs(spec, data, cfg);
  if (!moment.response) throw InputError("moment program needs a response function");
  if (!(alpha_a >= 0.0 && alpha_a <= 1.0)) throw InputError("alpha_a outside [0,1]");
  const std::size_t m = spec.design_dim(), n_a = data.n_a();
  auto cache = std::make_shared<DesignCache>(spec, data, cfg, &moment);

  // G_i = max(mean of the rank(i) lowest H minus lambda, max_k q_ki).
  auto stacked = [n_a](DesignCache& c, double lambda) {
    const auto& h = c.response_quantiles();
    const auto& q = c.local_quantiles();
    std::vector<std::size_t> order(n_a);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&h](std::size_t a, std::size_t b) { return h[a] < h[b]; });
    std::vector<double> g(n_a);
    double prefix = 0.0;
    for (std::size_t u = 0; u < n_a; ++u) {
      const std::size_t i = order[u];
      prefix += h[i];
      double v = prefix / static_cast<double>(u + 1) - lambda;
      for (const auto& qk : q) v = std::max(v, qk[i]);
      g[i] = v;
    }
    return g;
  };

  NlpProblem p;
  p.dim = m + 1;
  {
    Vector lo(1), hi(1);
    lo << opts.lambda_lower;
    hi << opts.lambda_upper;
    p.bounds = extend_box(spec.design_bounds, lo, hi);
  }
  p.evaluate = [&, cache, stacked](const Vector& x) {
    cache->refresh(std::span<const double>(x.data(), m));
    const double lambda = x[static_cast<Eigen::Index>(m)];
    NlpEvaluation ev;
    ev.objective = lambda;
    ev.constraints.resize(1);
    ev.constraints[0] = empirical_quantile(stacked(*cache, lambda), 1.0 - alpha_a);
    return ev;
  };
  for (const auto& theta : design_starts(spec, opts)) {
    cache->refresh(as_span(theta));
    const auto& h = cache->response_quantiles();
    const double mean = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
    Vector x(p.dim);
    x << theta, std::clamp(mean, opts.lambda_lower, opts.lambda_upper);
    p.starts.push_back(std::move(x));
  }
  const NlpResult nlp = minimize(p, opts.nlp);
  SolveResult r = finish(spec, data, cfg, opts, Formulation::MomentRiskAgnostic, nlp);
  r.lambda_star = nlp.x[static_cast<Eigen::Index>(m)];
  r.objective = *r.lambda_star;
  return r;
}

Outliers extract_outliers(const ProblemSpec& spec, const ScenarioData& data, const AlphaConfig& cfg,
                          const Vector& theta, double tol) {
  const auto grids = requirement_grid(spec, as_span(theta), data.aleatory, data.epistemic);
  Outliers out;
  out.epistemic.resize(data.n_a());
  for (Eigen::Index i = 0; i < data.aleatory.rows(); ++i) {
    double worst = kNegInf;
    std::vector<bool> mark(data.n_e(), false);
    for (std::size_t k = 0; k < grids.size(); ++k) {
      const auto row = row_span(grids[k], i);
      const double q = empirical_quantile(row, 1.0 - cfg.alpha_e[static_cast<Eigen::Index>(k)]);
      worst = std::max(worst, q);
      const double slack = 1e-12 * std::max(1.0, std::abs(q));
      for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j] > q + slack) mark[j] = true;
    }
    if (worst > tol) out.aleatory.push_back(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < mark.size(); ++j)
      if (mark[j]) out.epistemic[static_cast<std::size_t>(i)].push_back(j);
  }
  return out;
}

Vector suggest_alpha_by_penalty(const ProblemSpec& spec, const ScenarioData& data,
                                const AlphaConfig& cfg, const ProgramOptions& opts) {
  AlphaConfig strict = cfg;
  strict.rho = 1e6;
  const SolveResult r = solve_risk_averse_local(spec, data, strict, opts);
  const auto grids = requirement_grid(spec, as_span(r.theta_star), data.aleatory, data.epistemic);
  Vector alpha(static_cast<Eigen::Index>(grids.size()));
  for (std::size_t k = 0; k < grids.size(); ++k) {
    std::size_t violating = 0;
    for (Eigen::Index i = 0; i < grids[k].rows(); ++i)
      if (empirical_quantile(row_span(grids[k], i), 1.0 - cfg.alpha_e[static_cast<Eigen::Index>(k)]) >
          opts.report_tol)
        ++violating;
    alpha[static_cast<Eigen::Index>(k)] = static_cast<double>(violating) / static_cast<double>(data.n_a());
  }
  return alpha;
}

void ProgramRequest::validate(const ProblemSpec& spec) const {
  alphas.validate(spec.requirement_count());
  if (is_moment(formulation) != moment.has_value())
    throw InputError("a moment specification is required exactly for the moment formulations");
  if (omega.size() != 0 && static_cast<std::size_t>(omega.size()) != spec.requirement_count())
    throw InputError("omega needs one weight per requirement");
}

SolveResult solve(const ProblemSpec& spec, const ScenarioData& data, const ProgramRequest& req) {
  req.validate(spec);
  const auto& o = req.options;
  switch (req.formulation) {
    case Formulation::RiskAverseGlobal: return solve_risk_averse_global(spec, data, req.alphas, o);
    case Formulation::RiskAverseLocal: return solve_risk_averse_local(spec, data, req.alphas, o);
    case Formulation::RiskAgnosticGlobal: return solve_risk_agnostic_global(spec, data, req.alphas, o);
    case Formulation::RiskAgnosticLocal: return solve_risk_agnostic_local(spec, data, req.alphas, o);
    case Formulation::FeasibilitySeed: {
      const Vector omega = req.omega.size() ? req.omega
                                            : Vector::Ones(static_cast<Eigen::Index>(spec.requirement_count()));
      auto seed = solve_feasibility_seed(spec, data, req.alphas, omega, req.seed_scope, o);
      seed.result.suggested_alpha_a = seed.alpha_a;
      return seed.result;
    }
    case Formulation::MomentRiskAverse: return solve_moment_risk_averse(spec, data, req.alphas, *req.moment, o);
    case Formulation::MomentRiskAgnostic:
      return solve_moment_risk_agnostic(spec, data, req.alphas, *req.moment,
                                        req.moment_alpha_a.value_or(req.alphas.alpha_a[0]), o);
  }
  throw InputError("unknown formulation");
}

}  // namespace scendo
