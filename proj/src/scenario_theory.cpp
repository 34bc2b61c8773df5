#include "scendo/scenario_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scendo/binomial.hpp"
#include "scendo/parallel.hpp"

namespace scendo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_choose(double i, double k) { return std::lgamma(i + 1.0) - std::lgamma(k + 1.0) - std::lgamma(i - k + 1.0); }

// log of the right-hand side sums and its derivative in s = log t
struct RhsLog {
  double value;
  double slope;
};

RhsLog rhs_log(std::size_t n, std::size_t k, double beta, double s) {
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  const double c1 = std::log(beta / (2.0 * nn)), c2 = std::log(beta / (6.0 * nn));
  // two passes: max exponent, then the shifted sums
  double peak = -kInf;
  auto term = [&](std::size_t i) {
    const double ii = static_cast<double>(i);
    return (i < n ? c1 : c2) + log_choose(ii, kk) + (ii - kk) * s;
  };
  for (std::size_t i = k; i <= 4 * n; ++i)
    if (i != n) peak = std::max(peak, term(i));
  double sum = 0.0, wsum = 0.0;
  for (std::size_t i = k; i <= 4 * n; ++i) {
    if (i == n) continue;
    const double w = std::exp(term(i) - peak);
    sum += w;
    wsum += w * static_cast<double>(i - k);
  }
  return {peak + std::log(sum), wsum / sum};
}

double ratio_slope(std::size_t n, std::size_t k, double beta, double s) {
  return static_cast<double>(n - k) - rhs_log(n, k, beta, s).slope;
}

}  // namespace

double epsilon_log_ratio(std::size_t n, std::size_t k, double beta, double s) {
  const double lhs = log_choose(static_cast<double>(n), static_cast<double>(k)) + static_cast<double>(n - k) * s;
  return lhs - rhs_log(n, k, beta, s).value;
}

double epsilon_bar(std::size_t n, std::size_t k, double beta) {
  if (n == 0) throw InputError("epsilon_bar: n_a must be positive");
  if (k > n) throw InputError("epsilon_bar: k must not exceed n_a");
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("epsilon_bar: beta must lie in (0, 1)");
  if (k == n) return 1.0;

  // The log ratio is concave in s = log t (a linear term minus a log-sum-exp), so it rises to a
  // single peak and the smaller root lies on the rising side.
  double lo = -1.0, hi = 1.0;
  while (ratio_slope(n, k, beta, lo) <= 0.0) {
    lo *= 2.0;
    if (lo < -1e6) throw NumericalError("epsilon_bar: could not bracket the peak");
  }
  while (ratio_slope(n, k, beta, hi) >= 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("epsilon_bar: could not bracket the peak");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio_slope(n, k, beta, mid) > 0.0 ? lo : hi) = mid;
  }
  const double peak = 0.5 * (lo + hi);
  if (!(epsilon_log_ratio(n, k, beta, peak) > 0.0))
    throw NumericalError("epsilon_bar: the polynomial has no root pair for these inputs");

  double left = peak - 1.0;
  while (epsilon_log_ratio(n, k, beta, left) >= 0.0) {
    left = peak - 2.0 * (peak - left);
    if (left < -1e6) throw NumericalError("epsilon_bar: could not bracket the smaller root");
  }
  double right = peak;
  for (int it = 0; it < 300 && right - left > 1e-15 * std::max(1.0, std::abs(left)); ++it) {
    const double mid = 0.5 * (left + right);
    (epsilon_log_ratio(n, k, beta, mid) < 0.0 ? left : right) = mid;
  }
  const double t = std::exp(0.5 * (left + right));
  return std::clamp(1.0 - t, 0.0, 1.0);
}

IndexSet support_scenarios(const ScenarioSolver& solver, const ScenarioData& data, const Vector& theta_star,
                           double tol, std::size_t threads) {
  if (!solver) throw InputError("support_scenarios: empty solver");
  if (!(tol > 0.0)) throw InputError("support_scenarios: tol must be positive");
  if (data.n_a() < 2) throw InputError("support_scenarios: need at least two aleatory scenarios");
  std::vector<char> is_support(data.n_a(), 0);
  parallel_for(data.n_a(), [&](std::size_t i) {
    SolveResult r;
    try {
      r = solver(data.without_aleatory(i));
    } catch (const std::exception& e) {
      throw NumericalError("leave-one-out solve without scenario " + std::to_string(i) + " failed: " + e.what());
    }
    if (r.status == SolverStatus::Failed || r.theta_star.size() != theta_star.size() || !r.theta_star.allFinite())
      throw NumericalError("leave-one-out solve without scenario " + std::to_string(i) + " failed");
    is_support[i] = (r.theta_star - theta_star).lpNorm<Eigen::Infinity>() > tol ? 1 : 0;
  }, threads);
  IndexSet out;
  for (std::size_t i = 0; i < is_support.size(); ++i)
    if (is_support[i]) out.push_back(i);
  return out;
}

std::string to_string(ContainmentVerdict v) {
  switch (v) {
    case ContainmentVerdict::Violated: return "violated";
    case ContainmentVerdict::ProbablyContained: return "probably-contained";
    case ContainmentVerdict::Contained: return "contained";
  }
  return "unknown";
}

std::string to_string(ContainmentTest t) {
  switch (t) {
    case ContainmentTest::Auto: return "auto";
    case ContainmentTest::Sampling: return "sampling";
    case ContainmentTest::Optimization: return "optimization";
  }
  return "unknown";
}

ContainmentTest containment_test_from_string(const std::string& s) {
  for (auto t : {ContainmentTest::Auto, ContainmentTest::Sampling, ContainmentTest::Optimization})
    if (to_string(t) == s) return t;
  throw InputError("unknown containment test '" + s + "' (expected auto, sampling or optimization)");
}

namespace {

void check_point(const ProblemSpec& spec, const Vector& theta, const Vector& a, const EpistemicSet& set) {
  if (static_cast<std::size_t>(theta.size()) != spec.design_dim() ||
      static_cast<std::size_t>(a.size()) != spec.aleatory_dim || set.dim() != spec.epistemic_dim)
    throw InputError("containment test: dimensions do not match the problem");
}

}  // namespace

SamplingContainment set_containment_sampling(const ProblemSpec& spec, const Vector& theta, const Vector& a,
                                             const EpistemicSet& set, std::size_t n_probe,
                                             std::uint64_t seed, double sigma) {
  check_point(spec, theta, a, set);
  if (n_probe == 0) throw InputError("set_containment_sampling: n_probe must be positive");
  std::mt19937_64 rng(seed);
  SamplingContainment out;
  out.worst_value = -kInf;
  for (std::size_t p = 0; p < n_probe; ++p) {
    const Vector e = set.sample(rng);
    const double v = r_max(spec, as_span(theta), as_span(a), as_span(e));
    ++out.probes_used;
    if (v > out.worst_value) {
      out.worst_value = v;
      out.worst_point = e;
    }
    if (v > 0.0) {
      out.verdict = ContainmentVerdict::Violated;
      out.bound = 0.0;
      return out;
    }
  }
  out.verdict = ContainmentVerdict::ProbablyContained;
  out.bound = zero_failure_bound(n_probe, sigma);
  return out;
}

OptContainment set_containment_opt(const ProblemSpec& spec, const Vector& theta, const Vector& a,
                                   const EpistemicSet& set, const OptContainmentOptions& opts) {
  check_point(spec, theta, a, set);
  if (!(opts.search_factor >= 1.0)) throw InputError("search_factor must be >= 1");
  const auto rm = [&](const Vector& e) { return r_max(spec, as_span(theta), as_span(a), as_span(e)); };
  const Vector& c = set.center();
  const double nu = set.radius();
  OptContainment out;
  if (rm(c) >= 0.0) {
    out.verdict = ContainmentVerdict::Violated;
    out.e_star = c;
    out.radius = 0.0;
    return out;
  }
  if (nu == 0.0) {
    out.radius = kInf;
    return out;
  }

  const EpistemicSet search = set.with_radius(opts.search_factor * nu);
  const Box box = search.bounding_box();
  const auto m = static_cast<Eigen::Index>(set.dim());
  const bool max_norm = set.norm_kind() == EpistemicSet::Norm::WeightedMax;
  const Vector& w = set.weights();

  // Seed probes: the points of the search region closest to violating.
  std::mt19937_64 rng(opts.seed);
  std::vector<std::pair<double, Vector>> probes;
  double best_probe_radius = kInf;
  Vector best_probe;
  for (std::size_t p = 0; p < opts.seed_probes; ++p) {
    Vector e = search.sample(rng);
    const double v = rm(e);
    if (v > 0.0 && set.distance(as_span(e)) < best_probe_radius) {
      best_probe_radius = set.distance(as_span(e));
      best_probe = e;
    }
    probes.emplace_back(v, std::move(e));
  }
  std::stable_sort(probes.begin(), probes.end(), [](const auto& x, const auto& y) { return x.first > y.first; });

  // Worst case over E itself, started from the center and the most violating probes inside E.
  // A violating maximizer certifies the verdict and seeds the distance search below.
  {
    NlpProblem q;
    q.dim = static_cast<std::size_t>(m);
    q.bounds = set.bounding_box();
    q.evaluate = [&](const Vector& e) {
      NlpEvaluation ev;
      ev.objective = -rm(e);
      if (set.norm_kind() == EpistemicSet::Norm::Weighted2) {
        const double d = set.distance(as_span(e));
        ev.constraints = Vector::Constant(1, d * d - nu * nu);
      }
      return ev;
    };
    q.starts.push_back(c);
    for (const auto& [v, e] : probes) {
      if (q.starts.size() > opts.n_starts) break;
      if (set.contains(as_span(e))) q.starts.push_back(e);
    }
    try {
      const NlpResult wr = minimize(q, opts.nlp);
      if (set.contains(as_span(wr.x)) && rm(wr.x) > 0.0 && set.distance(as_span(wr.x)) < best_probe_radius) {
        best_probe_radius = set.distance(as_span(wr.x));
        best_probe = wr.x;
      }
    } catch (const NumericalError&) {
      // the distance search below still runs
    }
  }

  NlpProblem p;
  const Eigen::Index dim = max_norm ? m + 1 : m;
  p.dim = static_cast<std::size_t>(dim);
  if (max_norm) {
    Vector lo(1), hi(1);
    lo << 0.0;
    hi << opts.search_factor * nu;
    Vector l(dim), h(dim);
    l << box.lower, lo;
    h << box.upper, hi;
    p.bounds = Box(l, h);
  } else {
    p.bounds = box;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::isfinite(w[i])) free.push_back(i);
  p.evaluate = [&, max_norm, m](const Vector& x) {
    const Vector e = x.head(m);
    NlpEvaluation ev;
    if (max_norm) {
      ev.objective = x[m];
      ev.constraints.resize(static_cast<Eigen::Index>(2 * free.size() + 1));
      Eigen::Index q = 0;
      for (auto i : free) {
        ev.constraints[q++] = w[i] * (e[i] - c[i]) - x[m];
        ev.constraints[q++] = -w[i] * (e[i] - c[i]) - x[m];
      }
      ev.constraints[q] = opts.activation - rm(e);
    } else {
      double s = 0.0;
      for (auto i : free) s += std::pow(w[i] * (e[i] - c[i]), 2);
      ev.objective = s;
      ev.constraints.resize(1);
      ev.constraints[0] = opts.activation - rm(e);
    }
    return ev;
  };
  for (std::size_t s = 0; s < std::min(opts.n_starts, probes.size()); ++s) {
    const Vector& e = probes[s].second;
    Vector x(dim);
    if (max_norm)
      x << e, std::min(set.distance(as_span(e)), opts.search_factor * nu);
    else
      x = e;
    p.starts.push_back(std::move(x));
  }
  if (best_probe.size() != 0) {
    Vector x(dim);
    if (max_norm)
      x << best_probe, std::min(best_probe_radius, opts.search_factor * nu);
    else
      x = best_probe;
    p.starts.push_back(std::move(x));
  }

  NlpResult r;
  bool solved = true;
  try {
    r = minimize(p, opts.nlp);
  } catch (const NumericalError&) {
    solved = false;
  }
  if (!solved || r.status == SolverStatus::Failed) {
    out.fell_back = true;
    const auto s = set_containment_sampling(spec, theta, a, set, 2000, opts.seed);
    out.verdict = s.verdict == ContainmentVerdict::Violated ? ContainmentVerdict::Violated
                                                            : ContainmentVerdict::ProbablyContained;
    if (s.verdict == ContainmentVerdict::Violated) {
      out.e_star = s.worst_point;
      out.radius = set.distance(as_span(s.worst_point));
    } else {
      out.radius = kInf;
    }
    return out;
  }

  out.radius = kInf;
  const Vector e_opt = r.x.head(m);
  if (rm(e_opt) > 0.0) {
    out.radius = set.distance(as_span(e_opt));
    out.e_star = e_opt;
  }
  if (best_probe_radius < out.radius) {
    out.radius = best_probe_radius;
    out.e_star = best_probe;
  }
  out.verdict = out.radius <= nu * (1.0 + 1e-12) ? ContainmentVerdict::Violated : ContainmentVerdict::Contained;
  return out;
}

RiskBoundReport set_complexity(const ProblemSpec& spec, const ScenarioSolver& solver, const ScenarioData& data,
                               const Vector& theta_star, const EpistemicSet& set, Formulation formulation,
                               const SetComplexityOptions& opts) {
  data.validate(spec);
  RiskBoundReport rep;
  rep.n_a = data.n_a();
  rep.beta = opts.beta;
  rep.valid = opts.iid;
  ContainmentTest test = opts.test;
  if (test == ContainmentTest::Auto)
    test = spec.epistemic_dim <= 10 ? ContainmentTest::Optimization : ContainmentTest::Sampling;
  rep.containment_test = to_string(test);

  std::vector<char> violating(data.n_a(), 0);
  parallel_for(data.n_a(), [&](std::size_t i) {
    const Vector a = data.aleatory.row(static_cast<Eigen::Index>(i)).transpose();
    const std::uint64_t seed = opts.seed + 7919 * static_cast<std::uint64_t>(i);
    if (test == ContainmentTest::Sampling) {
      violating[i] = set_containment_sampling(spec, theta_star, a, set, opts.n_probe, seed).verdict ==
                     ContainmentVerdict::Violated;
    } else {
      OptContainmentOptions o;
      o.seed = seed;
      violating[i] = set_containment_opt(spec, theta_star, a, set, o).verdict == ContainmentVerdict::Violated;
    }
  }, opts.threads);
  for (std::size_t i = 0; i < violating.size(); ++i)
    if (violating[i]) rep.violating.push_back(i);

  if (is_moment(formulation)) {
    rep.support.resize(data.n_a());
    for (std::size_t i = 0; i < data.n_a(); ++i) rep.support[i] = i;
  } else {
    rep.support = support_scenarios(solver, data, theta_star, opts.tol_support, opts.threads);
  }
  rep.n_support = rep.support.size();
  rep.n_violation = rep.violating.size();
  std::vector<char> either(data.n_a(), 0);
  for (auto i : rep.support) either[i] = 1;
  for (auto i : rep.violating) either[i] = 1;
  rep.set_complexity = static_cast<std::size_t>(std::count(either.begin(), either.end(), 1));
  rep.epsilon_bar = epsilon_bar(rep.n_a, rep.set_complexity, opts.beta);
  return rep;
}

}  // namespace scendo
