#include "scendo/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace scendo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_violation(const Vector& g) {
  double v = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) v = std::max(v, g[i]);
  return v;
}

bool finite_eval(const NlpEvaluation& ev) {
  return std::isfinite(ev.objective) && ev.constraints.allFinite();
}

// Augmented Lagrangian (PHR) merit for inequality constraints.
class Merit {
 public:
  Merit(const NlpProblem& p, std::size_t& counter) : p_(p), counter_(counter) {}

  void set(const Vector& multipliers, double penalty) {
    mu_ = multipliers;
    penalty_ = penalty;
  }

  double operator()(const Vector& x) const {
    ++counter_;
    const NlpEvaluation ev = p_.evaluate(x);
    if (!finite_eval(ev)) return kInf;
    double acc = ev.objective;
    for (Eigen::Index i = 0; i < ev.constraints.size(); ++i) {
      const double mu = i < mu_.size() ? mu_[i] : 0.0;
      const double t = std::max(0.0, mu + penalty_ * ev.constraints[i]);
      acc += (t * t - mu * mu) / (2.0 * penalty_);
    }
    return acc;
  }

 private:
  const NlpProblem& p_;
  std::size_t& counter_;
  Vector mu_;
  double penalty_ = 1.0;
};

// Gradient with one-sided differences at the box faces; non-finite neighbours fall back to the
// other side and finally to zero.
Vector box_gradient(const Merit& f, const Vector& x, double fx, const Box& box, double step) {
  const auto n = x.size();
  Vector g(n);
  Vector xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    const bool up = x[i] + h <= box.upper[i];
    const bool down = x[i] - h >= box.lower[i];
    double fp = kInf, fm = kInf;
    if (up) {
      xp[i] = x[i] + h;
      fp = f(xp);
    }
    if (down) {
      xp[i] = x[i] - h;
      fm = f(xp);
    }
    xp[i] = x[i];
    if (std::isfinite(fp) && std::isfinite(fm))
      g[i] = (fp - fm) / (2.0 * h);
    else if (std::isfinite(fp))
      g[i] = (fp - fx) / h;
    else if (std::isfinite(fm))
      g[i] = (fx - fm) / h;
    else
      g[i] = 0.0;
  }
  return g;
}

struct InnerOutcome {
  Vector x;
  double value = kInf;
  std::size_t resets = 0;
};

// Projected BFGS with Armijo backtracking along the projected path.
InnerOutcome projected_bfgs(const Merit& f, Vector x, const Box& box, const NlpOptions& opt) {
  const auto n = x.size();
  InnerOutcome out;
  double fx = f(x);
  if (!std::isfinite(fx)) {
    out.x = std::move(x);
    return out;
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  Vector g = box_gradient(f, x, fx, box, opt.fd_step);
  std::size_t flat = 0;
  const double tiny = 1e-12;

  for (std::size_t it = 0; it < opt.max_inner; ++it) {
    Vector gf = g;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= box.lower[i] + tiny * std::max(1.0, std::abs(box.lower[i]));
      const bool at_hi = x[i] >= box.upper[i] - tiny * std::max(1.0, std::abs(box.upper[i]));
      if ((at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0)) gf[i] = 0.0;
    }
    if (gf.lpNorm<Eigen::Infinity>() == 0.0) break;
    Vector d = -(H * gf);
    for (Eigen::Index i = 0; i < n; ++i)
      if (gf[i] == 0.0 && g[i] != 0.0) d[i] = 0.0;
    if (!(gf.dot(d) < 0.0)) {
      H.setIdentity();
      fresh = true;
      ++out.resets;
      d = -gf;
    }
    double t = 1.0;
    if (fresh) {
      const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());
      t = std::min(1.0, 0.1 * scale / d.lpNorm<Eigen::Infinity>());
    }
    Vector xt;
    double ft = kInf;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xt = box.project(x + t * d);
      ft = f(xt);
      if (std::isfinite(ft) && ft <= fx + 1e-4 * g.dot(xt - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (fresh) break;
      H.setIdentity();
      fresh = true;
      ++out.resets;
      continue;
    }
    const Vector s = xt - x;
    const Vector gt = box_gradient(f, xt, ft, box, opt.fd_step);
    const Vector y = gt - g;
    const double sy = s.dot(y);
    const double decrease = fx - ft;
    const double step_norm = s.lpNorm<Eigen::Infinity>();
    x = xt;
    g = gt;
    const double f_prev = fx;
    fx = ft;
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (fresh) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n) - rho * y * s.transpose();
      H = V.transpose() * H * V + rho * s * s.transpose();
      fresh = false;
    }
    if (step_norm <= opt.tol_x * 1e-3 * (1.0 + x.lpNorm<Eigen::Infinity>()) ||
        decrease <= 1e-14 * (1.0 + std::abs(f_prev))) {
      if (++flat >= 3) break;
    } else {
      flat = 0;
    }
  }
  out.x = std::move(x);
  out.value = fx;
  return out;
}

struct StartOutcome {
  Vector x;
  double objective = kInf;
  double violation = kInf;
  bool converged = false;
  std::size_t resets = 0;
  std::vector<double> history;
};

bool better(double f_a, double v_a, double f_b, double v_b, double tol) {
  const bool feas_a = v_a <= tol;
  const bool feas_b = v_b <= tol;
  if (feas_a != feas_b) return feas_a;
  if (feas_a) return f_a < f_b;
  if (v_a != v_b) return v_a < v_b;
  return f_a < f_b;
}

StartOutcome run_start(const NlpProblem& p, const NlpOptions& opt, Vector x, std::size_t& evals) {
  Merit merit(p, evals);
  StartOutcome out;
  x = p.bounds.project(x);
  ++evals;
  NlpEvaluation ev = p.evaluate(x);
  if (!finite_eval(ev)) return out;
  out.x = x;
  out.objective = ev.objective;
  out.violation = max_violation(ev.constraints);

  Vector mu = Vector::Zero(ev.constraints.size());
  double penalty = opt.penalty_init;
  double prev_violation = kInf;
  for (std::size_t outer = 0; outer < opt.max_outer; ++outer) {
    merit.set(mu, penalty);
    InnerOutcome inner = projected_bfgs(merit, x, p.bounds, opt);
    out.resets += inner.resets;
    if (!std::isfinite(inner.value)) break;
    const double dx = (inner.x - x).lpNorm<Eigen::Infinity>();
    x = inner.x;
    ++evals;
    ev = p.evaluate(x);
    if (!finite_eval(ev)) break;
    const double violation = max_violation(ev.constraints);
    out.history.push_back(violation);
    if (better(ev.objective, violation, out.objective, out.violation, opt.tol_con)) {
      out.x = x;
      out.objective = ev.objective;
      out.violation = violation;
    }
    Vector mu_next = (mu + penalty * ev.constraints).cwiseMax(0.0);
    const double dmu = (mu_next - mu).lpNorm<Eigen::Infinity>();
    mu = std::move(mu_next);
    if (violation <= opt.tol_con && outer > 0 &&
        dx <= opt.tol_x * (1.0 + x.lpNorm<Eigen::Infinity>()) &&
        dmu <= 1e-6 * (1.0 + mu.lpNorm<Eigen::Infinity>())) {
      out.converged = true;
      break;
    }
    if (violation > 0.25 * prev_violation) penalty = std::min(penalty * opt.penalty_growth, opt.penalty_max);
    prev_violation = violation;
  }
  // A feasible final point whose outer loop stalled only on the multiplier test still counts.
  if (!out.converged && out.violation <= opt.tol_con && !out.history.empty() &&
      out.history.back() <= opt.tol_con)
    out.converged = true;
  return out;
}

}  // namespace

NlpProblem NlpProblem::from_functions(std::size_t dim, std::function<double(const Vector&)> objective,
                                      std::vector<std::function<double(const Vector&)>> inequalities,
                                      Box bounds, std::vector<Vector> starts) {
  NlpProblem p;
  p.dim = dim;
  p.bounds = std::move(bounds);
  p.starts = std::move(starts);
  p.evaluate = [f = std::move(objective), gs = std::move(inequalities)](const Vector& x) {
    NlpEvaluation ev;
    ev.objective = f(x);
    ev.constraints.resize(static_cast<Eigen::Index>(gs.size()));
    for (std::size_t i = 0; i < gs.size(); ++i) ev.constraints[static_cast<Eigen::Index>(i)] = gs[i](x);
    return ev;
  };
  return p;
}

void NlpOptions::validate() const {
  if (!(penalty_growth > 1.0)) throw InputError("penalty_growth must exceed 1");
  if (!(penalty_init > 0.0) || !(penalty_max >= penalty_init))
    throw InputError("penalty_init must be positive and not exceed penalty_max");
  if (!(tol_x > 0.0) || !(tol_con > 0.0)) throw InputError("tolerances must be positive");
  if (!(fd_step > 0.0)) throw InputError("fd_step must be positive");
  if (max_outer == 0 || max_inner == 0) throw InputError("iteration limits must be positive");
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("fd_gradient: non-finite evaluation at coordinate " + std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::vector<Vector> latin_hypercube(const Box& box, std::size_t n, std::uint64_t seed) {
  std::vector<Vector> pts(n, Vector(box.lower.size()));
  if (n == 0) return pts;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  for (Eigen::Index d = 0; d < box.lower.size(); ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t s = 0; s < n; ++s) {
      const double u = (static_cast<double>(perm[s]) + unit(rng)) / static_cast<double>(n);
      pts[s][d] = box.lower[d] + u * (box.upper[d] - box.lower[d]);
    }
  }
  return pts;
}

NlpResult minimize(const NlpProblem& problem, const NlpOptions& options) {
  options.validate();
  if (!problem.evaluate) throw InputError("minimize: problem has no evaluation callback");
  if (problem.bounds.dim() != problem.dim) throw InputError("minimize: bounds do not match dim");
  for (const auto& s : problem.starts)
    if (static_cast<std::size_t>(s.size()) != problem.dim)
      throw InputError("minimize: start point has the wrong dimension");

  std::vector<Vector> starts = problem.starts;
  if (starts.empty()) starts = latin_hypercube(problem.bounds, options.n_starts, options.seed);

  NlpResult result;
  StartOutcome best;
  bool have = false;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    StartOutcome o = run_start(problem, options, starts[s], result.evaluations);
    ++result.starts_run;
    if (!std::isfinite(o.objective)) continue;
    if (!have || better(o.objective, o.violation, best.objective, best.violation, options.tol_con)) {
      best = std::move(o);
      result.best_start = s;
      have = true;
    }
  }
  if (!have) {
    result.x = problem.bounds.project(starts.front());
    result.objective = kInf;
    result.max_violation = kInf;
    result.status = SolverStatus::Failed;
    return result;
  }
  result.x = best.x;
  result.objective = best.objective;
  result.max_violation = best.violation;
  result.violation_history = best.history;
  if (best.violation > options.tol_con)
    result.status = SolverStatus::Infeasible;
  else
    result.status = best.converged ? SolverStatus::Converged : SolverStatus::MaxIter;
  return result;
}

}  // namespace scendo
