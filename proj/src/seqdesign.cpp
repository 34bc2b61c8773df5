#include "scendo/seqdesign.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>

#include "scendo/parallel.hpp"

namespace scendo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Running first and second moments of a selection, for cheap covariance updates.
class Moments {
 public:
  explicit Moments(Eigen::Index m) : sx_(Vector::Zero(m)), sxx_(Eigen::MatrixXd::Zero(m, m)) {}

  void add(const Vector& x, double sign = 1.0) {
    sx_ += sign * x;
    sxx_ += sign * x * x.transpose();
    n_ += sign;
  }

  /// logdet of the covariance after adding `plus` and removing `minus` (either may be null).
  double logdet(double ridge, const Vector* plus = nullptr, const Vector* minus = nullptr) const {
    Vector sx = sx_;
    Eigen::MatrixXd sxx = sxx_;
    double n = n_;
    if (plus) {
      sx += *plus;
      sxx += *plus * plus->transpose();
      n += 1.0;
    }
    if (minus) {
      sx -= *minus;
      sxx -= *minus * minus->transpose();
      n -= 1.0;
    }
    const auto m = sx.size();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(m, m) * ridge;
    if (n > 0.0) {
      const Vector mu = sx / n;
      cov += sxx / n - mu * mu.transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) return kNegInf;
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

 private:
  Vector sx_;
  Eigen::MatrixXd sxx_;
  double n_ = 0.0;
};

double default_ridge(const ScenarioMatrix& points) {
  const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  const double var = centered.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, points.rows() * points.cols()));
  return std::max(1e-12, 1e-6 * var);
}

struct Problem {
  const ScenarioMatrix& points;
  std::vector<double> like;  // gamma_i f_i
  std::vector<double> density;
  std::vector<int> cls;      // violation-pattern class
  std::vector<std::vector<bool>> pattern;
  double lambda;
  double ridge;
};

// Gain ordering: larger gain first, then higher density, then lower index.
bool better(double gain, double f, std::size_t i, double best_gain, double best_f, std::size_t best_i) {
  const double tol = 1e-12 * std::max(1.0, std::abs(best_gain));
  if (gain > best_gain + tol) return true;
  if (gain < best_gain - tol) return false;
  if (f != best_f) return f > best_f;
  return i < best_i;
}

// How many scenarios to take from each violating class so that every budget is met exactly:
// depth-first over classes, those violating more requirements first. The slots left over must
// be fillable by scenarios that violate nothing. Empty when no exact
// split exists (or the search budget runs out).
std::optional<std::map<int, std::size_t>> class_quotas(const Problem& p, std::size_t n_target,
                                                        const std::vector<std::size_t>& budgets) {
  struct Cls {
    int id;
    std::vector<bool> pattern;
    std::size_t size;
  };
  std::map<int, Cls> by_id;
  std::size_t n_free = 0;  // scenarios violating nothing, available to fill the remaining slots
  for (std::size_t i = 0; i < p.cls.size(); ++i) {
    if (std::none_of(p.pattern[i].begin(), p.pattern[i].end(), [](bool b) { return b; })) {
      ++n_free;
      continue;
    }
    auto [it, fresh] = by_id.emplace(p.cls[i], Cls{p.cls[i], p.pattern[i], 0});
    ++it->second.size;
  }
  std::vector<Cls> classes;
  for (auto& [id, c] : by_id) classes.push_back(c);
  std::stable_sort(classes.begin(), classes.end(), [](const Cls& a, const Cls& b) {
    return std::count(a.pattern.begin(), a.pattern.end(), true) > std::count(b.pattern.begin(), b.pattern.end(), true);
  });
  const std::size_t n_r = budgets.size();
  // reach[c][k]: most scenarios violating k available from classes c, c+1, ...
  std::vector<std::vector<std::size_t>> reach(classes.size() + 1, std::vector<std::size_t>(n_r, 0));
  for (std::size_t c = classes.size(); c-- > 0;)
    for (std::size_t k = 0; k < n_r; ++k) reach[c][k] = reach[c + 1][k] + (classes[c].pattern[k] ? classes[c].size : 0);

  std::vector<std::size_t> take(classes.size(), 0), rem = budgets;
  std::size_t nodes = 0;
  constexpr std::size_t kMaxNodes = 200000;
  std::function<bool(std::size_t, std::size_t)> dfs = [&](std::size_t c, std::size_t room) -> bool {
    if (++nodes > kMaxNodes) return false;
    for (std::size_t k = 0; k < n_r; ++k)
      if (rem[k] > reach[c][k]) return false;
    if (c == classes.size()) return room <= n_free;
    std::size_t hi = std::min(classes[c].size, room);
    for (std::size_t k = 0; k < n_r; ++k)
      if (classes[c].pattern[k]) hi = std::min(hi, rem[k]);
    for (std::size_t x = hi + 1; x-- > 0;) {
      for (std::size_t k = 0; k < n_r; ++k)
        if (classes[c].pattern[k]) rem[k] -= x;
      take[c] = x;
      if (dfs(c + 1, room - x)) return true;
      for (std::size_t k = 0; k < n_r; ++k)
        if (classes[c].pattern[k]) rem[k] += x;
    }
    return false;
  };
  if (!dfs(0, n_target)) return std::nullopt;
  std::map<int, std::size_t> out;
  for (std::size_t c = 0; c < classes.size(); ++c) out[classes[c].id] = take[c];
  return out;
}

struct Built {
  IndexSet s;
  std::vector<std::size_t> slack;
};

Built greedy(const Problem& p, std::size_t n_target, const std::vector<std::size_t>& budgets, double w_like,
             double w_div) {
  const std::size_t n = static_cast<std::size_t>(p.points.rows());
  const std::size_t n_r = budgets.size();
  std::vector<char> used(n, 0);
  Moments mom(p.points.cols());
  std::vector<std::size_t> remaining = budgets;
  Built out;
  out.slack.assign(n_r, 0);
  auto row = [&](std::size_t i) -> Vector { return p.points.row(static_cast<Eigen::Index>(i)).transpose(); };

  auto pick = [&](auto admissible) -> std::optional<std::size_t> {
    const double base = w_div > 0.0 ? mom.logdet(p.ridge) : 0.0;
    std::optional<std::size_t> best;
    double best_gain = kNegInf, best_f = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i] || !admissible(i)) continue;
      double gain = w_like * p.like[i];
      if (w_div > 0.0) {
        const Vector x = row(i);
        gain += w_div * p.lambda * (mom.logdet(p.ridge, &x) - base);
      }
      if (!best || better(gain, p.density[i], i, best_gain, best_f, *best)) {
        best = i;
        best_gain = gain;
        best_f = p.density[i];
      }
    }
    return best;
  };
  auto take = [&](std::size_t i) {
    used[i] = 1;
    mom.add(row(i));
    out.s.push_back(i);
  };

  // violating scenarios until every budget is met, following an exact class split when one exists
  if (auto quotas = class_quotas(p, n_target, budgets)) {
    while (out.s.size() < n_target) {
      const auto i = pick([&](std::size_t c) {
        const auto it = quotas->find(p.cls[c]);
        return it != quotas->end() && it->second > 0;
      });
      if (!i) break;
      take(*i);
      --(*quotas)[p.cls[*i]];
      for (std::size_t k = 0; k < n_r; ++k)
        if (p.pattern[*i][k]) --remaining[k];
    }
  }
  while (out.s.size() < n_target) {
    const auto i = pick([&](std::size_t c) {
      bool helps = false;
      for (std::size_t k = 0; k < n_r; ++k) {
        if (p.pattern[c][k] && remaining[k] == 0) return false;
        helps = helps || p.pattern[c][k];
      }
      return helps;
    });
    if (!i) break;
    take(*i);
    for (std::size_t k = 0; k < n_r; ++k)
      if (p.pattern[*i][k]) --remaining[k];
  }
  for (std::size_t k = 0; k < n_r; ++k) out.slack[k] += remaining[k];
  // fill with scenarios that violate nothing, then with anything if those run out
  while (out.s.size() < n_target) {
    auto i = pick([&](std::size_t c) {
      return std::none_of(p.pattern[c].begin(), p.pattern[c].end(), [](bool b) { return b; });
    });
    if (!i) {
      i = pick([](std::size_t) { return true; });
      if (!i) break;
      for (std::size_t k = 0; k < n_r; ++k)
        if (p.pattern[*i][k]) ++out.slack[k];
    }
    take(*i);
  }
  return out;
}

double value_of(const Problem& p, const IndexSet& s) {
  Moments mom(p.points.cols());
  double like = 0.0;
  for (auto i : s) {
    like += p.like[i];
    mom.add(p.points.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return like + (p.lambda > 0.0 ? p.lambda * mom.logdet(p.ridge) : 0.0);
}

// Exchange refinement: swap a selected scenario for an unselected one of the same violation
// pattern while the full objective improves.
void refine(const Problem& p, IndexSet& s, std::size_t max_passes = 50) {
  if (!(p.lambda > 0.0)) {
    // Without the diversity term the best member of each class is simply the most likely one.
    std::map<int, std::vector<std::size_t>> members, chosen;
    for (std::size_t i = 0; i < p.cls.size(); ++i) members[p.cls[i]].push_back(i);
    for (auto i : s) chosen[p.cls[i]].push_back(i);
    IndexSet out;
    for (auto& [c, sel] : chosen) {
      auto pool = members[c];
      std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
        if (p.like[a] != p.like[b]) return p.like[a] > p.like[b];
        return p.density[a] > p.density[b];
      });
      out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sel.size()));
    }
    std::sort(out.begin(), out.end());
    s = std::move(out);
    return;
  }
  const std::size_t n = p.cls.size();
  std::vector<char> in(n, 0);
  for (auto i : s) in[i] = 1;
  Moments mom(p.points.cols());
  for (auto i : s) mom.add(p.points.row(static_cast<Eigen::Index>(i)).transpose());
  double current = mom.logdet(p.ridge);
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (std::size_t u = 0; u < s.size(); ++u) {
      const std::size_t i = s[u];
      const Vector xi = p.points.row(static_cast<Eigen::Index>(i)).transpose();
      double best_delta = 1e-10 * std::max(1.0, std::abs(current));
      std::optional<std::size_t> best;
      double best_ld = current;
      for (std::size_t j = 0; j < n; ++j) {
        if (in[j] || p.cls[j] != p.cls[i]) continue;
        const Vector xj = p.points.row(static_cast<Eigen::Index>(j)).transpose();
        const double ld = mom.logdet(p.ridge, &xj, &xi);
        const double delta = p.lambda * (ld - current) + p.like[j] - p.like[i];
        if (delta > best_delta) {
          best_delta = delta;
          best = j;
          best_ld = ld;
        }
      }
      if (best) {
        const Vector xj = p.points.row(static_cast<Eigen::Index>(*best)).transpose();
        mom.add(xi, -1.0);
        mom.add(xj);
        in[i] = 0;
        in[*best] = 1;
        s[u] = *best;
        current = best_ld;
        improved = true;
      }
    }
    if (!improved) break;
  }
  std::sort(s.begin(), s.end());
}

ScenarioMatrix take_rows(const ScenarioMatrix& m, const IndexSet& rows) {
  ScenarioMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

}  // namespace

void SdConfig::validate(const ProblemSpec& spec) const {
  if (max_iter < 1) throw InputError("sd.max_iter must be at least 1");
  if (!(lambda_div >= 0.0)) throw InputError("sd.lambda_div must be nonnegative");
  if (!(threshold >= 0.0)) throw InputError("sd.threshold must be nonnegative");
  if (n_a_init < 1 || n_e < 1) throw InputError("sd training sizes must be positive");
  if (!(n_a_growth > 1.0)) throw InputError("sd.n_a_growth must exceed 1");
  if (n_a_cap < n_a_init) throw InputError("sd.n_a_cap must be at least n_a_init");
  rmc.validate(spec.requirement_count());
  alphas.validate(spec.requirement_count());
  if (is_moment(formulation) && !moment) throw InputError("moment formulations need a moment specification");
}

double selection_value(const ScenarioMatrix& points, const std::vector<std::vector<bool>>& violates,
                       const std::vector<double>& density, double lambda, double ridge, const IndexSet& s) {
  Moments mom(points.cols());
  double like = 0.0;
  for (auto i : s) {
    const bool gamma = std::any_of(violates[i].begin(), violates[i].end(), [](bool b) { return b; });
    like += gamma ? density[i] : 0.0;
    mom.add(points.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return like + (lambda > 0.0 ? lambda * mom.logdet(ridge) : 0.0);
}

TrainingSelection select_training_aleatory(const ScenarioMatrix& points,
                                           const std::vector<std::vector<bool>>& violates,
                                           const std::vector<double>& density, std::size_t n_target,
                                           const std::vector<std::size_t>& budgets, double lambda) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (violates.size() != n || density.size() != n)
    throw InputError("select_training_aleatory: one violation pattern and density per scenario required");
  if (n_target > n) throw InputError("select_training_aleatory: n_target exceeds the testing set size");
  if (!(lambda >= 0.0)) throw InputError("select_training_aleatory: lambda must be nonnegative");
  for (const auto& v : violates)
    if (v.size() != budgets.size()) throw InputError("select_training_aleatory: budgets and patterns differ in size");

  Problem p{points, std::vector<double>(n), density, std::vector<int>(n), violates, lambda, default_ridge(points)};
  std::map<std::vector<bool>, int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const bool gamma = std::any_of(violates[i].begin(), violates[i].end(), [](bool b) { return b; });
    p.like[i] = gamma ? density[i] : 0.0;
    p.cls[i] = ids.emplace(violates[i], static_cast<int>(ids.size())).first->second;
  }

  TrainingSelection best;
  best.value = kNegInf;
  for (auto [wl, wd] : {std::pair{1.0, 1.0}, std::pair{1.0, 0.0}, std::pair{0.0, 1.0}}) {
    Built b = greedy(p, n_target, budgets, wl, wd);
    refine(p, b.s);
    const double v = value_of(p, b.s);
    if (best.indices.empty() || v > best.value + 1e-12 * std::max(1.0, std::abs(best.value))) {
      best.indices = b.s;
      best.value = v;
      best.budget_slack = b.slack;
    }
  }
  return best;
}

IndexSet select_training_epistemic(const Eigen::MatrixXd& worst, const IndexSet& aleatory_rows,
                                   std::size_t n_target) {
  const auto n_e = static_cast<std::size_t>(worst.cols());
  if (n_target > n_e) throw InputError("select_training_epistemic: n_target exceeds the testing set size");
  if (aleatory_rows.empty()) throw InputError("select_training_epistemic: no aleatory rows selected");
  std::vector<double> score(n_e, kNegInf);
  for (std::size_t j = 0; j < n_e; ++j)
    for (auto i : aleatory_rows)
      score[j] = std::max(score[j], worst(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  IndexSet order(n_e);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(n_target);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> default_budgets(const std::vector<std::vector<bool>>& violates, std::size_t n_a) {
  if (violates.empty()) return {};
  const std::size_t n_r = violates.front().size();
  std::vector<std::size_t> b(n_r, 0);
  for (std::size_t k = 0; k < n_r; ++k) {
    std::size_t count = 0;
    for (const auto& v : violates) count += v[k] ? 1 : 0;
    b[k] = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n_a) / static_cast<double>(violates.size()) * static_cast<double>(count) - 1e-9));
  }
  return b;
}

SdResult run_sd(const ProblemSpec& spec, const ScenarioMatrix& testing_aleatory,
                const ScenarioMatrix& testing_epistemic, const Vector& baseline, const SdConfig& cfg) {
  spec.validate();
  cfg.validate(spec);
  if (!spec.design_bounds.contains(baseline)) throw InputError("baseline design lies outside the design bounds");
  const auto n_ta = static_cast<std::size_t>(testing_aleatory.rows());
  const auto n_te = static_cast<std::size_t>(testing_epistemic.rows());
  if (n_ta < 2 || n_te < 2) throw InputError("sequential design needs testing sets with at least two scenarios");
  if (cfg.n_a_init > n_ta) throw InputError("sd.n_a_init exceeds the testing aleatory set");
  const std::size_t n_r = spec.requirement_count();

  std::vector<double> density(n_ta, 1.0);
  if (cfg.density)
    for (std::size_t i = 0; i < n_ta; ++i) density[i] = cfg.density(row_span(testing_aleatory, static_cast<Eigen::Index>(i)));

  SdResult res;
  Vector theta = baseline;
  std::size_t n_a = cfg.n_a_init;
  const std::size_t n_e = std::min(cfg.n_e, n_te);
  Vector alpha = cfg.alphas.alpha_a;
  std::size_t trained_n_a = cfg.n_a_init, trained_n_e = n_e;

  for (std::size_t ell = 1;; ++ell) {
    // 1. robustness of the current design on the testing sets
    const auto grids = testing_grid(spec, theta, testing_aleatory, testing_epistemic, false, cfg.threads);
    Eigen::MatrixXd worst = grids.front();
    for (std::size_t k = 1; k < n_r; ++k) worst = worst.cwiseMax(grids[k]);
    RmcReport report;
    report.n_a_test = n_ta;
    report.n_e_test = n_te;
    if (cfg.rmc.total_failure) {
      report.requirements.push_back(analyze_grid(worst, cfg.rmc.alpha_a_prime[0], cfg.rmc.alpha_e_prime[0],
                                                 cfg.rmc.sigma, cfg.rmc.p_max[0]));
    } else {
      report.requirements.resize(n_r);
      parallel_for(n_r, [&](std::size_t k) {
        const auto ki = static_cast<Eigen::Index>(k);
        report.requirements[k] = analyze_grid(grids[k], cfg.rmc.alpha_a_prime[ki], cfg.rmc.alpha_e_prime[ki],
                                              cfg.rmc.sigma, cfg.rmc.p_max[ki]);
      }, cfg.threads);
    }
    SdIteration rec;
    rec.iteration = ell;
    rec.n_a = trained_n_a;
    rec.n_e = trained_n_e;
    rec.alpha_a = alpha;
    rec.objective = spec.objective(as_span(theta));
    rec.theta = theta;
    for (std::size_t q = 0; q < report.requirements.size(); ++q) {
      rec.metric.push_back(metric_value(report.requirements[q], cfg.metric));
      if (rec.metric.back() > cfg.threshold) rec.violated.push_back(q);
    }
    const bool met = rec.violated.empty() && rec.objective <= cfg.j_bound;
    const bool violated = !rec.violated.empty();
    res.trace.push_back(rec);
    res.theta = theta;
    res.final_report = report;

    // 2. stop rule
    if (met) {
      res.spec_met = true;
      break;
    }
    if (ell >= cfg.max_iter) break;

    // 3. growth
    if (violated) {
      n_a = std::min({static_cast<std::size_t>(std::ceil(cfg.n_a_growth * static_cast<double>(n_a) - 1e-9)),
                      cfg.n_a_cap, n_ta});
      alpha.setZero();
    } else {
      alpha = (alpha.array() + 1.0 / static_cast<double>(n_a)).min(1.0);
    }

    // 4-5. training sets
    std::vector<std::vector<bool>> violates(n_ta, std::vector<bool>(n_r, false));
    for (std::size_t k = 0; k < n_r; ++k)
      for (std::size_t i = 0; i < n_ta; ++i)
        violates[i][k] = grids[k].row(static_cast<Eigen::Index>(i)).maxCoeff() > 0.0;
    const auto sel = select_training_aleatory(testing_aleatory, violates, density, n_a,
                                              default_budgets(violates, n_a), cfg.lambda_div);
    const IndexSet esel = select_training_epistemic(worst, sel.indices, n_e);
    ScenarioData data;
    data.aleatory = take_rows(testing_aleatory, sel.indices);
    data.epistemic = take_rows(testing_epistemic, esel);
    res.training_aleatory = sel.indices;
    res.training_epistemic = esel;

    // 6. re-solve
    ProgramRequest req;
    req.formulation = cfg.formulation;
    req.alphas = cfg.alphas;
    req.alphas.alpha_a = alpha;
    req.moment = cfg.moment;
    req.options = cfg.program;
    req.options.warm_starts.insert(req.options.warm_starts.begin(), theta);
    try {
      SolveResult r = solve(spec, data, req);
      if (r.status == SolverStatus::Infeasible && r.suggested_alpha_a) {
        alpha = alpha.cwiseMax(*r.suggested_alpha_a);
        req.alphas.alpha_a = alpha;
        req.options.suggest_on_infeasible = false;
        r = solve(spec, data, req);
      }
      if (r.status == SolverStatus::Failed) throw NumericalError("solver failed");
      theta = r.theta_star;
    } catch (const std::exception& e) {
      res.failed = true;
      res.failure = "iteration " + std::to_string(ell) + ": " + e.what();
      break;
    }
    trained_n_a = n_a;
    trained_n_e = n_e;
  }
  return res;
}

}  // namespace scendo
