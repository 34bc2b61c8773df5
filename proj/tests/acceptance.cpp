// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "scendo/benchmark.hpp"
#include "scendo/commands.hpp"
#include "scendo/ecdf.hpp"
#include "scendo/io.hpp"
#include "scendo/programs.hpp"
#include "scendo/rmc.hpp"
#include "scendo/scenario_theory.hpp"

using namespace scendo;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ProgramRequest request(Formulation f, double alpha_a, double alpha_e, std::size_t starts = 4) {
  ProgramRequest req;
  req.formulation = f;
  req.alphas = AlphaConfig::uniform(1, alpha_a, alpha_e, 1e3);
  req.options.n_starts = starts;
  return req;
}

// 1: risk bound table
Outcome epsilon_table() {
  Outcome o;
  const std::size_t ks[] = {2, 4, 8, 10, 13, 18};
  const double want[] = {0.303, 0.369, 0.477, 0.525, 0.590, 0.687};
  double worst_time = 0.0, worst_err = 0.0;
  auto check = [&](std::size_t n, std::size_t k, double target, double tol) {
    const auto t0 = Clock::now();
    const double e = epsilon_bar(n, k, 1e-4);
    worst_time = std::max(worst_time, seconds_since(t0));
    worst_err = std::max(worst_err, std::abs(e - target) / tol);
    if (std::abs(e - target) > tol) {
      o.pass = false;
      o.detail += " eps(" + std::to_string(n) + "," + std::to_string(k) + ")=" + fmt("%.5f", e);
    }
  };
  for (int i = 0; i < 6; ++i) check(50, ks[i], want[i], 1e-3);
  check(100, 2, 0.164, 1e-3);
  check(5000, 4, 0.0044, 2e-4);
  if (worst_time >= 1.0) o.pass = false;
  o.detail += " max time " + fmt("%.3f s", worst_time) + ", max error/tolerance " + fmt("%.2f", worst_err);
  return o;
}

// 2: ECDF identities
Outcome ecdf_identities() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(2, 50);
  std::normal_distribution<double> val(0.0, 5.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t endpoint_fail = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> z(static_cast<std::size_t>(len(rng)));
    for (auto& v : z) v = val(rng);
    std::sort(z.begin(), z.end());
    const auto F = EmpiricalCdf::build(z);
    if (F.quantile(0.0) != z.front() || F.quantile(1.0) != z.back()) ++endpoint_fail;
    for (int t = 0; t < 50; ++t) {
      const double a = u(rng);
      if (a <= 0.0 || a >= 1.0) continue;
      worst = std::max(worst, std::abs(F.cdf(F.quantile(a)) - a));
    }
  }
  o.pass = worst <= 1e-12 && endpoint_fail == 0;
  o.detail = " max |F(F^-1(a)) - a| = " + fmt("%.2e", worst) + ", endpoint mismatches " + std::to_string(endpoint_fail);
  return o;
}

// 3: minimal enclosing circle reduction
Outcome enclosing_circle() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  auto data = benchmark::generate_dataset(30, 1, 31);
  data.epistemic.setZero();
  std::vector<std::array<double, 2>> pts;
  for (Eigen::Index i = 0; i < data.aleatory.rows(); ++i) pts.push_back({data.aleatory(i, 0), data.aleatory(i, 1)});
  const auto mec = oracle::welzl(pts);
  const double area = std::numbers::pi * mec.r * mec.r;
  const auto t0 = Clock::now();
  const auto r = solve(spec, data, request(Formulation::RiskAverseLocal, 0.0, 0.0));
  const double dt = seconds_since(t0);
  const double rel = std::abs(r.objective - area) / area;
  o.pass = rel <= 1e-3 && dt < 5.0;
  o.detail = " J = " + fmt("%.6f", r.objective) + ", oracle area = " + fmt("%.6f", area) + ", rel err " +
             fmt("%.1e", rel) + ", " + fmt("%.2f s", dt);
  return o;
}

// 4: global and local risk-averse programs agree at alpha_e = 0
Outcome remark_one() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto data = benchmark::generate_dataset(30, 20, seed);
    const auto g = solve(spec, data, request(Formulation::RiskAverseGlobal, 0.0, 0.0));
    const auto l = solve(spec, data, request(Formulation::RiskAverseLocal, 0.0, 0.0));
    const double d = std::abs(g.objective - l.objective) / std::max(1.0, std::abs(l.objective));
    worst = std::max(worst, d);
    o.detail += " seed " + std::to_string(seed) + ": " + fmt("%.6f", g.objective) + " vs " + fmt("%.6f", l.objective) + ";";
  }
  o.pass = worst <= 1e-4;
  o.detail += " max rel diff " + fmt("%.1e", worst);
  return o;
}

// 5: outlier counts
Outcome outlier_counts() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  const std::size_t n_e = 50;
  const double alpha_e = 2.0 / 49.0;  // two epistemic outliers, as in the worked examples
  const auto cap = static_cast<std::size_t>(std::floor(n_e * alpha_e));
  std::size_t solves = 0, bad_e = 0, bad_a = 0, largest = 0;
  for (std::uint64_t seed : {4, 5}) {
    const auto data = benchmark::generate_dataset(30, n_e, seed);
    for (auto f : {Formulation::RiskAverseLocal, Formulation::RiskAgnosticLocal, Formulation::RiskAverseGlobal,
                   Formulation::RiskAgnosticGlobal}) {
      auto req = request(f, 2.0 / 49.0, alpha_e, 2);
      const auto r = solve(spec, data, req);
      ++solves;
      for (const auto& s : r.epistemic_outliers) {
        largest = std::max(largest, s.size());
        if (s.size() > cap) ++bad_e;
      }
      if (f == Formulation::RiskAverseLocal || f == Formulation::RiskAgnosticLocal) {
        // aleatory outliers recomputed from the quantiles of each pseudo-distribution
        std::size_t n_out = 0;
        for (std::size_t i = 0; i < data.n_a(); ++i) {
          auto row = pseudo_distribution(spec, r.theta_star, 0, i, data).values;
          std::sort(row.begin(), row.end());
          if (oracle::quantile(row, 1.0 - alpha_e) > req.options.report_tol) ++n_out;
        }
        if (n_out != r.aleatory_outliers.size()) ++bad_a;
      }
    }
  }
  o.pass = bad_e == 0 && bad_a == 0;
  o.detail = " " + std::to_string(solves) + " solves at alpha_e = 2/49, n_e = 50: largest |O_e(i)| = " +
             std::to_string(largest) + " (cap " + std::to_string(cap) + "), O_e violations " + std::to_string(bad_e) +
             ", O_a mismatches " + std::to_string(bad_a);
  return o;
}

// 6: relaxation monotonicity
Outcome relaxation() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(50, 20, 6);
  std::vector<double> js;
  std::vector<Vector> warm;
  for (double a : {0.0, 1.0 / 49.0, 2.0 / 49.0, 4.0 / 49.0}) {
    auto req = request(Formulation::RiskAgnosticLocal, a, 0.0);
    req.options.warm_starts = warm;  // the previous design stays feasible as alpha_a grows
    const auto r = solve(spec, data, req);
    js.push_back(r.objective);
    warm = {r.theta_star};
  }
  for (std::size_t i = 1; i < js.size(); ++i)
    if (js[i] > js[i - 1] + 1e-3) o.pass = false;
  o.detail = " J =";
  for (double j : js) o.detail += " " + fmt("%.4f", j);
  o.detail += "; reduction at 4/49: " + fmt("%.1f%%", 100.0 * (1.0 - js.back() / js.front()));
  return o;
}

// 7: RMC structure
Outcome rmc_structure() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  const auto train = benchmark::generate_dataset(40, 20, 7);
  const auto test = benchmark::generate_dataset(1, 1, 70, benchmark::GaussianMixture::standard(), 4000, 1000);
  std::size_t analyses = 0, nest_fail = 0;
  Vector theta;
  for (auto f : {Formulation::RiskAverseLocal, Formulation::RiskAgnosticLocal}) {
    for (double a : {0.0, 2.0 / 40.0}) {
      const auto r = solve(spec, train, request(f, a, 0.0, 2));
      if (f == Formulation::RiskAverseLocal && a == 0.0) theta = r.theta_star;
      for (double ap : {0.0, 0.01})
        for (double ep : {0.0, 0.05}) {
          const auto rep = rmc_analyze(spec, r.theta_star, *test.testing_aleatory, *test.testing_epistemic,
                                       RmcConfig::uniform(1, ap, ep, 0.95, 0.01));
          ++analyses;
          for (const auto& q : rep.requirements)
            if (!q.range_b.contains(q.range_a)) ++nest_fail;
        }
    }
  }
  double zf_err = 0.0;
  for (std::size_t n : {10u, 200u, 4000u, 100000u})
    zf_err = std::max(zf_err, std::abs(clopper_pearson(0, n, 0.95).upper - (1.0 - std::pow(0.05, 1.0 / n))));

  std::vector<double> widths;
  for (Eigen::Index ne : {50, 200, 1000}) {
    const ScenarioMatrix E = test.testing_epistemic->topRows(ne);
    const auto rep = rmc_analyze(spec, theta, *test.testing_aleatory, E, RmcConfig::uniform(1, 0.0, 0.0, 0.95, 0.01));
    widths.push_back(rep.requirements[0].range_d.width());
  }
  const bool shrinking = widths[1] < widths[0] && widths[2] < widths[1];
  o.pass = nest_fail == 0 && zf_err <= 1e-10 && shrinking;
  o.detail = " range_a in range_b on " + std::to_string(analyses - nest_fail) + "/" + std::to_string(analyses) +
             " analyses; zero-failure bound error " + fmt("%.1e", zf_err) + "; d width over n'_e 50/200/1000:";
  for (double w : widths) o.detail += " " + fmt("%.4g", w);
  return o;
}

// 8: sampling vs optimization containment
Outcome containment() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  const auto E = benchmark::epistemic_set();
  const auto mix = benchmark::GaussianMixture::standard();
  const auto as = mix.sample(100, 88);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> c(-0.5, 0.5), mu(1.0, 3.5);
  std::size_t agree = 0, violated = 0, far_disagree = 0;
  std::string misses;
  for (Eigen::Index i = 0; i < 100; ++i) {
    Vector theta(3);
    theta << c(rng), c(rng), mu(rng);
    const Vector a = as.row(i).transpose();
    const auto s = set_containment_sampling(spec, theta, a, E, 2000, 1000 + static_cast<std::uint64_t>(i));
    const auto opt = set_containment_opt(spec, theta, a, E);
    const bool sv = s.verdict == ContainmentVerdict::Violated, ov = opt.verdict == ContainmentVerdict::Violated;
    violated += ov;
    if (sv == ov) {
      ++agree;
    } else {
      if (!(std::abs(opt.radius - E.radius()) <= 1e-3)) ++far_disagree;
      // r_max at the violating point shows how close (theta, a) sits to tangency with E
      const double peak = ov ? r_max(spec, as_span(theta), as_span(a), as_span(opt.e_star)) : s.worst_value;
      misses += "; pair " + std::to_string(i) + (ov ? " missed by sampling" : " missed by optimization") +
                " at radius " + fmt("%.4f", opt.radius) + ", peak r_max " + fmt("%.1e", peak);
    }
  }
  o.pass = agree >= 98 && far_disagree == 0;
  o.detail = " agree on " + std::to_string(agree) + "/100 (" + std::to_string(violated) +
             " violated by the optimization test), disagreements away from the boundary " + std::to_string(far_disagree) + misses;
  return o;
}

// 9: set-complexity bounds
Outcome set_complexity_bounds() {
  Outcome o;
  const auto spec = benchmark::circle_problem();
  const auto E = benchmark::epistemic_set();
  std::size_t analyses = 0, bound_fail = 0, moment_fail = 0;
  std::string summary;
  for (std::uint64_t seed : {9, 10}) {
    const auto data = benchmark::generate_dataset(20, 10, seed);
    for (auto f : {Formulation::RiskAverseLocal, Formulation::RiskAgnosticLocal, Formulation::MomentRiskAverse}) {
      auto req = request(f, f == Formulation::RiskAgnosticLocal ? 0.05 : 0.0, 0.0, 2);
      if (is_moment(f)) req.moment = MomentSpec{benchmark::circle_response};
      const auto r = solve(spec, data, req);
      auto warm = req;
      warm.options.warm_starts = {r.theta_star};
      warm.options.n_starts = 0;
      warm.options.suggest_on_infeasible = false;
      const ScenarioSolver solver = [&spec, warm](const ScenarioData& d) { return solve(spec, d, warm); };
      SetComplexityOptions so;
      so.n_probe = 500;
      const auto rep = set_complexity(spec, solver, data, r.theta_star, E, f, so);
      ++analyses;
      if (rep.set_complexity < std::max(rep.n_support, rep.n_violation) ||
          rep.set_complexity > rep.n_support + rep.n_violation)
        ++bound_fail;
      if (is_moment(f) && rep.epsilon_bar != 1.0) ++moment_fail;
      summary += " (" + std::to_string(rep.n_support) + "," + std::to_string(rep.n_violation) + "," +
                 std::to_string(rep.set_complexity) + ")";
    }
  }
  o.pass = bound_fail == 0 && moment_fail == 0;
  o.detail = " " + std::to_string(analyses) + " analyses (n_s,n_v,s_E):" + summary + "; bound failures " +
             std::to_string(bound_fail) + ", moment eps != 1: " + std::to_string(moment_fail);
  return o;
}

// 10: sequential design through the command line entry point
Outcome sequential_design() {
  Outcome o;
  const auto out = std::filesystem::temp_directory_path() / "scendo_acceptance_sd";
  std::filesystem::remove_all(out);
  CliOptions opts;
  opts.config = std::string(SCENDO_SOURCE_DIR) + "/configs/circle_sequential.json";
  opts.output = out.string();
  const auto t0 = Clock::now();
  const int rc = run_command([&] { return cmd_sequential(opts); });
  const double dt = seconds_since(t0);
  std::size_t iterations = 0, n_a = 0;
  double metric = 1.0;
  try {
    const auto trace = read_csv_matrix((out / "sd_trace.csv").string());
    iterations = static_cast<std::size_t>(trace.rows());
    n_a = static_cast<std::size_t>(trace(trace.rows() - 1, 1));
    metric = trace(trace.rows() - 1, 4);
  } catch (const std::exception&) {
    o.pass = false;
  }
  o.pass = o.pass && rc == 0 && iterations <= 12 && n_a <= 100 && dt < 600.0;
  o.detail = " exit " + std::to_string(rc) + ", " + std::to_string(iterations) + " iterations, final n_a = " +
             std::to_string(n_a) + ", a_hi = " + fmt("%.2e", metric) + ", " + fmt("%.1f s", dt);
  return o;
}

}  // namespace

int main() {
  set_log_level(LogLevel::Error);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 epsilon_bar table", epsilon_table},
      {"2 ecdf identities", ecdf_identities},
      {"3 enclosing-circle reduction", enclosing_circle},
      {"4 global/local equivalence at alpha_e=0", remark_one},
      {"5 outlier-count bound", outlier_counts},
      {"6 relaxation monotonicity", relaxation},
      {"7 rmc structure", rmc_structure},
      {"8 containment cross-check", containment},
      {"9 set-complexity bounds", set_complexity_bounds},
      {"10 sequential design", sequential_design},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string(" exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("[%s] %s:%s\n", r.pass ? "PASS" : "FAIL", name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("[N/A] 11 exact published J values and figures: the published datasets are not available; "
              "values above are regime checks\n");
  return failed == 0 ? 0 : 1;
}
