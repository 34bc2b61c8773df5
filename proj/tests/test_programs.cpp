#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "scendo/benchmark.hpp"
#include "scendo/programs.hpp"

using namespace scendo;

namespace {

ProgramRequest request(Formulation f, double alpha_a, double alpha_e, std::size_t starts = 2) {
  ProgramRequest req;
  req.formulation = f;
  req.alphas = AlphaConfig::uniform(1, alpha_a, alpha_e, 1e3);
  req.options.n_starts = starts;
  return req;
}

ScenarioData zero_epistemic(std::size_t n_a, std::uint64_t seed) {
  auto data = benchmark::generate_dataset(n_a, 1, seed);
  data.epistemic.setZero();
  return data;
}

// r = s * theta + 1 with s = a_0 in {+1, -1}: s = +1 needs theta <= -1, s = -1 needs theta >= 1.
ProblemSpec contradictory() {
  ProblemSpec spec;
  spec.name = "contradictory";
  spec.objective = [](std::span<const double> t) { return t[0] * t[0]; };
  spec.requirements = {[](std::span<const double> t, std::span<const double> a, std::span<const double>) {
    return a[0] * t[0] + 1.0;
  }};
  spec.design_bounds = Box(Vector::Constant(1, -5.0), Vector::Constant(1, 5.0));
  spec.aleatory_dim = 1;
  spec.epistemic_dim = 1;
  return spec;
}

ScenarioData contradictory_data(std::size_t n_plus, std::size_t n_minus) {
  ScenarioData d;
  d.aleatory.resize(static_cast<Eigen::Index>(n_plus + n_minus), 1);
  for (std::size_t i = 0; i < n_plus + n_minus; ++i) d.aleatory(static_cast<Eigen::Index>(i), 0) = i < n_plus ? 1.0 : -1.0;
  d.epistemic = ScenarioMatrix::Zero(1, 1);
  return d;
}

}  // namespace

TEST_CASE("single epistemic point reduces to the minimal enclosing circle") {
  const auto spec = benchmark::circle_problem();
  const auto data = zero_epistemic(15, 4);
  std::vector<std::array<double, 2>> pts;
  for (Eigen::Index i = 0; i < data.aleatory.rows(); ++i) pts.push_back({data.aleatory(i, 0), data.aleatory(i, 1)});
  const auto mec = oracle::welzl(pts);
  const double area = std::numbers::pi * mec.r * mec.r;
  for (auto f : {Formulation::RiskAverseLocal, Formulation::RiskAgnosticLocal, Formulation::RiskAverseGlobal,
                 Formulation::RiskAgnosticGlobal}) {
    CAPTURE(to_string(f));
    const auto r = solve(spec, data, request(f, 0.0, 0.0));
    CHECK(r.status == SolverStatus::Converged);
    CHECK(r.objective == doctest::Approx(area).epsilon(1e-3));
    CHECK(r.theta_star[0] == doctest::Approx(mec.x).epsilon(1e-2));
    CHECK(r.theta_star[1] == doctest::Approx(mec.y).epsilon(1e-2));
  }
}

TEST_CASE("global and local risk-averse programs agree without epistemic outliers") {
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(15, 8, 21);
  const auto g = solve(spec, data, request(Formulation::RiskAverseGlobal, 0.0, 0.0));
  const auto l = solve(spec, data, request(Formulation::RiskAverseLocal, 0.0, 0.0));
  CHECK(g.objective == doctest::Approx(l.objective).epsilon(1e-4));
}

TEST_CASE("outlier sets respect the alpha budgets") {
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(20, 10, 8);
  // With the interpolated quantile at most ceil((n_e - 1) alpha_e) values can exceed it; this
  // equals floor(n_e alpha_e) when alpha_e is a multiple of 1 / n_e.
  for (double alpha_e : {0.2, 0.25}) {
    const std::size_t cap = static_cast<std::size_t>(std::ceil(9 * alpha_e - 1e-12));
    if (alpha_e == 0.2) CHECK(cap == 2);
    for (auto f : {Formulation::RiskAverseLocal, Formulation::RiskAgnosticLocal}) {
      CAPTURE(to_string(f));
      CAPTURE(alpha_e);
      auto req = request(f, 0.1, alpha_e);
      const auto r = solve(spec, data, req);
      REQUIRE(r.epistemic_outliers.size() == data.n_a());
      for (const auto& o : r.epistemic_outliers) CHECK(o.size() <= cap);

      // aleatory outliers recomputed from the pseudo-distribution quantiles
      std::size_t n_out = 0;
      for (std::size_t i = 0; i < data.n_a(); ++i) {
        auto row = pseudo_distribution(spec, r.theta_star, 0, i, data).values;
        std::sort(row.begin(), row.end());
        if (oracle::quantile(row, 1.0 - alpha_e) > req.options.report_tol) ++n_out;
      }
      CHECK(r.aleatory_outliers.size() == n_out);
    }
  }
}

TEST_CASE("pseudo-distribution is the requirement row") {
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(4, 6, 2);
  Vector theta(3);
  theta << 0.2, -0.1, 2.0;
  const auto pd = pseudo_distribution(spec, theta, 0, 3, data);
  REQUIRE(pd.values.size() == 6);
  for (Eigen::Index j = 0; j < 6; ++j)
    CHECK(pd.values[static_cast<std::size_t>(j)] ==
          benchmark::circle_requirement(as_span(theta), row_span(data.aleatory, 3), row_span(data.epistemic, j)));
}

TEST_CASE("contradictory scenarios are infeasible and get a workable alpha") {
  const auto spec = contradictory();
  const auto data = contradictory_data(3, 7);
  ProgramRequest req;
  req.formulation = Formulation::RiskAgnosticLocal;
  req.alphas = AlphaConfig::uniform(1, 0.0, 0.0);
  req.options.n_starts = 3;
  const auto r = solve(spec, data, req);
  CHECK(r.status == SolverStatus::Infeasible);
  REQUIRE(r.suggested_alpha_a.has_value());
  const double a = (*r.suggested_alpha_a)[0];
  CHECK(a > 0.0);
  CHECK(a <= 1.0);

  req.alphas.alpha_a[0] = std::min(1.0, a + 1e-6);
  const auto again = solve(spec, data, req);
  CHECK(again.status != SolverStatus::Infeasible);
}

TEST_CASE("risk-averse programs stay feasible on contradictory data") {
  const auto spec = contradictory();
  const auto data = contradictory_data(3, 7);
  ProgramRequest req;
  req.formulation = Formulation::RiskAverseLocal;
  req.alphas = AlphaConfig::uniform(1, 0.0, 0.0, 10.0);
  const auto r = solve(spec, data, req);
  CHECK(r.status != SolverStatus::Infeasible);
  REQUIRE(r.xi_star.has_value());
  // the minority (theta <= -1 side) is cheaper to violate: theta ends near +1
  CHECK(r.theta_star[0] == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("penalty suggestion counts violated scenarios") {
  const auto spec = contradictory();
  const auto data = contradictory_data(3, 7);
  ProgramOptions o;
  o.n_starts = 3;
  const Vector s = suggest_alpha_by_penalty(spec, data, AlphaConfig::uniform(1, 0.0, 0.0), o);
  CHECK(s[0] == doctest::Approx(0.3));
}

TEST_CASE("moment programs report lambda") {
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(12, 6, 5);
  for (auto f : {Formulation::MomentRiskAverse, Formulation::MomentRiskAgnostic}) {
    CAPTURE(to_string(f));
    auto req = request(f, 0.0, 0.0);
    req.moment = MomentSpec{benchmark::circle_response};
    const auto r = solve(spec, data, req);
    REQUIRE(r.lambda_star.has_value());
    CHECK(std::isfinite(*r.lambda_star));
  }
}

TEST_CASE("request validation") {
  const auto spec = benchmark::circle_problem();
  auto req = request(Formulation::MomentRiskAverse, 0.0, 0.0);
  CHECK_THROWS_AS(req.validate(spec), InputError);
  auto bad = request(Formulation::RiskAverseLocal, 0.0, 0.0);
  bad.alphas.alpha_a = Vector::Zero(2);
  CHECK_THROWS_AS(bad.validate(spec), InputError);
}
