#include <cmath>

#include "doctest.h"
#include "scendo/nlp.hpp"

using namespace scendo;

namespace {
Box box2(double lo, double hi) { return {Vector::Constant(2, lo), Vector::Constant(2, hi)}; }
}  // namespace

TEST_CASE("finite-difference gradient of a quadratic") {
  auto f = [](const Vector& x) { return x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1]; };
  Vector x(2);
  x << 1.5, -0.5;
  const Vector g = fd_gradient(f, x, 1e-6);
  CHECK(g[0] == doctest::Approx(2.0 * 1.5 + 3.0 * -0.5).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(3.0 * 1.5 - 2.0).epsilon(1e-6));
  auto bad = [](const Vector& y) { return y[1] > 0.0 ? std::nan("") : 0.0; };
  Vector z = Vector::Zero(2);
  CHECK_THROWS_AS(fd_gradient(bad, z, 1e-6), NumericalError);
}

TEST_CASE("latin hypercube puts one point in every stratum") {
  const Box b = box2(-1.0, 3.0);
  const std::size_t n = 16;
  const auto pts = latin_hypercube(b, n, 9);
  REQUIRE(pts.size() == n);
  for (int d = 0; d < 2; ++d) {
    std::vector<int> hits(n, 0);
    for (const auto& p : pts) {
      CHECK(b.contains(p));
      hits[std::min<std::size_t>(n - 1, static_cast<std::size_t>((p[d] + 1.0) / 4.0 * n))]++;
    }
    for (int h : hits) CHECK(h == 1);
  }
  CHECK(latin_hypercube(b, n, 9)[3] == pts[3]);
}

TEST_CASE("projection onto a half-plane") {
  // min |x - (2,2)|^2 s.t. x0 + x1 <= 1: optimum (0.5, 0.5), value 4.5
  auto p = NlpProblem::from_functions(
      2, [](const Vector& x) { return (x - Vector::Constant(2, 2.0)).squaredNorm(); },
      {[](const Vector& x) { return x[0] + x[1] - 1.0; }}, box2(-5.0, 5.0));
  NlpOptions o;
  o.n_starts = 3;
  const auto r = minimize(p, o);
  CHECK(r.status == SolverStatus::Converged);
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(r.objective == doctest::Approx(4.5).epsilon(1e-4));
  CHECK(r.max_violation <= o.tol_con);
}

TEST_CASE("bounds are respected") {
  auto p = NlpProblem::from_functions(2, [](const Vector& x) { return -x.sum(); }, {}, box2(0.0, 1.0));
  const auto r = minimize(p, NlpOptions{});
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("contradictory constraints report infeasible") {
  auto p = NlpProblem::from_functions(
      2, [](const Vector& x) { return x.squaredNorm(); },
      {[](const Vector& x) { return x[0] - 1.0; }, [](const Vector& x) { return 2.0 - x[0]; }}, box2(-5.0, 5.0));
  NlpOptions o;
  o.n_starts = 2;
  const auto r = minimize(p, o);
  CHECK(r.status == SolverStatus::Infeasible);
  CHECK(r.max_violation == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("deterministic for fixed options") {
  auto p = NlpProblem::from_functions(
      2, [](const Vector& x) { return std::sin(3.0 * x[0]) + x[1] * x[1]; },
      {[](const Vector& x) { return x[0] * x[0] + x[1] * x[1] - 4.0; }}, box2(-3.0, 3.0));
  NlpOptions o;
  o.n_starts = 4;
  const auto a = minimize(p, o), b = minimize(p, o);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
}
