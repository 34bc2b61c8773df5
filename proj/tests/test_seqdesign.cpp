#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "scendo/benchmark.hpp"
#include "scendo/seqdesign.hpp"

using namespace scendo;

namespace {

struct Pool {
  ScenarioMatrix points;
  std::vector<std::vector<bool>> violates;
  std::vector<double> density;
};

Pool make_pool(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Pool p;
  p.points.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = d(rng), y = d(rng);
    p.points.row(static_cast<Eigen::Index>(i)) << x, y;
    p.violates.push_back({x * x + y * y > 1.5, x > 0.8});
    p.density.push_back(std::exp(-0.5 * (x * x + y * y)));
  }
  return p;
}

double brute_value(const Pool& p, const IndexSet& s, double lambda, double ridge) {
  double like = 0.0;
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  for (auto i : s) {
    if (p.violates[i][0] || p.violates[i][1]) like += p.density[i];
    mu += p.points.row(static_cast<Eigen::Index>(i)).transpose();
  }
  mu /= static_cast<double>(s.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity() * ridge;
  for (auto i : s) {
    const Eigen::Vector2d c = p.points.row(static_cast<Eigen::Index>(i)).transpose() - mu;
    cov += c * c.transpose() / static_cast<double>(s.size());
  }
  return like + lambda * std::log(cov.determinant());
}

std::vector<std::size_t> counts(const Pool& p, const IndexSet& s) {
  std::vector<std::size_t> c(2, 0);
  for (auto i : s)
    for (int k = 0; k < 2; ++k) c[static_cast<std::size_t>(k)] += p.violates[i][static_cast<std::size_t>(k)];
  return c;
}

}  // namespace

TEST_CASE("budgets scale the violation counts") {
  std::vector<std::vector<bool>> v{{true, false}, {false, false}, {true, true}, {false, false}, {true, false}};
  const auto b = default_budgets(v, 10);
  CHECK(b == std::vector<std::size_t>{6, 2});
  CHECK(default_budgets(v, 3) == std::vector<std::size_t>{2, 1});
}

TEST_CASE("selection value matches a direct computation") {
  const auto p = make_pool(30, 4);
  const IndexSet s{0, 3, 5, 8, 13, 21};
  for (double lambda : {0.0, 0.5, 10.0})
    CHECK(selection_value(p.points, p.violates, p.density, lambda, 1e-6, s) ==
          doctest::Approx(brute_value(p, s, lambda, 1e-6)).epsilon(1e-10));
}

TEST_CASE("pure likelihood selection is optimal") {
  const auto p = make_pool(12, 9);
  const std::size_t target = 5;
  const std::vector<std::size_t> budgets{2, 1};
  const auto sel = select_training_aleatory(p.points, p.violates, p.density, target, budgets, 0.0);
  REQUIRE(sel.indices.size() == target);
  CHECK(counts(p, sel.indices) == budgets);

  double best = -1.0;
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != target) continue;
    IndexSet s;
    for (std::size_t i = 0; i < 12; ++i)
      if (mask & (1u << i)) s.push_back(i);
    if (counts(p, s) != budgets) continue;
    best = std::max(best, brute_value(p, s, 0.0, 1e-6));
  }
  CHECK(sel.value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("diverse selection meets budgets and is swap-optimal") {
  const auto p = make_pool(40, 2);
  const std::vector<std::size_t> budgets{4, 2};
  const double lambda = 1.0;
  const auto sel = select_training_aleatory(p.points, p.violates, p.density, 12, budgets, lambda);
  REQUIRE(sel.indices.size() == 12);
  CHECK(counts(p, sel.indices) == budgets);
  for (auto s : sel.budget_slack) CHECK(s == 0);
  auto sorted = sel.indices;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

  // no exchange with an unselected scenario of the same violation pattern improves the value
  const double ridge = std::max(1e-12, 1e-6 * (p.points.rowwise() - p.points.colwise().mean()).squaredNorm() / 80.0);
  const double v0 = selection_value(p.points, p.violates, p.density, lambda, ridge, sel.indices);
  CHECK(sel.value == doctest::Approx(v0).epsilon(1e-9));
  for (std::size_t a = 0; a < sel.indices.size(); ++a)
    for (std::size_t j = 0; j < 40; ++j) {
      if (std::find(sorted.begin(), sorted.end(), j) != sorted.end()) continue;
      if (p.violates[j] != p.violates[sel.indices[a]]) continue;
      auto s = sel.indices;
      s[a] = j;
      CHECK(selection_value(p.points, p.violates, p.density, lambda, ridge, s) <= v0 + 1e-9 * std::abs(v0));
    }
}

TEST_CASE("budgets beyond the data are relaxed") {
  const auto p = make_pool(20, 3);
  std::size_t avail = 0;
  for (const auto& v : p.violates) avail += v[1];
  const auto sel = select_training_aleatory(p.points, p.violates, p.density, 10, {0, avail + 3}, 0.0);
  CHECK(sel.indices.size() == 10);
  CHECK(sel.budget_slack[1] >= 3);
}

TEST_CASE("epistemic selection takes the largest worst-case columns") {
  Eigen::MatrixXd worst(3, 5);
  worst << 0.1, 0.9, -1.0, 0.3, 0.0,  //
      5.0, -2.0, 0.2, 0.1, 0.4,       //
      0.0, 0.0, 0.0, 0.0, 0.0;
  CHECK(select_training_epistemic(worst, {0, 2}, 2) == IndexSet{1, 3});
  CHECK(select_training_epistemic(worst, {1}, 3) == IndexSet{0, 2, 4});
  CHECK_THROWS_AS(select_training_epistemic(worst, {}, 2), InputError);
}

TEST_CASE("one iteration on a failing baseline leaves the spec unmet") {
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(2, 2, 6, benchmark::GaussianMixture::standard(), 1500, 30);
  Vector baseline(3);
  baseline << 0.0, 0.0, 1.0;  // far too small
  SdConfig cfg;
  cfg.max_iter = 1;
  cfg.rmc = RmcConfig::uniform(1, 0.0, 0.0, 0.95, 0.01);
  cfg.alphas = AlphaConfig::uniform(1, 0.0, 0.0);
  cfg.n_e = 20;
  cfg.program.n_starts = 1;
  const auto r = run_sd(spec, *data.testing_aleatory, *data.testing_epistemic, baseline, cfg);
  CHECK_FALSE(r.spec_met);
  CHECK(r.trace.size() == 1);
  CHECK(r.trace[0].violated == IndexSet{0});
  CHECK(r.trace[0].metric[0] > 1e-3);
}

TEST_CASE("a covering baseline meets the spec at once") {
  const auto spec = benchmark::circle_problem();
  const auto data = benchmark::generate_dataset(2, 2, 6, benchmark::GaussianMixture::standard(), 1500, 30);
  Vector baseline(3);
  baseline << 0.5, 0.3, 9.0;
  SdConfig cfg;
  cfg.rmc = RmcConfig::uniform(1, 0.0, 0.0, 0.95, 0.01);
  cfg.alphas = AlphaConfig::uniform(1, 0.0, 0.0);
  const auto r = run_sd(spec, *data.testing_aleatory, *data.testing_epistemic, baseline, cfg);
  CHECK(r.spec_met);
  CHECK(r.trace.size() == 1);
  CHECK(r.theta == baseline);
}
