#include <algorithm>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "scendo/ecdf.hpp"
#include "scendo/types.hpp"

using namespace scendo;

namespace {
std::vector<double> random_sorted(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> z(n);
  for (auto& v : z) v = d(rng);
  std::sort(z.begin(), z.end());
  return z;
}
}  // namespace

TEST_CASE("quantile endpoints are exact") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    auto z = random_sorted(rng, 2 + rep % 40);
    const auto F = EmpiricalCdf::build(z);
    CHECK(F.quantile(0.0) == z.front());
    CHECK(F.quantile(1.0) == z.back());
  }
}

TEST_CASE("cdf inverts quantile on (0,1)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    auto z = random_sorted(rng, 2 + rep % 49);
    const auto F = EmpiricalCdf::build(z);
    for (int t = 0; t < 20; ++t) {
      const double a = u(rng);
      if (a == 0.0) continue;
      CHECK(F.cdf(F.quantile(a)) == doctest::Approx(a).epsilon(1e-12));
    }
  }
}

TEST_CASE("quantile and cdf match the scanning oracle") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    auto z = random_sorted(rng, 2 + rep % 30);
    const auto F = EmpiricalCdf::build(z);
    for (double a : {0.0, 0.01, 0.25, 0.5, 0.77, 0.999, 1.0}) {
      CHECK(F.quantile(a) == doctest::Approx(oracle::quantile(z, a)).epsilon(1e-13));
      CHECK(quantile_sorted(z, a) == doctest::Approx(oracle::quantile(z, a)).epsilon(1e-13));
    }
    for (double x : {z.front() - 1.0, z.front(), 0.5 * (z[0] + z[1]), z.back(), z.back() + 1.0})
      CHECK(F.cdf(x) == doctest::Approx(oracle::cdf(z, x)).epsilon(1e-12));
  }
}

TEST_CASE("unsorted helpers agree with the sorted form") {
  std::vector<double> s{4.0, -1.0, 2.5, 0.0, 7.0, 3.0};
  auto sorted = s;
  std::sort(sorted.begin(), sorted.end());
  for (double a : {0.0, 0.2, 0.5, 0.9, 1.0}) CHECK(empirical_quantile(s, a) == doctest::Approx(oracle::quantile(sorted, a)));
  CHECK(empirical_cdf(s, 0.0) == doctest::Approx(oracle::cdf(sorted, 0.0)));
}

TEST_CASE("ties are separated and stay monotone") {
  std::vector<double> z{1.0, 1.0, 1.0, 2.0};
  const auto F = EmpiricalCdf::build(z);
  const auto v = F.values();
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
  CHECK(F.quantile(0.0) == 1.0);
  CHECK(F.quantile(1.0) == 2.0);
}

TEST_CASE("single sample and segment rule") {
  std::vector<double> one{2.0};
  CHECK(empirical_cdf(one, 2.0) == 0.0);
  CHECK(empirical_cdf(one, 2.1) == 1.0);
  CHECK(quantile_sorted(one, 0.3) == 2.0);
  CHECK(quantile_segment(5, 0.0) == 1);
  CHECK(quantile_segment(5, 0.5) == 3);
  CHECK(quantile_segment(5, 1.0) == 4);
}

TEST_CASE("bad input is rejected") {
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(EmpiricalCdf::build(one), InputError);
  std::vector<double> z{0.0, 1.0};
  const auto F = EmpiricalCdf::build(z);
  CHECK_THROWS_AS(F.quantile(1.5), InputError);
  CHECK_THROWS_AS(F.quantile(-0.1), InputError);
}
