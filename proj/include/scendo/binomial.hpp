#pragma once

#include <cstddef>

namespace scendo {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  bool contains(const Interval& other) const { return lower <= other.lower && other.upper <= upper; }
};

/// Exact Clopper-Pearson interval for a binomial proportion with `successes` out of `n`, at
/// confidence `sigma`. Two-sided (tails of (1 - sigma)/2) when 0 < successes < n. At the
/// boundaries the open side gets the full 1 - sigma tail, so zero successes give
/// [0, 1 - (1 - sigma)^(1/n)] and n successes give [(1 - sigma)^(1/n), 1].
Interval clopper_pearson(std::size_t successes, std::size_t n, double sigma);

/// 1 - (1 - sigma)^(1/n): upper bound on a failure probability after n failure-free draws.
double zero_failure_bound(std::size_t n, double sigma);

}  // namespace scendo
