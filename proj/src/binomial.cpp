#include "scendo/binomial.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "scendo/types.hpp"

namespace scendo {

Interval clopper_pearson(std::size_t successes, std::size_t n, double sigma) {
  if (n == 0) throw InputError("clopper_pearson: n must be positive");
  if (successes > n) throw InputError("clopper_pearson: successes exceed n");
  if (!(sigma > 0.0 && sigma < 1.0)) throw InputError("clopper_pearson: sigma must lie in (0, 1)");
  const double x = static_cast<double>(successes), nn = static_cast<double>(n);
  if (successes == 0) return {0.0, zero_failure_bound(n, sigma)};
  if (successes == n) return {1.0 - zero_failure_bound(n, sigma), 1.0};
  const double tail = 0.5 * (1.0 - sigma);
  return {boost::math::ibeta_inv(x, nn - x + 1.0, tail),
          boost::math::ibeta_inv(x + 1.0, nn - x, 1.0 - tail)};
}

double zero_failure_bound(std::size_t n, double sigma) {
  if (n == 0) throw InputError("zero_failure_bound: n must be positive");
  // -expm1(log1p(-sigma) / n) keeps precision for large n
  return -std::expm1(std::log1p(-sigma) / static_cast<double>(n));
}

}  // namespace scendo
