#include "scendo/ecdf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scendo/types.hpp"

namespace scendo {

namespace {

double tie_step(double z) { return 1e-9 * std::max(1.0, std::abs(z)); }

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InputError("quantile level must lie in [0, 1], got " + std::to_string(alpha));
}

// Exact grid hits return the support point itself rather than an interpolated value.
bool on_grid(double t, double& nearest) {
  nearest = std::round(t);
  return std::abs(t - nearest) <= 64.0 * 2.220446049250313e-16 * std::max(1.0, t);
}

}  // namespace

EmpiricalCdf EmpiricalCdf::build(std::span<const double> samples) {
  if (samples.size() < 2) throw InputError("an empirical CDF needs at least two samples");
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      throw InputError("non-finite sample at index " + std::to_string(i));
  std::vector<double> v(samples.begin(), samples.end());
  std::stable_sort(v.begin(), v.end());
  std::size_t run = 0;
  double base = v[0];
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] == base) {
      ++run;
      v[i] = base + static_cast<double>(run) * tie_step(base);
    } else {
      run = 0;
      base = v[i];
    }
    if (v[i] <= v[i - 1]) v[i] = v[i - 1] + tie_step(v[i - 1]);
  }
  return EmpiricalCdf(std::move(v));
}

double EmpiricalCdf::cdf(double z) const {
  const std::size_t n = values_.size();
  if (z <= values_.front()) return 0.0;
  if (z > values_.back()) return 1.0;
  // values_[p-1] < z <= values_[p]; 1-based that is z_i < z <= z_{i+1} with i = p.
  const auto p = static_cast<std::size_t>(
      std::lower_bound(values_.begin(), values_.end(), z) - values_.begin());
  const double lo = values_[p - 1];
  const double hi = values_[p];
  return (static_cast<double>(p - 1) + (z - lo) / (hi - lo)) / static_cast<double>(n - 1);
}

double EmpiricalCdf::quantile(double alpha) const { return quantile_sorted(values_, alpha); }

std::size_t quantile_segment(std::size_t n, double alpha) {
  if (n < 2) return 1;
  const double t = alpha * static_cast<double>(n - 1);
  auto i = static_cast<std::size_t>(std::floor(t)) + 1;
  return std::clamp<std::size_t>(i, 1, n - 1);
}

double quantile_sorted(std::span<const double> z, double alpha) {
  check_alpha(alpha);
  const std::size_t n = z.size();
  if (n == 0) throw InputError("quantile of an empty sequence");
  if (n == 1 || alpha == 0.0) return z.front();
  if (alpha == 1.0) return z.back();
  const double t = alpha * static_cast<double>(n - 1);
  double nearest = 0.0;
  if (on_grid(t, nearest)) return z[static_cast<std::size_t>(nearest)];
  const std::size_t i = quantile_segment(n, alpha);
  const double zi = z[i - 1];
  const double zn = z[i];
  return zi + (zn - zi) * (t - static_cast<double>(i) + 1.0);
}

double empirical_quantile(std::span<const double> samples, double alpha) {
  check_alpha(alpha);
  const std::size_t n = samples.size();
  if (n == 0) throw InputError("quantile of an empty sequence");
  if (n == 1) return samples.front();
  if (alpha == 0.0) return *std::min_element(samples.begin(), samples.end());
  if (alpha == 1.0) return *std::max_element(samples.begin(), samples.end());
  std::vector<double> v(samples.begin(), samples.end());
  const double t = alpha * static_cast<double>(n - 1);
  double nearest = 0.0;
  if (on_grid(t, nearest)) {
    const auto k = static_cast<std::ptrdiff_t>(nearest);
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[static_cast<std::size_t>(k)];
  }
  const std::size_t i = quantile_segment(n, alpha);
  const auto k = static_cast<std::ptrdiff_t>(i - 1);
  std::nth_element(v.begin(), v.begin() + k, v.end());
  const double zi = v[i - 1];
  const double zn = *std::min_element(v.begin() + k + 1, v.end());
  return zi + (zn - zi) * (t - static_cast<double>(i) + 1.0);
}

double empirical_cdf(std::span<const double> samples, double z) {
  if (samples.empty()) throw InputError("CDF of an empty sequence");
  if (samples.size() == 1) return z <= samples.front() ? 0.0 : 1.0;
  return EmpiricalCdf::build(samples).cdf(z);
}

}  // namespace scendo
