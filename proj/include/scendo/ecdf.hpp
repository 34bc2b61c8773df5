#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scendo {

/// Continuous piecewise-linear approximation of a CDF built from samples, and its inverse.
///
/// The support points z_1 < ... < z_n are strictly increasing. Duplicate samples are separated
/// at construction: the j-th repeat of a value z (in stable-sort order) is shifted up by
/// j * 1e-9 * max(1, |z|), cascading if the shift reaches the next distinct value.
class EmpiricalCdf {
 public:
  /// Throws InputError for fewer than two samples or non-finite entries.
  static EmpiricalCdf build(std::span<const double> samples);

  /// 0 for z <= z_1, 1 for z > z_n, linear in between with knots at (z_i, (i-1)/(n-1)).
  double cdf(double z) const;
  /// Inverse of cdf(); z_1 at alpha = 0 and z_n at alpha = 1. Throws for alpha outside [0,1].
  double quantile(double alpha) const;

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  explicit EmpiricalCdf(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

/// 1-based segment index i of the quantile rule for n support points: floor(alpha (n-1)) + 1
/// clamped to [1, n-1].
std::size_t quantile_segment(std::size_t n, double alpha);

/// Quantile of an ascending, possibly non-strict sequence (n >= 1). Ties need no perturbation
/// here: the interpolation is continuous in the support points, so this is the limit of the
/// tie rule as the perturbation vanishes. A single point is its own quantile.
double quantile_sorted(std::span<const double> sorted, double alpha);

/// Quantile of unsorted samples in O(n) via selection.
double empirical_quantile(std::span<const double> samples, double alpha);

/// CDF of unsorted samples at z. Applies the tie rule; a single sample z_1 gives 0 for z <= z_1
/// and 1 otherwise.
double empirical_cdf(std::span<const double> samples, double z);

}  // namespace scendo
