#pragma once

#include <cmath>
#include <random>

namespace scendo {

template <class Rng>
Vector EpistemicSet::sample(Rng& rng) const {
  const auto n = center_.size();
  Vector e(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (norm_ == Norm::WeightedMax) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double half = std::isinf(weights_[i]) ? 0.0 : radius_ / weights_[i];
      e[i] = center_[i] + half * (2.0 * unit(rng) - 1.0);
    }
    return e;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector dir(n);
  for (Eigen::Index i = 0; i < n; ++i) dir[i] = gauss(rng);
  const double norm = dir.norm();
  const double scale = norm > 0.0 ? std::pow(unit(rng), 1.0 / static_cast<double>(n)) / norm : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double half = std::isinf(weights_[i]) ? 0.0 : radius_ / weights_[i];
    e[i] = center_[i] + half * dir[i] * scale;
  }
  return e;
}

}  // namespace scendo
