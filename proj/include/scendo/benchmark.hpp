#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scendo/types.hpp"

namespace scendo::benchmark {

// Data-enclosing circle. Design theta = (c_x, c_y, mu); epistemic e = (e1, e2, e3) in
// [0, 1/5] x [0, 2 pi] x [0, 1/5]; aleatory a in R^2. The implemented circle has center
// c + mu e1 u and radius mu (1 + mu e1 e3 c.u), u = (cos e2, sin e2).

double circle_requirement(std::span<const double> theta, std::span<const double> a,
                          std::span<const double> e);
/// mu_tilde^2 + ||a - c_tilde||, a tightness measure of the enclosure.
double circle_response(std::span<const double> theta, std::span<const double> a,
                       std::span<const double> e);
/// pi mu^2
double circle_area(std::span<const double> theta);

Box circle_design_bounds(double center_limit = 10.0, double radius_limit = 15.0);
ProblemSpec circle_problem(const Box& design_bounds = circle_design_bounds());

Vector epistemic_lower();
Vector epistemic_upper();
EpistemicSet epistemic_set();

/// Two-component isotropic Gaussian mixture for the aleatory parameter.
struct GaussianMixture {
  struct Component {
    double weight;
    Vector mean;
    double variance;  // covariance = variance * I
  };
  std::vector<Component> components;

  /// 0.8 N((0,0), I) + 0.2 N((2.5,1.5), 0.3 I).
  static GaussianMixture standard();
  double density(std::span<const double> a) const;
  Vector mean() const;
  ScenarioMatrix sample(std::size_t n, std::uint64_t seed) const;
};

ScenarioMatrix sample_epistemic(std::size_t n, std::uint64_t seed);

/// Training sets (and testing sets when n_a_test, n_e_test > 0), deterministic in seed. Every
/// set draws from its own stream so growing one set leaves the others unchanged.
ScenarioData generate_dataset(std::size_t n_a, std::size_t n_e, std::uint64_t seed,
                              const GaussianMixture& density = GaussianMixture::standard(),
                              std::size_t n_a_test = 0, std::size_t n_e_test = 0);

}  // namespace scendo::benchmark
