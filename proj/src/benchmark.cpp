#include "scendo/benchmark.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace scendo::benchmark {

namespace {

struct Perturbed {
  double cx, cy, radius;
};

Perturbed perturb(std::span<const double> theta, std::span<const double> e) {
  const double ux = std::cos(e[1]);
  const double uy = std::sin(e[1]);
  const double mu = theta[2];
  const double cu = theta[0] * ux + theta[1] * uy;
  return {theta[0] + mu * e[0] * ux, theta[1] + mu * e[0] * uy, mu * (1.0 + mu * e[0] * e[2] * cu)};
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

}  // namespace

double circle_requirement(std::span<const double> theta, std::span<const double> a,
                          std::span<const double> e) {
  const Perturbed p = perturb(theta, e);
  const double dx = p.cx - a[0];
  const double dy = p.cy - a[1];
  return dx * dx + dy * dy - p.radius * p.radius;
}

double circle_response(std::span<const double> theta, std::span<const double> a,
                       std::span<const double> e) {
  const Perturbed p = perturb(theta, e);
  return p.radius * p.radius + std::hypot(a[0] - p.cx, a[1] - p.cy);
}

double circle_area(std::span<const double> theta) { return std::numbers::pi * theta[2] * theta[2]; }

Box circle_design_bounds(double center_limit, double radius_limit) {
  Vector lo(3), hi(3);
  lo << -center_limit, -center_limit, 0.0;
  hi << center_limit, center_limit, radius_limit;
  return {lo, hi};
}

ProblemSpec circle_problem(const Box& design_bounds) {
  ProblemSpec spec;
  spec.name = "circle";
  spec.objective = circle_area;
  spec.requirements = {circle_requirement};
  spec.design_bounds = design_bounds;
  spec.aleatory_dim = 2;
  spec.epistemic_dim = 3;
  return spec;
}

Vector epistemic_lower() { return Vector::Zero(3); }

Vector epistemic_upper() {
  Vector u(3);
  u << 0.2, 2.0 * std::numbers::pi, 0.2;
  return u;
}

EpistemicSet epistemic_set() { return EpistemicSet::from_box(epistemic_lower(), epistemic_upper()); }

GaussianMixture GaussianMixture::standard() {
  GaussianMixture m;
  m.components.push_back({0.8, Vector::Zero(2), 1.0});
  Vector far(2);
  far << 2.5, 1.5;
  m.components.push_back({0.2, far, 0.3});
  return m;
}

double GaussianMixture::density(std::span<const double> a) const {
  double f = 0.0;
  for (const auto& c : components) {
    const double dx = a[0] - c.mean[0];
    const double dy = a[1] - c.mean[1];
    f += c.weight * std::exp(-(dx * dx + dy * dy) / (2.0 * c.variance)) /
         (2.0 * std::numbers::pi * c.variance);
  }
  return f;
}

Vector GaussianMixture::mean() const {
  Vector m = Vector::Zero(2);
  for (const auto& c : components) m += c.weight * c.mean;
  return m;
}

ScenarioMatrix GaussianMixture::sample(std::size_t n, std::uint64_t seed) const {
  auto rng = stream(seed, 1);
  std::vector<double> w;
  for (const auto& c : components) w.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  ScenarioMatrix out(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto& c = components[pick(rng)];
    const double sd = std::sqrt(c.variance);
    out(i, 0) = c.mean[0] + sd * gauss(rng);
    out(i, 1) = c.mean[1] + sd * gauss(rng);
  }
  return out;
}

ScenarioMatrix sample_epistemic(std::size_t n, std::uint64_t seed) {
  auto rng = stream(seed, 2);
  const EpistemicSet set = epistemic_set();
  ScenarioMatrix out(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = set.sample(rng).transpose();
  return out;
}

ScenarioData generate_dataset(std::size_t n_a, std::size_t n_e, std::uint64_t seed,
                              const GaussianMixture& density, std::size_t n_a_test,
                              std::size_t n_e_test) {
  ScenarioData data;
  data.aleatory = density.sample(n_a, seed);
  data.epistemic = sample_epistemic(n_e, seed);
  // Testing streams are offset so they never coincide with the training draws.
  if (n_a_test > 0) data.testing_aleatory = density.sample(n_a_test, seed ^ 0x9e3779b97f4a7c15ULL);
  if (n_e_test > 0) data.testing_epistemic = sample_epistemic(n_e_test, seed ^ 0x9e3779b97f4a7c15ULL);
  return data;
}

}  // namespace scendo::benchmark
