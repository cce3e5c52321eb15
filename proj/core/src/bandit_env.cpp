#include "bicx/bandit_env.hpp"

#include <cmath>

#include "bicx/errors.hpp"

namespace bicx {

Environment::Environment(Vector theta, std::uint64_t seed, double noise_sd)
    : theta_(std::move(theta)), noise_sd_(noise_sd), rng_(seed, "env-rewards") {
  if (noise_sd_ < 0.0) throw PreconditionError("environment: noise_sd < 0");
}

Environment Environment::spawn(const PriorSpec& prior, std::uint64_t seed,
                               double noise_sd) {
  const Matrix draw = sample(prior, 1, splitmix64(seed ^ fnv1a("env-theta")));
  return Environment(draw.row(0).transpose(), seed, noise_sd);
}

Environment Environment::with_theta(Vector theta, std::uint64_t seed,
                                    double noise_sd) {
  return Environment(std::move(theta), seed, noise_sd);
}

double Environment::pull(const UnitVector& a) {
  if (a.dim() != theta_.size()) throw DimensionError("pull: action dimension mismatch");
  if (std::abs(a.coords().norm() - 1.0) > 1e-6) {
    throw PreconditionError("pull: non-unit action breaks the exploration accounting");
  }
  ++t_;
  const double mean = a.dot(theta_);
  return noise_sd_ > 0.0 ? mean + noise_sd_ * rng_.normal() : mean;
}

}  // namespace bicx
