#ifndef BICX_POSTERIOR_HPP
#define BICX_POSTERIOR_HPP

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "bicx/geometry.hpp"
#include "bicx/math.hpp"
#include "bicx/tilt.hpp"

namespace bicx {

// Weighted point set over R^d representing the belief about the hidden
// parameter. Weights live in log space; normalization happens at read time.
struct ParticleCloud {
  Matrix points;       // n x d
  Vector log_weights;  // length n, finite
  std::vector<std::uint64_t> seed_lineage;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

ParticleCloud cloud_from_points(Matrix points, std::uint64_t seed);
ParticleCloud cloud_from_weighted(Matrix points, const Vector& weights,
                                  std::uint64_t seed);

// --- Signal records -------------------------------------------------------

// Observation value = <direction, l> + N(0, noise_var).
struct GaussianObs {
  Vector direction;
  double noise_var = 1.0;
  double value = 0.0;
};

// Event sign(<coef, l> + N(0, noise_sd^2)) = sign. noise_sd = 0 is the
// zero-noise debug limit where the likelihood is an indicator.
struct SignThreshold {
  Vector coef;
  double noise_sd = 1.0;
  int sign = +1;
};

// Event sign(R) = sign for R = reward(action) with probability select_prob
// and a fresh standard normal otherwise.
struct MixtureSign {
  Vector action;
  double select_prob = 0.5;
  int sign = +1;
  double noise_sd = 1.0;
};

// Outcome of the Bernoulli(f(z(y_hat))) coin. Likelihood per particle is
// E_noise[f(z(x* + noise))] (its complement when observed = false), with the
// conditional-mean map z reconstructed from z_context.
struct TiltEvent {
  std::shared_ptr<const TiltFunction> tilt;
  std::shared_ptr<const ParticleCloud> z_context;
  Matrix basis;       // d x l, orthonormal columns
  Vector noise_vars;  // per-coordinate, length l
  bool observed = true;
  int inner_n = 8;
  std::uint64_t seed = 0;
};

using SignalRecord = std::variant<GaussianObs, SignThreshold, MixtureSign, TiltEvent>;

struct PosteriorMean {
  Vector mean;
  double norm = 0.0;
  double credible_radius = 0.0;  // l2-aggregated MC standard error of the mean
};

// --- Operations ------------------------------------------------------------

// Adds each particle's log-likelihood of the signal to its log weight.
// Points are untouched. Throws DegeneratePosteriorError when every
// likelihood underflows to zero.
ParticleCloud reweight(const ParticleCloud& cloud, const SignalRecord& signal);

PosteriorMean posterior_mean(const ParticleCloud& cloud);

// Normalized posterior mean after conditioning on `signals`, or `fallback`
// when the mean norm is at most zero_tol.
UnitVector exploit(const ParticleCloud& cloud,
                   const std::vector<SignalRecord>& signals,
                   const UnitVector& fallback, double zero_tol);

// E[(<l,w_1>,...,<l,w_l>) | y_hat] under per-coordinate Gaussian observation
// noise, computed by reweighting a copy of the cloud on the projected
// coordinates.
Vector z_map(const Vector& y_hat, const ParticleCloud& cloud, const Matrix& basis,
             const Vector& noise_vars);

// Per-particle probability of the tilt event: mean over inner_n common noise
// draws of f(z(x*_i + noise)). z is reconstructed from z_context when given,
// else from `cloud` itself. Deterministic per seed.
Vector tilt_likelihood(const ParticleCloud& cloud, const TiltFunction& tilt,
                       const Matrix& basis, const Vector& noise_vars, int inner_n,
                       std::uint64_t seed,
                       const ParticleCloud* z_context = nullptr);

// 1 / sum of squared normalized weights, in [1, n].
double effective_sample_size(const ParticleCloud& cloud);

// Systematic resampling to equal weights. Available for ESS collapse; the
// driver leaves it disabled by default.
ParticleCloud resample_systematic(const ParticleCloud& cloud, std::uint64_t seed);

}  // namespace bicx

#endif  // BICX_POSTERIOR_HPP
