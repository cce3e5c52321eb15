#ifndef BICX_PRIORS_HPP
#define BICX_PRIORS_HPP

#include <string>
#include <utility>
#include <variant>

#include "bicx/errors.hpp"
#include "bicx/math.hpp"

namespace bicx {

struct GaussianPrior {
  Vector mean;
  Matrix cov;  // SPD within 1e-10
};

struct UniformBallPrior {
  double radius = 1.0;
  Vector center;
};

// Uniform distribution on a convex body K with B_r(0) in K in B_1(0).
// Supported bodies: centered balls and axis-aligned boxes.
struct RRegularBody {
  enum class Kind { ball, box };
  double r = 0.5;
  Kind kind = Kind::ball;
  int dim = 0;               // kind == ball
  double ball_radius = 1.0;  // kind == ball
  Vector halfwidths;         // kind == box
};

struct EmpiricalPrior {
  Matrix points;   // n x d
  Vector weights;  // nonnegative, sums to 1 within 1e-12
};

using PriorSpec =
    std::variant<GaussianPrior, UniformBallPrior, RRegularBody, EmpiricalPrior>;

// Monte-Carlo estimates of the non-degeneracy constants: positivity pair
// (c_d, eps_d), minimum directional variance, and sub-gaussian parameter.
struct AssumptionConstants {
  double c_d = 0.0;
  double eps_d = 0.0;
  double sigma_var = 0.0;
  double k_subg = 0.0;
};

int prior_dim(const PriorSpec& prior);

// Validates structural invariants (SPD covariance, weight normalization,
// body containment); throws PreconditionError on violation.
void validate_prior(const PriorSpec& prior);

// Exact mean of the prior (all supported variants have closed forms).
Vector prior_mean(const PriorSpec& prior);

// n deterministic draws for the given seed, one row per draw.
Matrix sample(const PriorSpec& prior, int n, std::uint64_t seed);

// Rotates the prior so E[l*_i] = 0 for i > 1 and E[l*_1] >= 0. Returns the
// rotated prior and the orthogonal matrix applied. Zero-mean priors get the
// identity.
std::pair<PriorSpec, Matrix> canonicalize(const PriorSpec& prior);

// Estimates Assumption constants from n_samples draws probed along n_dirs
// random directions plus the sample-covariance eigendirections. The (c, eps)
// pair maximizes c * eps over a grid, with eps taken as a 95% Wilson lower
// confidence bound. Empirical priors with fewer than 10 points are refused.
AssumptionConstants estimate_constants(const PriorSpec& prior, int n_dirs,
                                       int n_samples, std::uint64_t seed);

// Newline-delimited text: space-separated coordinates, optional trailing
// weight column (detected when expected_dim is given and columns == dim+1).
EmpiricalPrior load_empirical(const std::string& path, int expected_dim = -1);

}  // namespace bicx

#endif  // BICX_PRIORS_HPP
