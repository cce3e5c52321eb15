#ifndef BICX_ERRORS_HPP
#define BICX_ERRORS_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <utility>

namespace bicx {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All particle weights underflowed to zero likelihood.
struct DegeneratePosteriorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The zero-moment LP has no solution inside the [lb, 1] box. Carries the
// direction in which the sample is half-space confined (Assumption failure
// diagnostic).
struct TiltInfeasibleError : std::runtime_error {
  TiltInfeasibleError(const std::string& msg, Eigen::VectorXd direction,
                      double residual)
      : std::runtime_error(msg),
        violated_direction(std::move(direction)),
        residual_norm(residual) {}
  Eigen::VectorXd violated_direction;
  double residual_norm = 0.0;
};

// ExponentialGrowth asked for more pulls than the reward logs hold.
struct LogExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the pull accountant when config.max_steps is hit.
struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bicx

#endif  // BICX_ERRORS_HPP
