#ifndef BICX_BANDIT_ENV_HPP
#define BICX_BANDIT_ENV_HPP

#include <cstdint>

#include "bicx/geometry.hpp"
#include "bicx/priors.hpp"
#include "bicx/rng.hpp"

namespace bicx {

// What the algorithm is allowed to see: rewards and the step counter. The
// hidden parameter stays behind Environment, reachable only by evaluation
// code holding the concrete type.
class BanditHandle {
 public:
  virtual ~BanditHandle() = default;
  virtual double pull(const UnitVector& a) = 0;
  virtual long t() const = 0;
  virtual int dim() const = 0;
  virtual double noise_sd() const = 0;
};

class Environment final : public BanditHandle {
 public:
  // hidden_theta ~ prior, reproducible per seed.
  static Environment spawn(const PriorSpec& prior, std::uint64_t seed,
                           double noise_sd = 1.0);

  static Environment with_theta(Vector theta, std::uint64_t seed,
                                double noise_sd = 1.0);

  // <a, theta> + noise_sd * N(0,1); exact inner product when noise_sd = 0.
  // Rejects actions whose norm is off unit by more than 1e-6.
  double pull(const UnitVector& a) override;

  long t() const override { return t_; }
  int dim() const override { return static_cast<int>(theta_.size()); }
  double noise_sd() const override { return noise_sd_; }

  // Evaluation-side accessor; the algorithm path only holds a BanditHandle.
  const Vector& hidden_theta_for_evaluation() const { return theta_; }

 private:
  Environment(Vector theta, std::uint64_t seed, double noise_sd);
  Vector theta_;
  long t_ = 0;
  double noise_sd_ = 1.0;
  RngStream rng_;
};

}  // namespace bicx

#endif  // BICX_BANDIT_ENV_HPP
