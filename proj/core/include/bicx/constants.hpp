#ifndef BICX_CONSTANTS_HPP
#define BICX_CONSTANTS_HPP

#include <map>
#include <string>

#include "bicx/priors.hpp"

namespace bicx {

// Every constant the exploration algorithm consumes, in one place.
//
// theoretical mode derives them from the Assumption constants:
//   c_l5      = sigma_var / sqrt(8 pi)
//   c_l7      = (c_d^2 / 32) / log(4 / eps_d)
//   delta_l6  = min(1, 1 / (2 K sqrt(log 2)))
//   p_select  = eps_d c_d / (16 (K sqrt(pi) + 1))
//   eps_tilt  = eps_d c_d / 4
//   cap       = K sqrt(pi) + 1
//   lambda    = min(1, min(delta_l5, delta_l6, 1/c_l6)^2 (sigma_var/sqrt(8pi))^2
//                      / (4 d (K sqrt(pi)+1)^2))
//   kappa     = max(n_y, ceil(4 d (K sqrt(pi)+1)^2 (1 + 1/lambda) / c_l5^2))
// delta_l5, c_l6 and c_l4 have no numeric values in theory; theoretical mode
// demands explicit overrides for them.
//
// scaled mode reads each knob from the overrides map directly (with
// documented defaults), preserving the algorithm structure at desk scale.
struct ConstantsRegistry {
  enum class Mode { theoretical, scaled };

  Mode mode = Mode::scaled;
  double lambda = 0.05;
  long kappa = 200;
  double p_select = 0.05;
  double c_l5 = 1.0;
  double c_l7 = 0.1;
  double delta_l5 = 0.1;
  double c_l6 = 10.0;
  double delta_l6 = 1.0;
  double c_l4 = 0.01;
  double eps_tilt = 0.2;
  double mean_norm_cap = 1.0;
  long n_y = 200;        // log entries per y-hat estimate: ceil(1/(lambda c_l7))
  long l_override = 0;   // scaled-mode fixed pull count per growth call (0 = formula)
  std::map<std::string, double> overrides;

  static ConstantsRegistry theoretical(const AssumptionConstants& ac, int d,
                                       const std::map<std::string, double>& overrides);
  static ConstantsRegistry scaled(int d, const std::map<std::string, double>& overrides);

  double tilt_lower_bound() const;
  void validate(int d) const;
};

// The lambda formula alone; scaled mode returns the override.
double compute_lambda(const AssumptionConstants& ac, int d,
                      const ConstantsRegistry& registry);

}  // namespace bicx

#endif  // BICX_CONSTANTS_HPP
