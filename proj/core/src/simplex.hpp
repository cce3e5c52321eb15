#ifndef BICX_SRC_SIMPLEX_HPP
#define BICX_SRC_SIMPLEX_HPP

#include "bicx/math.hpp"

namespace bicx::detail {

struct BoxLpResult {
  Vector f;            // box variables at the optimum
  double objective;    // ||A f||_1 at the optimum
  Vector residual;     // A f
  Vector duals;        // row multipliers; |y_j| <= 1 certifies optimality
  int iterations = 0;
};

// minimize ||A f||_1 subject to lo <= f_i <= hi, via a bounded-variable
// primal simplex on  A f + p - n = 0, min 1'p + 1'n.
BoxLpResult min_l1_residual_box(const Matrix& a, double lo, double hi);

}  // namespace bicx::detail

#endif  // BICX_SRC_SIMPLEX_HPP
