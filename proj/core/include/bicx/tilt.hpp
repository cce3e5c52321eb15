#ifndef BICX_TILT_HPP
#define BICX_TILT_HPP

#include <functional>
#include <nlohmann/json_fwd.hpp>

#include "bicx/errors.hpp"
#include "bicx/math.hpp"

namespace bicx {

// Sampled zero-mean tilt function f: values in [lower_bound, 1] attached to a
// weighted point set, evaluated by nearest neighbor. After a successful
// build, || sum_i weights_i * z_points_i * f_values_i || <= feas_tol.
struct TiltFunction {
  Matrix z_points;  // m x l
  Vector f_values;  // in [lower_bound, 1]
  Vector weights;   // sampling weights (appended points may carry weight 0)
  double lower_bound = 0.0;

  Eigen::Index size() const { return z_points.rows(); }
  Eigen::Index dim() const { return z_points.cols(); }
  Vector moment() const {
    return z_points.transpose() * (weights.cwiseProduct(f_values));
  }

  nlohmann::json to_json() const;
  static TiltFunction from_json(const nlohmann::json& j);
};

struct TiltBuildOptions {
  double feas_tol = 1e-8;
  int positivity_spot_checks = 64;
  std::uint64_t spot_check_seed = 0;
  // Optional paired coordinates (same row count as z_samples) whose
  // f-weighted moment is zeroed alongside the z moment. The driver passes
  // the particle projections here so the tilt-conditioned cloud mean lands
  // exactly in the unexplored subspace.
  const Matrix* aux_moment_points = nullptr;
  std::function<void(const std::string&)> warn;
};

// Solves the box-constrained feasibility problem
//   sum_i w_i z_i f_i = 0,  f_i in [lb, 1],  lb = epsilon / (4 max(cap, 1)),
// as an l1-minimization LP; accepts iff the optimum is <= feas_tol.
// Preconditions: weights normalized, 0 < epsilon <= 1/2. Empirical positivity
// E[<v,z>_+] >= epsilon is spot-checked on random directions and only warned
// about (finite-sample noise). Infeasibility raises TiltInfeasibleError with
// the separating direction.
TiltFunction build_tilt(const Matrix& z_samples, const Vector& weights,
                        double epsilon, double mean_norm_cap,
                        const TiltBuildOptions& opts = {});

// Nearest-neighbor value among z_points, clamped to [lower_bound, 1].
double eval_tilt(const TiltFunction& tilt, const Vector& z);

// Batched nearest-neighbor evaluation, one query per row.
Vector eval_tilt_batch(const TiltFunction& tilt, const Matrix& queries);

// Appends a point with an explicit f value (weight 0 keeps the moment intact).
void tilt_append_point(TiltFunction& tilt, const Vector& z, double f_value,
                       double weight = 0.0);

}  // namespace bicx

#endif  // BICX_TILT_HPP
