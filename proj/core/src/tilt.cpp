#include "bicx/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "bicx/rng.hpp"
#include "simplex.hpp"

namespace bicx {

TiltFunction build_tilt(const Matrix& z_samples, const Vector& weights,
                        double epsilon, double mean_norm_cap,
                        const TiltBuildOptions& opts) {
  const Eigen::Index m = z_samples.rows();
  const Eigen::Index l = z_samples.cols();
  if (m < 1) throw PreconditionError("build_tilt: no samples");
  if (weights.size() != m) throw DimensionError("build_tilt: weights/samples mismatch");
  if (epsilon <= 0.0 || epsilon > 0.5) {
    throw PreconditionError("build_tilt: epsilon must lie in (0, 1/2]");
  }
  if (weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw PreconditionError("build_tilt: weights must be normalized");
  }
  if (opts.aux_moment_points && opts.aux_moment_points->rows() != m) {
    throw DimensionError("build_tilt: aux moment rows mismatch");
  }

  const double lb = epsilon / (4.0 * std::max(mean_norm_cap, 1.0));

  // Positivity spot check; violations warn rather than fail (finite-sample
  // noise, and the LP below is the real arbiter).
  if (opts.positivity_spot_checks > 0 && opts.warn) {
    RngStream rng(opts.spot_check_seed, "tilt-spot-check");
    for (int s = 0; s < opts.positivity_spot_checks; ++s) {
      Vector v(l);
      for (Eigen::Index i = 0; i < l; ++i) v[i] = rng.normal();
      const double n = v.norm();
      if (n < 1e-12) continue;
      v /= n;
      const double pos = (z_samples * v).cwiseMax(0.0).dot(weights);
      if (pos < epsilon) {
        opts.warn("build_tilt: empirical E[<v,z>_+] = " + std::to_string(pos) +
                  " below epsilon = " + std::to_string(epsilon));
        break;
      }
    }
  }

  // LP columns: weighted z coordinates, plus any paired aux moments.
  const Eigen::Index rows = l + (opts.aux_moment_points ? opts.aux_moment_points->cols() : 0);
  Matrix a(rows, m);
  a.topRows(l) = (z_samples.array().colwise() * weights.array()).transpose();
  if (opts.aux_moment_points) {
    a.bottomRows(rows - l) =
        (opts.aux_moment_points->array().colwise() * weights.array()).transpose();
  }

  const auto lp = detail::min_l1_residual_box(a, lb, 1.0);
  if (lp.objective > opts.feas_tol) {
    Vector dir = lp.residual.head(l);
    if (dir.norm() < 1e-14 && rows > l) dir = lp.residual.tail(rows - l);
    const double n = dir.norm();
    if (n > 0.0) dir /= -n;  // direction the moment cannot escape from
    throw TiltInfeasibleError(
        "build_tilt: zero-moment LP infeasible (residual " +
            std::to_string(lp.objective) + "); sample is half-space confined",
        dir, lp.objective);
  }

  TiltFunction tilt;
  tilt.z_points = z_samples;
  tilt.f_values = lp.f.cwiseMax(lb).cwiseMin(1.0);
  tilt.weights = weights;
  tilt.lower_bound = lb;
  return tilt;
}

double eval_tilt(const TiltFunction& tilt, const Vector& z) {
  if (tilt.size() == 0) throw PreconditionError("eval_tilt: empty tilt");
  if (z.size() != tilt.dim()) throw DimensionError("eval_tilt: dimension mismatch");
  Eigen::Index best = 0;
  (tilt.z_points.rowwise() - z.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return std::clamp(tilt.f_values[best], tilt.lower_bound, 1.0);
}

Vector eval_tilt_batch(const TiltFunction& tilt, const Matrix& queries) {
  if (tilt.size() == 0) throw PreconditionError("eval_tilt_batch: empty tilt");
  if (queries.cols() != tilt.dim()) {
    throw DimensionError("eval_tilt_batch: dimension mismatch");
  }
  const Eigen::Index q = queries.rows();
  Vector out(q);
  // d(i,j)^2 = ||q_i||^2 - 2 q_i . p_j + ||p_j||^2; the ||q||^2 term does not
  // affect the argmin, so a single GEMM gives the nearest neighbors.
  const Vector pt_sq = tilt.z_points.rowwise().squaredNorm();
  constexpr Eigen::Index kTile = 512;
  for (Eigen::Index start = 0; start < q; start += kTile) {
    const Eigen::Index len = std::min<Eigen::Index>(kTile, q - start);
    Matrix scores = (-2.0 * queries.middleRows(start, len) * tilt.z_points.transpose());
    scores.rowwise() += pt_sq.transpose();
    for (Eigen::Index i = 0; i < len; ++i) {
      Eigen::Index best = 0;
      scores.row(i).minCoeff(&best);
      out[start + i] = std::clamp(tilt.f_values[best], tilt.lower_bound, 1.0);
    }
  }
  return out;
}

void tilt_append_point(TiltFunction& tilt, const Vector& z, double f_value,
                       double weight) {
  if (z.size() != tilt.dim()) throw DimensionError("tilt_append_point: dimension mismatch");
  const Eigen::Index m = tilt.size();
  tilt.z_points.conservativeResize(m + 1, Eigen::NoChange);
  tilt.z_points.row(m) = z.transpose();
  tilt.f_values.conservativeResize(m + 1);
  tilt.f_values[m] = std::clamp(f_value, tilt.lower_bound, 1.0);
  tilt.weights.conservativeResize(m + 1);
  tilt.weights[m] = weight;
}

nlohmann::json TiltFunction::to_json() const {
  nlohmann::json j;
  j["lower_bound"] = lower_bound;
  j["interpolation"] = "nearest_neighbor";
  j["dim"] = dim();
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) {
    pts[static_cast<std::size_t>(i)].assign(z_points.row(i).begin(),
                                            z_points.row(i).end());
  }
  j["z_points"] = pts;
  j["f_values"] = std::vector<double>(f_values.begin(), f_values.end());
  j["weights"] = std::vector<double>(weights.begin(), weights.end());
  return j;
}

TiltFunction TiltFunction::from_json(const nlohmann::json& j) {
  TiltFunction t;
  t.lower_bound = j.at("lower_bound").get<double>();
  const auto pts = j.at("z_points").get<std::vector<std::vector<double>>>();
  const auto fv = j.at("f_values").get<std::vector<double>>();
  const auto w = j.at("weights").get<std::vector<double>>();
  const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
  const Eigen::Index l = j.at("dim").get<Eigen::Index>();
  t.z_points = Matrix(m, l);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < l; ++k) {
      t.z_points(i, k) = pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
  }
  t.f_values = Eigen::Map<const Vector>(fv.data(), m);
  t.weights = Eigen::Map<const Vector>(w.data(), m);
  return t;
}

}  // namespace bicx
