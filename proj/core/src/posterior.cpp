#include "bicx/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "bicx/errors.hpp"
#include "bicx/parallel.hpp"
#include "bicx/rng.hpp"

namespace bicx {

namespace {

// P(sign * (x + noise_sd * N) > 0); indicator in the zero-noise limit.
double sign_likelihood(double x, double noise_sd, int sign) {
  const double s = sign >= 0 ? 1.0 : -1.0;
  if (noise_sd <= 0.0) {
    const double v = s * x;
    return v > 0.0 ? 1.0 : (v < 0.0 ? 0.0 : 0.5);
  }
  return norm_sf(-s * x / noise_sd);
}

Vector normalized_weights(const Vector& log_weights) {
  const double lse = logsumexp(log_weights);
  if (!std::isfinite(lse)) {
    throw DegeneratePosteriorError("particle cloud: all weights underflowed");
  }
  return (log_weights.array() - lse).exp();
}

}  // namespace

ParticleCloud cloud_from_points(Matrix points, std::uint64_t seed) {
  ParticleCloud c;
  c.log_weights = Vector::Zero(points.rows());
  c.points = std::move(points);
  c.seed_lineage = {seed};
  if (c.size() < 1) throw PreconditionError("particle cloud: needs n >= 1");
  return c;
}

ParticleCloud cloud_from_weighted(Matrix points, const Vector& weights,
                                  std::uint64_t seed) {
  if (weights.size() != points.rows()) {
    throw DimensionError("cloud_from_weighted: weights/points mismatch");
  }
  if (weights.minCoeff() < 0.0) {
    throw PreconditionError("cloud_from_weighted: negative weight");
  }
  ParticleCloud c;
  c.points = std::move(points);
  c.log_weights = weights.array().max(1e-300).log();
  c.seed_lineage = {seed};
  if (c.size() < 1) throw PreconditionError("particle cloud: needs n >= 1");
  return c;
}

ParticleCloud reweight(const ParticleCloud& cloud, const SignalRecord& signal) {
  ParticleCloud out = cloud;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianObs>) {
          if (s.direction.size() != cloud.dim()) {
            throw DimensionError("reweight: signal dimension mismatch");
          }
          if (s.noise_var <= 0.0) throw PreconditionError("gaussian_obs: noise_var <= 0");
          const Vector proj = cloud.points * s.direction;
          out.log_weights.array() -=
              (s.value - proj.array()).square() / (2.0 * s.noise_var);
        } else if constexpr (std::is_same_v<T, SignThreshold>) {
          if (s.coef.size() != cloud.dim()) {
            throw DimensionError("reweight: signal dimension mismatch");
          }
          const Vector proj = cloud.points * s.coef;
          if (s.noise_sd > 0.0) {
            const double ss = s.sign >= 0 ? 1.0 : -1.0;
            for (Eigen::Index i = 0; i < cloud.size(); ++i) {
              out.log_weights[i] += log_norm_sf(-ss * proj[i] / s.noise_sd);
            }
          } else {
            for (Eigen::Index i = 0; i < cloud.size(); ++i) {
              const double lik = sign_likelihood(proj[i], 0.0, s.sign);
              out.log_weights[i] +=
                  lik > 0.0 ? std::log(lik) : -std::numeric_limits<double>::infinity();
            }
          }
        } else if constexpr (std::is_same_v<T, MixtureSign>) {
          if (s.action.size() != cloud.dim()) {
            throw DimensionError("reweight: signal dimension mismatch");
          }
          if (s.select_prob <= 0.0 || s.select_prob >= 1.0) {
            throw PreconditionError("mixture_sign: select_prob outside (0,1)");
          }
          const Vector proj = cloud.points * s.action;
          for (Eigen::Index i = 0; i < cloud.size(); ++i) {
            const double lik = s.select_prob * sign_likelihood(proj[i], s.noise_sd, s.sign) +
                               (1.0 - s.select_prob) * 0.5;
            out.log_weights[i] += std::log(lik);
          }
        } else {  // TiltEvent
          if (!s.tilt) throw PreconditionError("tilt_event: missing tilt function");
          const Vector lik = tilt_likelihood(cloud, *s.tilt, s.basis, s.noise_vars,
                                             s.inner_n, s.seed,
                                             s.z_context ? s.z_context.get() : nullptr);
          for (Eigen::Index i = 0; i < cloud.size(); ++i) {
            const double p = s.observed ? lik[i] : 1.0 - lik[i];
            out.log_weights[i] +=
                p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
          }
        }
      },
      signal);
  if (!std::isfinite(out.log_weights.maxCoeff())) {
    throw DegeneratePosteriorError("reweight: all likelihoods underflowed to zero");
  }
  return out;
}

PosteriorMean posterior_mean(const ParticleCloud& cloud) {
  const Vector w = normalized_weights(cloud.log_weights);
  PosteriorMean pm;
  pm.mean = cloud.points.transpose() * w;
  pm.norm = pm.mean.norm();
  const double ess = 1.0 / w.squaredNorm();
  double var_sum = 0.0;
  for (Eigen::Index j = 0; j < cloud.dim(); ++j) {
    const auto centered = cloud.points.col(j).array() - pm.mean[j];
    var_sum += (w.array() * centered.square()).sum();
  }
  pm.credible_radius = std::sqrt(var_sum / std::max(ess, 1.0));
  return pm;
}

UnitVector exploit(const ParticleCloud& cloud,
                   const std::vector<SignalRecord>& signals,
                   const UnitVector& fallback, double zero_tol) {
  ParticleCloud c = cloud;
  for (const auto& s : signals) c = reweight(c, s);
  const PosteriorMean pm = posterior_mean(c);
  if (pm.norm > zero_tol) {
    return UnitVector(pm.mean / pm.norm);
  }
  return fallback;
}

Vector z_map(const Vector& y_hat, const ParticleCloud& cloud, const Matrix& basis,
             const Vector& noise_vars) {
  const Eigen::Index l = basis.cols();
  if (y_hat.size() != l || noise_vars.size() != l) {
    throw DimensionError("z_map: y/basis/noise dimensions disagree");
  }
  if (noise_vars.minCoeff() <= 0.0) {
    throw PreconditionError("z_map: noise variances must be positive");
  }
  const Matrix proj = cloud.points * basis;  // n x l
  Vector lw = cloud.log_weights;
  for (Eigen::Index k = 0; k < l; ++k) {
    lw.array() -=
        (proj.col(k).array() - y_hat[k]).square() / (2.0 * noise_vars[k]);
  }
  const double lse = logsumexp(lw);
  if (!std::isfinite(lse)) {
    throw DegeneratePosteriorError("z_map: conditioning weights underflowed");
  }
  const Vector w = (lw.array() - lse).exp();
  return proj.transpose() * w;
}

Vector tilt_likelihood(const ParticleCloud& cloud, const TiltFunction& tilt,
                       const Matrix& basis, const Vector& noise_vars, int inner_n,
                       std::uint64_t seed, const ParticleCloud* z_context) {
  if (inner_n < 1) throw PreconditionError("tilt_likelihood: inner_n >= 1 required");
  const Eigen::Index l = basis.cols();
  if (noise_vars.size() != l) throw DimensionError("tilt_likelihood: noise dims");
  const ParticleCloud& zc = z_context ? *z_context : cloud;

  // Common noise draws across particles keep the likelihood smooth in x*.
  RngStream rng(seed, "tilt-inner-noise");
  Matrix xi(inner_n, l);
  for (int k = 0; k < inner_n; ++k) {
    for (Eigen::Index j = 0; j < l; ++j) {
      xi(k, j) = std::sqrt(noise_vars[j]) * rng.normal();
    }
  }

  const Matrix x_proj = cloud.points * basis;  // n x l
  const Matrix zc_proj = zc.points * basis;    // n_z x l
  const Vector zc_lw = zc.log_weights;
  const Vector inv2v = (2.0 * noise_vars.array()).inverse();

  const Eigen::Index n = cloud.size();
  Vector lik = Vector::Zero(n);
  constexpr Eigen::Index kTile = 256;
  const Eigen::Index tiles = (n + kTile - 1) / kTile;
  parallel_for(static_cast<std::size_t>(tiles), [&](std::size_t ti) {
    const Eigen::Index start = static_cast<Eigen::Index>(ti) * kTile;
    const Eigen::Index len = std::min<Eigen::Index>(kTile, n - start);
    Matrix queries(len * inner_n, l);  // z(x*_i + xi_k) inputs
    for (Eigen::Index i = 0; i < len; ++i) {
      for (int k = 0; k < inner_n; ++k) {
        queries.row(i * inner_n + k) = x_proj.row(start + i) + xi.row(k);
      }
    }
    // Conditional mean z(y) for every query against the context cloud.
    Matrix zq(len * inner_n, l);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      Vector lw = zc_lw;
      for (Eigen::Index j = 0; j < l; ++j) {
        lw.array() -=
            (zc_proj.col(j).array() - queries(q, j)).square() * inv2v[j];
      }
      const double lse = logsumexp(lw);
      const Vector w = (lw.array() - lse).exp();
      zq.row(q) = (zc_proj.transpose() * w).transpose();
    }
    const Vector fv = eval_tilt_batch(tilt, zq);
    for (Eigen::Index i = 0; i < len; ++i) {
      lik[start + i] = fv.segment(i * inner_n, inner_n).mean();
    }
  });
  return lik.cwiseMax(tilt.lower_bound).cwiseMin(1.0);
}

double effective_sample_size(const ParticleCloud& cloud) {
  const Vector w = normalized_weights(cloud.log_weights);
  return 1.0 / w.squaredNorm();
}

ParticleCloud resample_systematic(const ParticleCloud& cloud, std::uint64_t seed) {
  const Vector w = normalized_weights(cloud.log_weights);
  const Eigen::Index n = cloud.size();
  RngStream rng(seed, "resample");
  const double u0 = rng.uniform() / static_cast<double>(n);
  ParticleCloud out;
  out.points = Matrix(n, cloud.dim());
  out.log_weights = Vector::Zero(n);
  out.seed_lineage = cloud.seed_lineage;
  out.seed_lineage.push_back(seed);
  double cum = w[0];
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (cum < u && j + 1 < n) cum += w[++j];
    out.points.row(i) = cloud.points.row(j);
  }
  return out;
}

}  // namespace bicx
