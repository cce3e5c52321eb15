#include "bicx/priors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "bicx/rng.hpp"

namespace bicx {

namespace {

Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

// One-sided 95% Wilson lower confidence bound for a binomial proportion.
double wilson_lower(double k, double n) {
  if (n <= 0.0) return 0.0;
  const double z = 1.6448536269514722;  // one-sided 95%
  const double p = k / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = p + z2 / (2.0 * n);
  const double rad = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::max(0.0, (center - rad) / denom);
}

Vector random_unit(int d, RngStream& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  const double n = v.norm();
  return n > 1e-12 ? Vector(v / n) : Vector(Vector::Unit(d, 0));
}

}  // namespace

int prior_dim(const PriorSpec& prior) {
  return std::visit(
      [](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPrior>) {
          return static_cast<int>(p.mean.size());
        } else if constexpr (std::is_same_v<T, UniformBallPrior>) {
          return static_cast<int>(p.center.size());
        } else if constexpr (std::is_same_v<T, RRegularBody>) {
          return p.kind == RRegularBody::Kind::box
                     ? static_cast<int>(p.halfwidths.size())
                     : p.dim;
        } else {
          return static_cast<int>(p.points.cols());
        }
      },
      prior);
}

void validate_prior(const PriorSpec& prior) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPrior>) {
          if (p.cov.rows() != p.cov.cols() || p.cov.rows() != p.mean.size()) {
            throw DimensionError("gaussian prior: mean/cov shape mismatch");
          }
          if ((p.cov - p.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            throw PreconditionError("gaussian prior: covariance not symmetric");
          }
          Eigen::SelfAdjointEigenSolver<Matrix> es(p.cov);
          if (es.eigenvalues().minCoeff() < -1e-10) {
            throw PreconditionError("gaussian prior: covariance not PSD within 1e-10");
          }
        } else if constexpr (std::is_same_v<T, UniformBallPrior>) {
          if (p.radius <= 0.0) throw PreconditionError("uniform_ball: radius <= 0");
        } else if constexpr (std::is_same_v<T, RRegularBody>) {
          if (p.r <= 0.0 || p.r >= 1.0) {
            throw PreconditionError("r_regular_body: r must lie in (0,1)");
          }
          if (p.kind == RRegularBody::Kind::ball) {
            if (p.dim < 1) throw PreconditionError("r_regular_body: ball needs dim >= 1");
            if (p.ball_radius < p.r || p.ball_radius > 1.0 + 1e-12) {
              throw PreconditionError("r_regular_body: need r <= radius <= 1");
            }
          } else {
            if (p.halfwidths.size() == 0) {
              throw PreconditionError("r_regular_body: empty box");
            }
            if (p.halfwidths.minCoeff() < p.r) {
              throw PreconditionError("r_regular_body: box does not contain B_r");
            }
            if (p.halfwidths.norm() > 1.0 + 1e-12) {
              throw PreconditionError("r_regular_body: box corner outside B_1");
            }
          }
        } else {
          if (p.points.rows() == 0) throw PreconditionError("empirical prior: no points");
          if (p.weights.size() != p.points.rows()) {
            throw DimensionError("empirical prior: weights/points mismatch");
          }
          if (p.weights.minCoeff() < 0.0) {
            throw PreconditionError("empirical prior: negative weight");
          }
          if (std::abs(p.weights.sum() - 1.0) > 1e-12) {
            throw PreconditionError("empirical prior: weights do not sum to 1");
          }
        }
      },
      prior);
}

Vector prior_mean(const PriorSpec& prior) {
  return std::visit(
      [](const auto& p) -> Vector {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPrior>) {
          return p.mean;
        } else if constexpr (std::is_same_v<T, UniformBallPrior>) {
          return p.center;
        } else if constexpr (std::is_same_v<T, RRegularBody>) {
          const int d = p.kind == RRegularBody::Kind::box
                            ? static_cast<int>(p.halfwidths.size())
                            : p.dim;
          return Vector::Zero(d);
        } else {
          return p.points.transpose() * p.weights;
        }
      },
      prior);
}

Matrix sample(const PriorSpec& prior, int n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample: n must be >= 1");
  validate_prior(prior);
  RngStream rng(seed, "prior-sample");
  return std::visit(
      [&](const auto& p) -> Matrix {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPrior>) {
          const int d = static_cast<int>(p.mean.size());
          const Matrix root = psd_sqrt(p.cov);
          Matrix out(n, d);
          Vector z(d);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) z[j] = rng.normal();
            out.row(i) = (p.mean + root * z).transpose();
          }
          return out;
        } else if constexpr (std::is_same_v<T, UniformBallPrior>) {
          const int d = static_cast<int>(p.center.size());
          Matrix out(n, d);
          for (int i = 0; i < n; ++i) {
            Vector dir = random_unit(d, rng);
            const double r = p.radius * std::pow(rng.uniform_open(), 1.0 / d);
            out.row(i) = (p.center + r * dir).transpose();
          }
          return out;
        } else if constexpr (std::is_same_v<T, RRegularBody>) {
          if (p.kind == RRegularBody::Kind::ball) {
            const int d = p.dim;
            Matrix out(n, d);
            for (int i = 0; i < n; ++i) {
              Vector dir = random_unit(d, rng);
              const double r = p.ball_radius * std::pow(rng.uniform_open(), 1.0 / d);
              out.row(i) = (r * dir).transpose();
            }
            return out;
          }
          const int d = static_cast<int>(p.halfwidths.size());
          Matrix out(n, d);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
              out(i, j) = p.halfwidths[j] * (2.0 * rng.uniform() - 1.0);
            }
          }
          return out;
        } else {
          const int d = static_cast<int>(p.points.cols());
          // Cumulative-weight inversion keeps draws deterministic per seed.
          std::vector<double> cum(static_cast<std::size_t>(p.points.rows()));
          double acc = 0.0;
          for (Eigen::Index i = 0; i < p.points.rows(); ++i) {
            acc += p.weights[i];
            cum[static_cast<std::size_t>(i)] = acc;
          }
          Matrix out(n, d);
          for (int i = 0; i < n; ++i) {
            const double u = rng.uniform() * acc;
            const auto it = std::lower_bound(cum.begin(), cum.end(), u);
            const Eigen::Index idx = std::min<Eigen::Index>(
                static_cast<Eigen::Index>(it - cum.begin()), p.points.rows() - 1);
            out.row(i) = p.points.row(idx);
          }
          return out;
        }
      },
      prior);
}

std::pair<PriorSpec, Matrix> canonicalize(const PriorSpec& prior) {
  validate_prior(prior);
  const Vector mean = prior_mean(prior);
  const int d = static_cast<int>(mean.size());
  const Matrix eye = Matrix::Identity(d, d);
  const double mn = mean.norm();
  if (mn <= 1e-12) return {prior, eye};

  Vector mhat = mean / mn;
  Matrix rot;
  if ((mhat - Vector::Unit(d, 0)).norm() <= 1e-12) {
    rot = eye;
  } else {
    // Householder reflection taking mhat to e1 (orthogonal, det -1).
    Vector v = mhat - Vector::Unit(d, 0);
    rot = eye - (2.0 / v.squaredNorm()) * (v * v.transpose());
  }

  PriorSpec rotated = std::visit(
      [&](const auto& p) -> PriorSpec {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPrior>) {
          GaussianPrior out;
          out.mean = rot * p.mean;
          out.cov = rot * p.cov * rot.transpose();
          return out;
        } else if constexpr (std::is_same_v<T, UniformBallPrior>) {
          UniformBallPrior out = p;
          out.center = rot * p.center;
          return out;
        } else if constexpr (std::is_same_v<T, RRegularBody>) {
          // Bodies are centered, so a nonzero mean cannot occur here.
          return p;
        } else {
          EmpiricalPrior out = p;
          out.points = p.points * rot.transpose();
          return out;
        }
      },
      prior);
  return {rotated, rot};
}

AssumptionConstants estimate_constants(const PriorSpec& prior, int n_dirs,
                                       int n_samples, std::uint64_t seed) {
  if (n_dirs < 1 || n_samples < 1) {
    throw PreconditionError("estimate_constants: counts must be >= 1");
  }
  if (const auto* emp = std::get_if<EmpiricalPrior>(&prior)) {
    if (emp->points.rows() < 10) {
      throw PreconditionError(
          "estimate_constants: empirical prior with fewer than 10 points");
    }
  }
  const Matrix x = sample(prior, n_samples, seed);
  const int d = static_cast<int>(x.cols());
  const double n = static_cast<double>(n_samples);

  const Vector mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / n;
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);

  // Probe directions: random units plus +/- covariance eigendirections, the
  // usual suspects for the worst case.
  std::vector<Vector> dirs;
  RngStream rng(seed, "estimate-dirs");
  for (int i = 0; i < n_dirs; ++i) dirs.push_back(random_unit(d, rng));
  for (int i = 0; i < d; ++i) {
    dirs.push_back(es.eigenvectors().col(i));
    dirs.push_back(-es.eigenvectors().col(i));
  }

  Matrix proj(n_samples, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    proj.col(static_cast<Eigen::Index>(j)) = x * dirs[j];
  }

  // (c_d, eps_d): maximize c * eps(c) over a grid, eps(c) being the Wilson
  // lower bound of the worst-direction positivity mass.
  const double cmax = std::max(0.25, proj.maxCoeff());
  AssumptionConstants out;
  double best = -1.0;
  for (int gi = 1; gi <= 48; ++gi) {
    const double c = cmax * gi / 48.0;
    double eps = 1.0;
    for (Eigen::Index j = 0; j < proj.cols(); ++j) {
      const double k = (proj.col(j).array() >= c).count();
      eps = std::min(eps, wilson_lower(k, n));
      if (eps == 0.0) break;
    }
    if (eps > 0.0 && c * eps > best) {
      best = c * eps;
      out.c_d = c;
      out.eps_d = eps;
    }
  }
  if (best <= 0.0) {
    // Half-space confined sample: no grid point has positive mass in every
    // direction. Report the degenerate pair.
    out.c_d = 0.0;
    out.eps_d = 0.0;
  }

  out.sigma_var = std::max(0.0, es.eigenvalues().minCoeff());

  // Sub-gaussian parameter: smallest K with P(|<v,x>| >= t) <= 2 exp(-t^2/K^2)
  // along the probed tail grid.
  double k_subg = 0.0;
  const double qs[] = {0.5, 0.75, 0.9, 0.95, 0.99, 0.999};
  for (Eigen::Index j = 0; j < proj.cols(); ++j) {
    Vector a = proj.col(j).cwiseAbs();
    std::sort(a.data(), a.data() + a.size());
    for (double q : qs) {
      const Eigen::Index idx =
          std::min<Eigen::Index>(static_cast<Eigen::Index>(q * n), n_samples - 1);
      const double t = a[idx];
      const double tail = static_cast<double>(n_samples - idx) / n;
      if (t <= 0.0 || tail <= 2.0 / n || tail >= 1.0) continue;
      k_subg = std::max(k_subg, t / std::sqrt(std::log(2.0 / tail)));
    }
  }
  out.k_subg = std::max(k_subg, 1e-6);
  return out;
}

EmpiricalPrior load_empirical(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_empirical: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("load_empirical: no data rows in " + path);
  const std::size_t cols = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != cols) {
      throw ConfigError("load_empirical: ragged rows in " + path);
    }
  }
  bool has_weights = expected_dim > 0 && cols == static_cast<std::size_t>(expected_dim) + 1;
  if (expected_dim > 0 && !has_weights &&
      cols != static_cast<std::size_t>(expected_dim)) {
    throw ConfigError("load_empirical: column count matches neither d nor d+1");
  }
  const std::size_t d = has_weights ? cols - 1 : cols;
  EmpiricalPrior out;
  out.points = Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  out.weights = Vector(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    out.weights[static_cast<Eigen::Index>(i)] = has_weights ? rows[i][d] : 1.0;
  }
  const double s = out.weights.sum();
  if (s <= 0.0) throw ConfigError("load_empirical: nonpositive total weight");
  out.weights /= s;
  validate_prior(PriorSpec(out));
  return out;
}

}  // namespace bicx
