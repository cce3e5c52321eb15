#include "bicx/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace bicx {

UnitVector::UnitVector(Vector coords, double tol) : coords_(std::move(coords)) {
  const double n = coords_.norm();
  if (std::abs(n - 1.0) > tol) {
    throw PreconditionError("UnitVector: norm " + std::to_string(n) +
                            " deviates from 1 beyond tolerance");
  }
}

UnitVector UnitVector::normalized(const Vector& v) {
  const double n = v.norm();
  if (n < 1e-300) {
    throw PreconditionError("UnitVector::normalized: zero vector");
  }
  return UnitVector(v / n);
}

GramState gram_init(int d) {
  GramState g;
  g.m = Matrix::Zero(d, d);
  g.eigvals = Vector::Zero(d);
  g.eigvecs = Matrix::Identity(d, d);
  g.dirty = false;  // the zero matrix is its own eigensystem
  return g;
}

GramState gram_update(const GramState& g, const UnitVector& a) {
  if (a.dim() != g.m.rows()) {
    throw DimensionError("gram_update: action dimension mismatch");
  }
  GramState out = g;
  out.m.noalias() += a.coords() * a.coords().transpose();
  out.dirty = true;
  return out;
}

GramState eigendecompose(const GramState& g) {
  const Eigen::Index d = g.m.rows();
  if ((g.m - g.m.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw PreconditionError("eigendecompose: matrix not symmetric within tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g.m + g.m.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: solver failed");
  }
  GramState out = g;
  out.eigvals = Vector(d);
  out.eigvecs = Matrix(d, d);
  // Eigen returns ascending order; store descending.
  for (Eigen::Index i = 0; i < d; ++i) {
    out.eigvals[i] = es.eigenvalues()[d - 1 - i];
    out.eigvecs.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  // Sign convention: first coordinate with |x| > 1e-12 positive.
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index r = 0; r < d; ++r) {
      const double x = out.eigvecs(r, i);
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) out.eigvecs.col(i) = -out.eigvecs.col(i);
        break;
      }
    }
  }
  out.dirty = false;
  return out;
}

Vector project_complement(const Vector& u, const Matrix& basis) {
  if (basis.cols() == 0) return u;
  if (basis.rows() != u.size()) {
    throw DimensionError("project_complement: basis/vector dimension mismatch");
  }
  if (((basis.transpose() * basis) - Matrix::Identity(basis.cols(), basis.cols()))
          .cwiseAbs()
          .maxCoeff() > 1e-8) {
    throw PreconditionError("project_complement: basis is not orthonormal");
  }
  return u - basis * (basis.transpose() * u);
}

Vector combo_coefficients(const Vector& u, const std::vector<UnitVector>& v,
                          const GramState& g, int ell, double eps) {
  if (g.dirty) {
    throw PreconditionError("combo_coefficients: eigendecomposition is stale");
  }
  const Eigen::Index d = g.m.rows();
  if (u.size() != d) throw DimensionError("combo_coefficients: dimension mismatch");
  if (ell < 1 || ell > d) {
    throw PreconditionError("combo_coefficients: ell out of range");
  }
  if (g.eigvals[ell - 1] < eps - 1e-12) {
    throw PreconditionError("combo_coefficients: lambda_ell below eps");
  }
  if (u.norm() > 1.0 + 1e-9) {
    throw PreconditionError("combo_coefficients: ||u|| exceeds 1");
  }
  const Matrix basis = g.eigvecs.leftCols(ell);
  if ((u - basis * (basis.transpose() * u)).norm() > 1e-6) {
    throw PreconditionError("combo_coefficients: u not in span of top-ell eigenvectors");
  }
  Vector c = Vector::Zero(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    double ci = 0.0;
    for (int k = 0; k < ell; ++k) {
      ci += u.dot(g.eigvecs.col(k)) * v[i].dot(g.eigvecs.col(k)) / g.eigvals[k];
    }
    c[static_cast<Eigen::Index>(i)] = ci;
  }
  return c;
}

TailGainReport rank_one_tail_gain_check(const std::vector<UnitVector>& v,
                                        const Vector& u, double eps,
                                        double tail_threshold) {
  if (v.empty()) throw PreconditionError("rank_one_tail_gain_check: empty direction list");
  const Eigen::Index d = u.size();
  if (eps <= 0.0 || eps >= 1.0) {
    throw PreconditionError("rank_one_tail_gain_check: eps must lie in (0,1)");
  }
  if (u.norm() > 1.0 + 1e-9) {
    throw PreconditionError("rank_one_tail_gain_check: ||u|| exceeds 1");
  }
  GramState g = gram_init(static_cast<int>(d));
  for (const auto& vi : v) g = gram_update(g, vi);
  g = eigendecompose(g);

  int s_cut = 0;
  while (s_cut < d && g.eigvals[s_cut] >= eps - 1e-12) ++s_cut;
  const Vector perp = project_complement(u, g.eigvecs.leftCols(s_cut));
  if (perp.squaredNorm() < eps - 1e-9) {
    throw PreconditionError(
        "rank_one_tail_gain_check: ||P_perp(u)||^2 below eps (precondition)");
  }

  TailGainReport rep;
  rep.threshold = tail_threshold > 0.0
                      ? tail_threshold
                      : 200.0 * std::pow(static_cast<double>(d), 3) / (eps * eps);
  int ell = 0;
  while (ell < d && g.eigvals[ell] >= rep.threshold) ++ell;
  rep.ell = ell;

  GramState gp = g;
  gp.m.noalias() += u * u.transpose();
  gp.dirty = true;
  gp = eigendecompose(gp);

  double tail_new = 0.0, tail_old = 0.0;
  for (Eigen::Index i = ell; i < d; ++i) {
    tail_new += gp.eigvals[i];
    tail_old += g.eigvals[i];
  }
  rep.lhs = tail_new;
  rep.rhs = eps / 2.0 + tail_old;
  rep.holds = rep.lhs >= rep.rhs - 1e-9;
  return rep;
}

}  // namespace bicx
