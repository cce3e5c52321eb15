#ifndef BICX_GEOMETRY_HPP
#define BICX_GEOMETRY_HPP

#include <vector>

#include "bicx/errors.hpp"
#include "bicx/math.hpp"

namespace bicx {

// Action on the unit sphere; norm is checked at construction.
class UnitVector {
 public:
  explicit UnitVector(Vector coords, double tol = 1e-9);

  // Scales v to unit length. Throws PreconditionError on a (near-)zero vector.
  static UnitVector normalized(const Vector& v);

  const Vector& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double dot(const Vector& v) const { return coords_.dot(v); }

 private:
  Vector coords_;
};

// Running Gram matrix of exploration directions with a cached eigensystem.
// `dirty` is set by gram_update and cleared by eigendecompose; eigvals are
// descending and eigvecs columns orthonormal when clean.
struct GramState {
  Matrix m;
  Vector eigvals;
  Matrix eigvecs;
  bool dirty = true;
};

GramState gram_init(int d);

GramState gram_update(const GramState& g, const UnitVector& a);

// Dense symmetric eigendecomposition. Sign convention: first coordinate of
// each eigenvector with magnitude > 1e-12 is positive, so traces are stable
// across runs. Throws PreconditionError if m is not symmetric within 1e-8.
GramState eigendecompose(const GramState& g);

// u minus its projection onto span(basis columns); basis must be orthonormal
// within 1e-8. u = 0 returns 0.
Vector project_complement(const Vector& u, const Matrix& basis);

// Coefficients c with u = sum_i c_i v_i for u in span(w_1..w_ell), via
// c_i = sum_{k<=ell} <u,w_k><v_i,w_k>/lambda_k. Requires lambda_ell >= eps.
// Guarantees sum c_i^2 <= ||u||^2 / eps.
Vector combo_coefficients(const Vector& u, const std::vector<UnitVector>& v,
                          const GramState& g, int ell, double eps);

struct TailGainReport {
  bool holds = false;
  double lhs = 0.0;  // sum of lambda'_i over i > ell
  double rhs = 0.0;  // eps/2 + sum of lambda_i over i > ell
  int ell = 0;       // largest index with lambda_ell >= tail threshold
  double threshold = 0.0;
};

// Rank-one tail-gain check: with M = sum v_i v_i^T and M' = M + u u^T,
// reports whether the eigenvalue mass below the threshold cut grew by at
// least eps/2. Preconditions (distinguished errors, never `holds=false`):
// ||u|| <= 1 and ||P_{S^perp}(u)||^2 >= eps for S spanned by eigenvectors
// with eigenvalue >= eps. The default threshold is 200 d^3 / eps^2;
// tail_threshold overrides it for exploratory (non-normative) sweeps.
TailGainReport rank_one_tail_gain_check(const std::vector<UnitVector>& v,
                                        const Vector& u, double eps,
                                        double tail_threshold = -1.0);

}  // namespace bicx

#endif  // BICX_GEOMETRY_HPP
