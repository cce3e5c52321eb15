#include "simplex.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bicx/errors.hpp"

namespace bicx::detail {

namespace {

constexpr double kRcTol = 1e-10;   // reduced-cost tolerance
constexpr double kPivTol = 1e-11;  // pivot magnitude tolerance

// Variable layout: [0, m) box vars f, [m, m+r) positives p, [m+r, m+2r) n.
struct Problem {
  const Matrix& a;
  int m, r;
  double lo, hi;

  int total() const { return m + 2 * r; }
  double cost(int k) const { return k < m ? 0.0 : 1.0; }
  double lower(int k) const { return k < m ? lo : 0.0; }
  double upper(int k) const {
    return k < m ? hi : std::numeric_limits<double>::infinity();
  }
  Vector column(int k) const {
    if (k < m) return a.col(k);
    Vector e = Vector::Zero(r);
    if (k < m + r) {
      e[k - m] = 1.0;
    } else {
      e[k - m - r] = -1.0;
    }
    return e;
  }
};

}  // namespace

BoxLpResult min_l1_residual_box(const Matrix& a, double lo, double hi) {
  const int r = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  if (lo > hi) throw PreconditionError("min_l1_residual_box: empty box");
  Problem pb{a, m, r, lo, hi};

  std::vector<int> basic(r);
  std::vector<bool> in_basis(pb.total(), false);
  std::vector<bool> at_upper(pb.total(), false);  // meaningful for nonbasic f

  // Start with every f at its lower bound; p/n absorb the residual.
  Vector rhs = -a * Vector::Constant(m, lo);
  for (int j = 0; j < r; ++j) {
    basic[j] = rhs[j] >= 0.0 ? m + j : m + r + j;
    in_basis[basic[j]] = true;
  }

  const int max_iter = 200 * (m + 2 * r) + 1000;
  const int bland_after = 5 * (m + 2 * r) + 200;
  BoxLpResult out;
  Matrix b_mat(r, r);
  Vector xb(r), y(r), w(r);

  int iter = 0;
  for (;; ++iter) {
    if (iter > max_iter) {
      throw std::runtime_error("min_l1_residual_box: iteration limit exceeded");
    }
    for (int j = 0; j < r; ++j) b_mat.col(j) = pb.column(basic[j]);
    Eigen::PartialPivLU<Matrix> lu(b_mat);

    // Basic values from scratch each iteration (refactorized anyway).
    Vector acc = Vector::Zero(r);
    for (int k = 0; k < m; ++k) {
      if (!in_basis[k]) acc += pb.column(k) * (at_upper[k] ? hi : lo);
    }
    xb = lu.solve(-acc);

    Vector cb(r);
    for (int j = 0; j < r; ++j) cb[j] = pb.cost(basic[j]);
    y = lu.transpose().solve(cb);

    // Pricing. Dantzig up front, Bland after the cutoff.
    const bool bland = iter > bland_after;
    int enter = -1;
    double enter_sigma = 0.0, best = kRcTol;
    for (int k = 0; k < pb.total(); ++k) {
      if (in_basis[k]) continue;
      const double d = pb.cost(k) - y.dot(pb.column(k));
      double viol = 0.0, sigma = 0.0;
      const bool upper = k < m && at_upper[k];
      if (!upper && d < -kRcTol) {
        viol = -d;
        sigma = 1.0;
      } else if (upper && d > kRcTol) {
        viol = d;
        sigma = -1.0;
      }
      if (viol > best) {
        enter = k;
        enter_sigma = sigma;
        best = viol;
        if (bland) break;
      }
    }
    if (enter < 0) break;  // optimal

    w = lu.solve(pb.column(enter));

    // Ratio test: entering moves by t*sigma, basics by -t*sigma*w.
    double t = std::isinf(pb.upper(enter)) ? std::numeric_limits<double>::infinity()
                                           : pb.upper(enter) - pb.lower(enter);
    int leave = -1;       // index into basic[], -1 means bound flip
    double leave_to = 0;  // bound the leaving variable lands on
    for (int j = 0; j < r; ++j) {
      const double delta = enter_sigma * w[j];
      const int vj = basic[j];
      if (delta > kPivTol) {
        const double lim = (xb[j] - pb.lower(vj)) / delta;
        if (lim < t - 1e-15 || (leave >= 0 && lim < t + 1e-15 && vj < basic[leave])) {
          t = std::max(lim, 0.0);
          leave = j;
          leave_to = pb.lower(vj);
        }
      } else if (delta < -kPivTol && !std::isinf(pb.upper(vj))) {
        const double lim = (xb[j] - pb.upper(vj)) / delta;
        if (lim < t - 1e-15 || (leave >= 0 && lim < t + 1e-15 && vj < basic[leave])) {
          t = std::max(lim, 0.0);
          leave = j;
          leave_to = pb.upper(vj);
        }
      }
    }
    if (std::isinf(t)) {
      throw std::runtime_error("min_l1_residual_box: unbounded ray (objective >= 0?)");
    }

    if (leave < 0) {
      at_upper[enter] = !at_upper[enter];  // bound flip, basis unchanged
      continue;
    }
    const int leaving_var = basic[leave];
    in_basis[leaving_var] = false;
    if (leaving_var < m) {
      at_upper[leaving_var] = std::abs(leave_to - hi) < std::abs(leave_to - lo);
    }
    basic[leave] = enter;
    in_basis[enter] = true;
    if (enter < m) at_upper[enter] = false;
  }

  out.iterations = iter;
  out.f = Vector::Constant(m, lo);
  for (int k = 0; k < m; ++k) {
    if (!in_basis[k] && at_upper[k]) out.f[k] = hi;
  }
  for (int j = 0; j < r; ++j) {
    const int vj = basic[j];
    if (vj < m) out.f[vj] = std::clamp(xb[j], lo, hi);
  }
  out.residual = a * out.f;
  out.objective = out.residual.lpNorm<1>();
  out.duals = y;
  return out;
}

}  // namespace bicx::detail
