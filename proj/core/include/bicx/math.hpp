#ifndef BICX_MATH_HPP
#define BICX_MATH_HPP

#include <Eigen/Core>
#include <cmath>
#include <limits>

namespace bicx {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

// P(N(0,1) > x)
inline double norm_sf(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// log P(N(0,1) > x), stable far into the upper tail where erfc underflows.
inline double log_norm_sf(double x) {
  if (x < 8.0) {
    return std::log(norm_sf(x));
  }
  // Mills-ratio asymptotics: sf(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * kPi) + std::log(series);
}

inline double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a nan propagates)
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

inline double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace bicx

#endif  // BICX_MATH_HPP
