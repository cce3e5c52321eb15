#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <nlohmann/json.hpp>

#include "bicx/rng.hpp"
#include "bicx/tilt.hpp"

using namespace bicx;

namespace {

// Independent 1-d oracle: the set of reachable moments sum_i a_i f_i over the
// box is an interval; the minimal |moment| is its distance to zero.
double l1_oracle_1d(const Vector& a, double lo, double hi) {
  double mn = 0.0, mx = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    mn += std::min(a[i] * lo, a[i] * hi);
    mx += std::max(a[i] * lo, a[i] * hi);
  }
  if (mn <= 0.0 && 0.0 <= mx) return 0.0;
  return std::min(std::abs(mn), std::abs(mx));
}

Matrix symmetric_cloud(int m, int l, RngStream& rng) {
  Matrix z(m, l);
  for (int i = 0; i < m / 2; ++i) {
    for (int k = 0; k < l; ++k) {
      z(i, k) = rng.normal();
      z(m / 2 + i, k) = -z(i, k) + 0.05 * rng.normal();
    }
  }
  if (m % 2) {
    for (int k = 0; k < l; ++k) z(m - 1, k) = rng.normal();
  }
  return z;
}

}  // namespace

TEST_SUITE_BEGIN("tilt");

TEST_CASE("symmetric pair solves at the lower bound") {
  Matrix z(2, 2);
  z << 0.7, -0.2, -0.7, 0.2;
  const Vector w = Vector::Constant(2, 0.5);
  const auto tilt = build_tilt(z, w, 0.3, 1.0);
  CHECK(tilt.lower_bound == doctest::Approx(0.3 / 4.0));
  CHECK(tilt.moment().norm() <= 1e-8);
  // f == lb is feasible by symmetric cancellation and is where the solver
  // starts, so it is returned verbatim.
  CHECK(tilt.f_values.minCoeff() == doctest::Approx(tilt.lower_bound));
  CHECK(tilt.f_values.maxCoeff() == doctest::Approx(tilt.lower_bound));
}

TEST_CASE("hand LP example in one dimension") {
  Matrix z(2, 1);
  z << 1, -1;
  Vector w(2);
  w << 0.75, 0.25;
  // lb = 0.1 via epsilon = 0.4, cap = 1. Hand enumeration: f = (0.1, 0.3)
  // zeroes 0.75*0.1 - 0.25*f2.
  const auto tilt = build_tilt(z, w, 0.4, 1.0);
  CHECK(tilt.lower_bound == doctest::Approx(0.1));
  CHECK(std::abs(0.75 * 0.1 - 0.25 * 0.3) < 1e-15);  // oracle solution feasible
  CHECK(tilt.moment().norm() <= 1e-10);
  CHECK(tilt.f_values.minCoeff() >= 0.1 - 1e-12);
  CHECK(tilt.f_values.maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("half-space confined samples are infeasible with a direction") {
  RngStream rng(2);
  Matrix z(50, 2);
  for (int i = 0; i < 50; ++i) {
    z(i, 0) = 0.5 + rng.uniform();  // first coordinate strictly positive
    z(i, 1) = rng.normal();
  }
  const Vector w = Vector::Constant(50, 1.0 / 50.0);
  try {
    build_tilt(z, w, 0.2, 1.0);
    FAIL("expected TiltInfeasibleError");
  } catch (const TiltInfeasibleError& e) {
    CHECK(e.residual_norm > 1e-8);
    CHECK(e.violated_direction.size() == 2);
    // The unreachable moment points along +e1, so the reported confinement
    // direction is -e1-ish.
    CHECK(e.violated_direction[0] < -0.5);
  }
}

TEST_CASE("eval_tilt nearest neighbor semantics") {
  TiltFunction t;
  t.z_points = Matrix(2, 1);
  t.z_points << 0.0, 1.0;
  t.f_values = Vector(2);
  t.f_values << 0.25, 0.75;
  t.weights = Vector::Constant(2, 0.5);
  t.lower_bound = 0.1;
  CHECK(eval_tilt(t, Vector::Constant(1, 1.0)) == doctest::Approx(0.75));
  CHECK(eval_tilt(t, Vector::Constant(1, 0.3)) == doctest::Approx(0.25));
  CHECK(eval_tilt(t, Vector::Constant(1, -5.0)) == doctest::Approx(0.25));

  TiltFunction c;
  c.z_points = Matrix::Zero(1, 1);
  c.f_values = Vector::Constant(1, 0.4);
  c.weights = Vector::Ones(1);
  c.lower_bound = 0.1;
  for (double q : {-2.0, 0.0, 3.5}) {
    CHECK(eval_tilt(c, Vector::Constant(1, q)) == doctest::Approx(0.4));
  }
}

TEST_CASE("batch evaluation matches scalar evaluation") {
  RngStream rng(8);
  TiltFunction t;
  t.z_points = Matrix(40, 3);
  t.f_values = Vector(40);
  for (int i = 0; i < 40; ++i) {
    for (int k = 0; k < 3; ++k) t.z_points(i, k) = rng.normal();
    t.f_values[i] = rng.uniform(0.2, 1.0);
  }
  t.weights = Vector::Constant(40, 1.0 / 40.0);
  t.lower_bound = 0.2;
  Matrix q(100, 3);
  for (int i = 0; i < 100; ++i) {
    for (int k = 0; k < 3; ++k) q(i, k) = rng.normal();
  }
  const Vector batch = eval_tilt_batch(t, q);
  for (int i = 0; i < 100; ++i) {
    CHECK(batch[i] == eval_tilt(t, q.row(i).transpose()));
  }
}

TEST_CASE("moment and bound invariants over random feasible instances") {
  RngStream rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int l = 1 + static_cast<int>(rng.uniform_index(5));
    const int m = 20 + static_cast<int>(rng.uniform_index(481));
    Matrix z = symmetric_cloud(m, l, rng);
    Vector w(m);
    for (int i = 0; i < m; ++i) w[i] = rng.uniform(0.5, 1.5);
    w /= w.sum();
    const double eps = rng.uniform(0.05, 0.5);
    const auto tilt = build_tilt(z, w, eps, rng.uniform(1.0, 3.0));
    CHECK(tilt.moment().norm() <= 1e-8);
    CHECK(tilt.f_values.minCoeff() >= tilt.lower_bound - 1e-12);
    CHECK(tilt.f_values.maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("one dimensional LP agrees with the interval oracle") {
  RngStream rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(30));
    Matrix z(m, 1);
    Vector w(m);
    for (int i = 0; i < m; ++i) {
      z(i, 0) = rng.normal();
      w[i] = rng.uniform(0.2, 1.0);
    }
    w /= w.sum();
    const double eps = rng.uniform(0.05, 0.5);
    const double cap = rng.uniform(1.0, 2.0);
    const double lb = eps / (4.0 * std::max(cap, 1.0));
    const Vector a = z.col(0).cwiseProduct(w);
    const double oracle = l1_oracle_1d(a, lb, 1.0);
    if (oracle <= 1e-10) {
      const auto tilt = build_tilt(z, w, eps, cap);
      CHECK(tilt.moment().norm() <= 1e-8);
    } else {
      CHECK_THROWS_AS(build_tilt(z, w, eps, cap), TiltInfeasibleError);
    }
  }
}

TEST_CASE("monotone feasibility in epsilon") {
  RngStream rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int l = 1 + static_cast<int>(rng.uniform_index(3));
    Matrix z = symmetric_cloud(60, l, rng);
    const Vector w = Vector::Constant(60, 1.0 / 60.0);
    const double eps_hi = rng.uniform(0.1, 0.5);
    const double eps_lo = eps_hi * rng.uniform(0.2, 0.9);
    bool hi_feasible = true;
    try {
      build_tilt(z, w, eps_hi, 1.0);
    } catch (const TiltInfeasibleError&) {
      hi_feasible = false;
    }
    if (hi_feasible) {
      CHECK_NOTHROW(build_tilt(z, w, eps_lo, 1.0));
    }
  }
}

TEST_CASE("aux moments are zeroed alongside the z moment") {
  RngStream rng(37);
  Matrix z = symmetric_cloud(100, 2, rng);
  Matrix aux = symmetric_cloud(100, 2, rng);
  const Vector w = Vector::Constant(100, 0.01);
  TiltBuildOptions opts;
  opts.aux_moment_points = &aux;
  const auto tilt = build_tilt(z, w, 0.2, 1.0, opts);
  CHECK(tilt.moment().norm() <= 1e-8);
  CHECK((aux.transpose() * w.cwiseProduct(tilt.f_values)).norm() <= 1e-8);
}

TEST_CASE("append with zero weight keeps the moment and serialization round-trips") {
  Matrix z(2, 1);
  z << 1, -1;
  const Vector w = Vector::Constant(2, 0.5);
  auto tilt = build_tilt(z, w, 0.2, 1.0);
  const double m0 = tilt.moment().norm();
  tilt_append_point(tilt, Vector::Constant(1, 0.37), 0.5, 0.0);
  CHECK(tilt.moment().norm() == doctest::Approx(m0));
  CHECK(eval_tilt(tilt, Vector::Constant(1, 0.37)) == doctest::Approx(0.5));

  const nlohmann::json j = tilt.to_json();
  const TiltFunction back = TiltFunction::from_json(j);
  CHECK((back.z_points - tilt.z_points).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.f_values - tilt.f_values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.lower_bound == tilt.lower_bound);
}

TEST_CASE("build_tilt validates its inputs") {
  Matrix z(2, 1);
  z << 1, -1;
  Vector w(2);
  w << 0.6, 0.6;
  CHECK_THROWS_AS(build_tilt(z, w, 0.2, 1.0), PreconditionError);
  CHECK_THROWS_AS(build_tilt(z, Vector::Constant(2, 0.5), 0.7, 1.0), PreconditionError);
  CHECK_THROWS_AS(build_tilt(z, Vector::Constant(2, 0.5), 0.0, 1.0), PreconditionError);
}

TEST_SUITE_END();
