#include <doctest.h>

#include <cmath>

#include "bicx/bandit_env.hpp"

using namespace bicx;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("bandit_env");

TEST_CASE("noise-free pulls are exact inner products") {
  auto env = Environment::with_theta(vec2(0.6, 0.8), 1, 0.0);
  CHECK(env.pull(UnitVector(vec2(1, 0))) == 0.6);
  CHECK(env.pull(UnitVector(vec2(0.6, 0.8))) == doctest::Approx(1.0));
  CHECK(env.t() == 2);
}

TEST_CASE("spawn is reproducible and point masses are exact") {
  EmpiricalPrior e;
  e.points = Matrix(1, 2);
  e.points << 0.3, -0.4;
  e.weights = Vector::Ones(1);
  const auto env = Environment::spawn(PriorSpec(e), 5);
  CHECK(env.hidden_theta_for_evaluation()[0] == 0.3);
  CHECK(env.hidden_theta_for_evaluation()[1] == -0.4);

  GaussianPrior g;
  g.mean = Vector::Zero(2);
  g.cov = Matrix::Identity(2, 2);
  const auto a = Environment::spawn(PriorSpec(g), 9);
  const auto b = Environment::spawn(PriorSpec(g), 9);
  CHECK((a.hidden_theta_for_evaluation() - b.hidden_theta_for_evaluation()).norm() == 0.0);
}

TEST_CASE("spawned thetas average to the prior mean") {
  GaussianPrior g;
  g.mean = Vector::Zero(2);
  g.cov = Matrix::Identity(2, 2);
  Vector acc = Vector::Zero(2);
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    acc += Environment::spawn(PriorSpec(g), 1000 + s).hidden_theta_for_evaluation();
  }
  acc /= n;
  CHECK(acc.cwiseAbs().maxCoeff() < 0.05);  // CLT: 3/sqrt(n) * sd = 0.03
}

TEST_CASE("reward stream has the configured noise variance") {
  auto env = Environment::with_theta(vec2(0.6, 0.8), 3, 1.0);
  const UnitVector a(vec2(1, 0));
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = env.pull(a);
    sum += r;
    sumsq += r * r;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 0.6) < 3.0 / std::sqrt(static_cast<double>(n)) + 1e-9);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
  CHECK(env.t() == n);  // accounting is exact
}

TEST_CASE("non-unit actions are rejected") {
  auto env = Environment::with_theta(vec2(1, 0), 1, 0.0);
  Vector bad(2);
  bad << 1.0, 0.01;  // norm off unit by ~5e-5, beyond the 1e-6 accounting tolerance
  CHECK_THROWS_AS(env.pull(UnitVector(bad, /*tol=*/1e-3)), PreconditionError);
  CHECK(env.t() == 0);
}

TEST_SUITE_END();
