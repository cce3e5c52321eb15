#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bicx/bic_explore.hpp"
#include "bicx/rng.hpp"

using namespace bicx;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

EmpiricalPrior atoms(std::initializer_list<std::pair<Vector, double>> rows) {
  EmpiricalPrior e;
  e.points = Matrix(static_cast<Eigen::Index>(rows.size()), rows.begin()->first.size());
  e.weights = Vector(static_cast<Eigen::Index>(rows.size()));
  Eigen::Index i = 0;
  for (const auto& [p, w] : rows) {
    e.points.row(i) = p.transpose();
    e.weights[i] = w;
    ++i;
  }
  e.weights /= e.weights.sum();
  return e;
}

ConstantsRegistry small_scaled(int d) {
  return ConstantsRegistry::scaled(
      d, {{"lambda", 0.05}, {"kappa", 40}, {"n_y", 20}, {"eps_tilt", 0.2},
          {"p_select", 0.05}, {"c_L5", 1.0}});
}

RunOptions quick_options() {
  RunOptions opt;
  opt.particles = 600;
  opt.inner_n = 4;
  opt.max_steps = 60000;
  return opt;
}

}  // namespace

TEST_SUITE_BEGIN("bic_explore");

TEST_CASE("point-mass prior at e2 forces exploration of e2") {
  // Zero-noise deterministic pipeline trace.
  auto prior = atoms({{vec2(0, 1), 1.0}});
  auto env = Environment::spawn(PriorSpec(prior), 3, /*noise_sd=*/0.0);
  BicExplorer ex(PriorSpec(prior), small_scaled(2), quick_options(), 7);
  ex.begin(env);
  ex.begin_iteration();
  CHECK(ex.ledger().ell_lambda == 1);
  const UnitVector a = ex.initial_exploration(env);
  CHECK(a.coords()[1] > 0.0);
  CHECK(std::abs(a.coords()[1]) == doctest::Approx(1.0));
}

TEST_CASE("tilt conditioning zeroes the explored projection exactly on atom clouds") {
  // Four atoms, symmetric in the second coordinate; the first coordinate
  // straddles zero (positivity holds both ways) so the tilt has genuine work
  // to do.
  auto prior = atoms({{vec2(-0.5, 0.6), 0.2},
                      {vec2(-0.5, -0.6), 0.2},
                      {vec2(1.0, 0.6), 0.3},
                      {vec2(1.0, -0.6), 0.3}});
  auto reg = ConstantsRegistry::scaled(
      2, {{"lambda", 0.05}, {"kappa", 40}, {"n_y", 20}, {"eps_tilt", 0.1},
          {"p_select", 0.025}, {"c_L5", 1.0}});
  auto env = Environment::spawn(PriorSpec(prior), 11, 1.0);
  BicExplorer ex(PriorSpec(prior), reg, quick_options(), 13);
  ex.begin(env);
  ex.begin_iteration();
  (void)ex.initial_exploration(env);
  // The first chain signal is the tilt event; conditioning the pristine atom
  // cloud on it must leave zero mean along w_1 = e1 (Prop. logic: the
  // conditioned mean lives in the unexplored subspace).
  const auto& tr = ex.transcript();
  REQUIRE(tr.signals.size() >= 1);
  const TiltEvent* ev = nullptr;
  for (const auto& s : tr.signals) {
    if ((ev = std::get_if<TiltEvent>(&s))) break;
  }
  REQUIRE(ev != nullptr);
  TiltEvent observed = *ev;
  observed.observed = true;  // the Psi = 1 evidence regardless of the coin
  const auto conditioned = reweight(ex.prior_cloud(), observed);
  const auto pm = posterior_mean(conditioned);
  CHECK(std::abs(pm.mean[0]) < 1e-8);
}

TEST_CASE("exponential growth doubles deterministically without noise") {
  auto prior = atoms({{vec2(0, 1), 0.5}, {vec2(0, -1), 0.5}});
  for (double theta2 : {1.0, -1.0}) {
    auto env = Environment::with_theta(vec2(0, theta2), 5, /*noise_sd=*/0.0);
    BicExplorer ex(PriorSpec(prior), small_scaled(2), quick_options(), 21);
    ex.begin(env);
    ex.begin_iteration();
    const UnitVector a(vec2(std::sqrt(1.0 - 0.01), 0.1));
    CHECK(ex.psperp_norm(a.coords()) == doctest::Approx(0.1));
    const UnitVector b = ex.exponential_growth(env, a);
    // R aggregates L copies of <a, theta> with the e1 component debiased by
    // logs that are exactly zero here, so sign(R) = sign(theta_2) and the
    // indicator conditioning collapses the cloud onto the right atom.
    CHECK(b.coords()[1] == doctest::Approx(theta2));
    CHECK(ex.psperp_norm(b.coords()) == doctest::Approx(1.0));
    CHECK(ex.psperp_norm(b.coords()) >= 2.0 * 0.1);
  }
}

TEST_CASE("growth rejects actions inside the explored span") {
  auto prior = atoms({{vec2(0, 1), 0.5}, {vec2(0, -1), 0.5}});
  auto env = Environment::spawn(PriorSpec(prior), 5, 0.0);
  BicExplorer ex(PriorSpec(prior), small_scaled(2), quick_options(), 21);
  ex.begin(env);
  ex.begin_iteration();
  CHECK_THROWS_AS(ex.exponential_growth(env, UnitVector(vec2(1, 0))),
                  PreconditionError);
}

TEST_CASE("one dimension terminates after the first block") {
  GaussianPrior g;
  g.mean = Vector::Constant(1, 0.5);
  g.cov = Matrix::Constant(1, 1, 0.01);
  auto env = Environment::spawn(PriorSpec(g), 2, 1.0);
  BicExplorer ex(PriorSpec(g), small_scaled(1), quick_options(), 3);
  const auto report = ex.run(env, 0.05);
  CHECK(report.certified);
  CHECK(report.total_pulls == 40);  // exactly one kappa block
  CHECK(report.achieved_lambda >= 0.05);
  for (const auto& rec : report.actions) CHECK(rec.phase == "e1");
}

TEST_CASE("budget exhaustion flags a partial transcript") {
  GaussianPrior g;
  g.mean = Vector::Zero(2);
  g.cov = Matrix::Identity(2, 2);
  auto env = Environment::spawn(PriorSpec(g), 2, 1.0);
  RunOptions opt = quick_options();
  opt.max_steps = 10;  // below kappa
  BicExplorer ex(PriorSpec(g), small_scaled(2), opt, 3);
  const auto report = ex.run(env, 0.05);
  CHECK_FALSE(report.certified);
  CHECK(report.failure.find("budget_exceeded") != std::string::npos);
  CHECK(report.total_pulls == 10);
}

TEST_CASE("scaled run on the unit ball certifies and audits spectrally") {
  UniformBallPrior ball;
  ball.radius = 1.0;
  ball.center = Vector::Zero(2);
  auto env = Environment::spawn(PriorSpec(ball), 17, 1.0);
  BicExplorer ex(PriorSpec(ball), small_scaled(2), quick_options(), 23);
  const auto report = ex.run(env, 0.05);
  CHECK(report.failure.empty());
  CHECK(report.certified);
  const auto cert = check_spectral(report, 0.05);
  CHECK(cert.holds);
  CHECK(cert.min_eig == doctest::Approx(report.achieved_lambda));
  // Outer-loop progress: the certificate trajectory never decreases.
  for (std::size_t i = 1; i < report.min_eig_trajectory.size(); ++i) {
    CHECK(report.min_eig_trajectory[i] >= report.min_eig_trajectory[i - 1] - 1e-12);
  }
  // Every action is unit norm.
  for (const auto& rec : report.actions) {
    CHECK(std::abs(rec.action.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("check_spectral examples") {
  TranscriptReport tr;
  tr.d = 2;
  StepRecord r1;
  r1.action = vec2(1, 0);
  StepRecord r2;
  r2.action = vec2(0, 1);
  tr.actions = {r1, r2};
  auto c = check_spectral(tr, 1.0);
  CHECK(c.holds);
  CHECK(c.min_eig == doctest::Approx(1.0));

  tr.actions = {r1};
  c = check_spectral(tr, 0.1);
  CHECK_FALSE(c.holds);
  CHECK(c.min_eig == doctest::Approx(0.0));

  // Hand characteristic polynomial oracle: M = 3 * [[.5,.5],[.5,.5]] + e1 e1'
  // has trace 4, det 1.5, so min eig = (4 - sqrt(10)) / 2.
  StepRecord diag;
  diag.action = vec2(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  tr.actions = {diag, diag, diag, r1};
  c = check_spectral(tr, 0.3);
  const double oracle = (4.0 - std::sqrt(10.0)) / 2.0;
  CHECK(c.min_eig == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(c.holds == (oracle >= 0.3));
}

TEST_CASE("transcript chains replay to the recorded actions") {
  // Audit hook: recomputing the exploit from the stored chain with the same
  // cloud reproduces each non-fallback recommendation bitwise.
  UniformBallPrior ball;
  ball.radius = 1.0;
  ball.center = Vector::Zero(2);
  auto env = Environment::spawn(PriorSpec(ball), 31, 1.0);
  RunOptions opt = quick_options();
  BicExplorer ex(PriorSpec(ball), small_scaled(2), opt, 29);
  const auto report = ex.run(env, 0.05);
  REQUIRE(report.certified);

  const double zero_tol = 1e-8 * std::sqrt(2.0);
  int replayed = 0;
  for (const auto& rec : report.actions) {
    if (rec.phase == "e1" || rec.fallback) continue;
    if (rec.chain_end == rec.chain_begin) continue;
    ParticleCloud c = ex.prior_cloud();
    for (int s = rec.chain_begin; s < rec.chain_end; ++s) {
      c = reweight(c, report.signals[static_cast<std::size_t>(s)]);
    }
    const auto pm = posterior_mean(c);
    REQUIRE(pm.norm > zero_tol);
    const Vector replay = pm.mean / pm.norm;
    CHECK((replay - rec.action).cwiseAbs().maxCoeff() == 0.0);
    ++replayed;
  }
  CHECK(replayed > 0);
}

TEST_SUITE_END();
