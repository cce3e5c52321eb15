#include "bicx/bic_explore.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "bicx/errors.hpp"

namespace bicx {

namespace {

constexpr double kExactZero = 1e-12;

double min_eig_of(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().minCoeff();
}

ParticleCloud build_prior_cloud(const PriorSpec& prior, int particles,
                                std::uint64_t seed) {
  // Small empirical priors are kept as exact atoms so discrete conditional
  // expectations carry no sampling error.
  if (const auto* emp = std::get_if<EmpiricalPrior>(&prior)) {
    if (emp->points.rows() <= particles) {
      return cloud_from_weighted(emp->points, emp->weights, seed);
    }
  }
  return cloud_from_points(sample(prior, particles, seed), seed);
}

}  // namespace

BicExplorer::BicExplorer(PriorSpec prior, ConstantsRegistry registry,
                         RunOptions options, std::uint64_t seed)
    : prior_(std::move(prior)),
      reg_(registry),
      opt_(options),
      seed_(seed),
      coin_rng_(seed, "alg-coins"),
      fresh_rng_(seed, "alg-fresh-normals") {
  validate_prior(prior_);
  d_ = prior_dim(prior_);
  reg_.validate(d_);
  mean_e1_ = std::max(0.0, prior_mean(prior_)[0]);
  zero_tol_ = opt_.zero_tol >= 0.0 ? opt_.zero_tol : 1e-8 * std::sqrt(double(d_));
  prior_cloud_ = build_prior_cloud(prior_, opt_.particles, splitmix64(seed ^ fnv1a("cloud")));
  chain_cloud_ = prior_cloud_;
  action_gram_ = Matrix::Zero(d_, d_);
  report_.d = d_;
}

double BicExplorer::psperp_norm(const Vector& v) const {
  if (ledger_.s_basis.cols() == 0) return v.norm();
  return (v - ledger_.s_basis * (ledger_.s_basis.transpose() * v)).norm();
}

UnitVector BicExplorer::fallback_direction() const {
  if (ledger_.ell_lambda >= d_) {
    throw PreconditionError("fallback: explored subspace already spans R^d");
  }
  return UnitVector(ledger_.gram.eigvecs.col(ledger_.ell_lambda));
}

double BicExplorer::pull_logged(BanditHandle& env, const UnitVector& a,
                                const char* phase) {
  if (report_.total_pulls >= opt_.max_steps) {
    throw BudgetExceededError("max_steps reached during phase " + std::string(phase));
  }
  const double reward = env.pull(a);
  action_gram_.noalias() += a.coords() * a.coords().transpose();
  StepRecord rec;
  rec.t = env.t();
  rec.action = a.coords();
  rec.phase = phase;
  rec.reward = reward;
  rec.repeat = repeat_;
  rec.iteration = iteration_;
  rec.chain_begin = chain_begin_;
  rec.chain_end = static_cast<int>(report_.signals.size());
  rec.fallback = last_fallback_;
  rec.min_eig = min_eig_of(action_gram_);
  rec.psperp = psperp_norm(a.coords());
  rec.ell_lambda = ledger_.ell_lambda;
  rec.j = static_cast<int>(ledger_.dirs.size());
  report_.actions.push_back(std::move(rec));
  ++report_.total_pulls;
  ledger_.t = env.t();
  return reward;
}

void BicExplorer::push_signal(SignalRecord rec) {
  chain_.push_back(rec);
  report_.signals.push_back(std::move(rec));
}

UnitVector BicExplorer::exploit_chain(bool* used_fallback) {
  const ParticleCloud* c = &chain_cloud_;
  ParticleCloud single;
  if (!opt_.chain_scope && !chain_.empty()) {
    single = reweight(prior_cloud_, chain_.back());
    c = &single;
  }
  const PosteriorMean pm = posterior_mean(*c);
  if (pm.norm > zero_tol_) {
    if (used_fallback) *used_fallback = false;
    return UnitVector(pm.mean / pm.norm);
  }
  if (used_fallback) *used_fallback = true;
  return fallback_direction();
}

void BicExplorer::begin(BanditHandle& env) {
  if (env.dim() != d_) throw DimensionError("begin: environment dimension mismatch");
  ledger_ = ExplorationLedger{};
  ledger_.gram = gram_init(d_);
  iteration_ = 0;
  chain_.clear();
  chain_begin_ = static_cast<int>(report_.signals.size());
  last_fallback_ = false;

  // First phase: e1 is BIC under the canonical prior (kept deterministically
  // even when E[l*_1] = 0, where every action is BIC).
  const UnitVector e1(Vector::Unit(d_, 0));
  Vector log(reg_.kappa);
  for (long i = 0; i < reg_.kappa; ++i) log[i] = pull_logged(env, e1, "e1");
  ledger_.dirs.push_back(e1);
  ledger_.reward_logs.push_back(std::move(log));
  ledger_.gram = eigendecompose(gram_update(ledger_.gram, e1));
  report_.min_eig_trajectory.push_back(min_eig_of(action_gram_));
}

bool BicExplorer::spectral_done() const {
  if (ledger_.dirs.empty()) return false;
  const GramState& g = ledger_.gram;
  return !g.dirty && g.eigvals[d_ - 1] >= reg_.lambda - 1e-12;
}

void BicExplorer::begin_iteration() {
  if (ledger_.dirs.empty()) throw PreconditionError("begin_iteration: run begin() first");
  if (ledger_.gram.dirty) ledger_.gram = eigendecompose(ledger_.gram);
  int ell = 0;
  while (ell < d_ && ledger_.gram.eigvals[ell] >= reg_.lambda - 1e-12) ++ell;
  ledger_.ell_lambda = ell;
  ledger_.s_basis = ledger_.gram.eigvecs.leftCols(ell);
  chain_.clear();
  chain_begin_ = static_cast<int>(report_.signals.size());
  chain_cloud_ = prior_cloud_;
  last_fallback_ = false;
  ++iteration_;
}

std::pair<Vector, Vector> estimate_y_hat(const ExplorationLedger& ledger,
                                         const ConstantsRegistry& registry,
                                         double sd_model) {
  const int ell = ledger.ell_lambda;
  if (ell < 1 || ledger.dirs.empty()) {
    throw PreconditionError("estimate_y_hat: needs at least one explored direction");
  }
  const long n_y = registry.n_y;
  if (n_y > registry.kappa) throw PreconditionError("estimate_y_hat: n_y > kappa");
  const int j = static_cast<int>(ledger.dirs.size());
  // Coefficient 1/n_y equals the nominal lambda * c_l7 whenever
  // 1/(lambda c_l7) is an integer.
  Vector y_hat(ell), noise_vars(ell);
  for (int l = 0; l < ell; ++l) {
    const double lam_l = ledger.gram.eigvals[l];
    double acc = 0.0;
    for (int k = 0; k < j; ++k) {
      const double coef = ledger.dirs[k].dot(ledger.s_basis.col(l)) / lam_l;
      for (long tp = 0; tp < n_y; ++tp) acc += coef * ledger.reward_logs[k][tp];
    }
    y_hat[l] = acc / static_cast<double>(n_y);
    noise_vars[l] = sd_model * sd_model / (static_cast<double>(n_y) * lam_l);
  }
  return {y_hat, noise_vars};
}

UnitVector BicExplorer::initial_exploration(BanditHandle& env) {
  const int ell = ledger_.ell_lambda;
  if (ell < 1 || ledger_.dirs.empty()) {
    throw PreconditionError("initial_exploration: needs at least the e1 phase");
  }
  const Matrix& basis = ledger_.s_basis;
  const double sd_model = env.noise_sd() > 0.0 ? env.noise_sd() : 1.0;
  const auto [y_hat, noise_vars] = estimate_y_hat(ledger_, reg_, sd_model);

  // Conditional-mean context (subsampled for large clouds).
  std::shared_ptr<const ParticleCloud> zc;
  if (prior_cloud_.size() > opt_.z_subsample) {
    zc = std::make_shared<ParticleCloud>(resample_systematic(
        prior_cloud_, splitmix64(seed_ ^ fnv1a("z-context") ^ (iteration_ * 0x9e37ull))));
    ParticleCloud trimmed;
    trimmed.points = zc->points.topRows(opt_.z_subsample);
    trimmed.log_weights = Vector::Zero(opt_.z_subsample);
    trimmed.seed_lineage = zc->seed_lineage;
    zc = std::make_shared<ParticleCloud>(std::move(trimmed));
  } else {
    zc = std::make_shared<ParticleCloud>(prior_cloud_);
  }

  // Tilt sample: every particle paired with the common inner noise draws, so
  // the LP zeroes both the z moment and the realized cloud moment, and the
  // tilt-conditioned mean lands exactly in S_perp.
  const std::uint64_t inner_seed =
      splitmix64(seed_ ^ fnv1a("tilt-inner") ^ (0x100ull * iteration_ + repeat_));
  long n_src = prior_cloud_.size();
  ParticleCloud sources = prior_cloud_;
  if (n_src * opt_.inner_n > opt_.lp_var_cap) {
    const long cap_src = std::max<long>(1, opt_.lp_var_cap / opt_.inner_n);
    ParticleCloud rs = resample_systematic(
        prior_cloud_, splitmix64(seed_ ^ fnv1a("tilt-sources") ^ iteration_));
    sources.points = rs.points.topRows(cap_src);
    sources.log_weights = Vector::Zero(cap_src);
    n_src = cap_src;
  }
  RngStream noise_rng(inner_seed, "tilt-inner-noise");
  Matrix xi(opt_.inner_n, ell);
  for (int k = 0; k < opt_.inner_n; ++k) {
    for (int l = 0; l < ell; ++l) xi(k, l) = std::sqrt(noise_vars[l]) * noise_rng.normal();
  }
  const Matrix src_proj = sources.points * basis;  // n_src x ell
  const Vector src_w = [&] {
    Vector lw = sources.log_weights;
    const double lse = logsumexp(lw);
    return Vector((lw.array() - lse).exp());
  }();

  const long m_all = n_src * opt_.inner_n;
  Matrix z_samples(m_all, ell), aux(m_all, ell);
  Vector w_samples(m_all);
  for (long i = 0; i < n_src; ++i) {
    for (int k = 0; k < opt_.inner_n; ++k) {
      const Vector q = (src_proj.row(i) + xi.row(k)).transpose();
      z_samples.row(i * opt_.inner_n + k) = z_map(q, *zc, basis, noise_vars).transpose();
      aux.row(i * opt_.inner_n + k) = src_proj.row(i);
      w_samples[i * opt_.inner_n + k] = src_w[i] / opt_.inner_n;
    }
  }
  // Quantize to a coarse grid so saturated conditional means collapse to
  // bit-identical sample points. The LP must not split f across points that
  // nearest-neighbor evaluation cannot tell apart.
  constexpr double kZGrid = 1e-6;
  z_samples = (z_samples / kZGrid).array().round().matrix() * kZGrid;

  // Merge bit-identical (z, x*) columns so nearest-neighbor evaluation gives
  // every copy the same f value the LP assumed.
  {
    std::map<std::vector<double>, long> seen;
    std::vector<long> keep;
    Vector merged_w = Vector::Zero(m_all);
    for (long i = 0; i < m_all; ++i) {
      std::vector<double> key;
      key.reserve(2 * ell);
      for (int l = 0; l < ell; ++l) key.push_back(z_samples(i, l));
      for (int l = 0; l < ell; ++l) key.push_back(aux(i, l));
      auto [it, inserted] = seen.emplace(std::move(key), static_cast<long>(keep.size()));
      if (inserted) keep.push_back(i);
      merged_w[it->second] += w_samples[i];
    }
    if (static_cast<long>(keep.size()) < m_all) {
      Matrix z2(keep.size(), ell), a2(keep.size(), ell);
      for (std::size_t i = 0; i < keep.size(); ++i) {
        z2.row(i) = z_samples.row(keep[i]);
        a2.row(i) = aux.row(keep[i]);
      }
      z_samples = std::move(z2);
      aux = std::move(a2);
      w_samples = merged_w.head(keep.size());
    }
  }
  w_samples /= w_samples.sum();

  TiltBuildOptions topt;
  topt.aux_moment_points = &aux;
  topt.spot_check_seed = inner_seed;
  topt.warn = [this](const std::string& msg) { report_.warnings.push_back(msg); };
  TiltFunction tilt;
  try {
    tilt = build_tilt(z_samples, w_samples, reg_.eps_tilt, reg_.mean_norm_cap, topt);
  } catch (const TiltInfeasibleError&) {
    // The joint system (z moment plus the realized cloud moment) can be
    // confined in a z-vs-x* contrast direction at finite sample even when
    // the z marginal is healthy. Fall back to the plain construction; a
    // genuinely confined prior still fails here and propagates.
    TiltBuildOptions plain = topt;
    plain.aux_moment_points = nullptr;
    tilt = build_tilt(z_samples, w_samples, reg_.eps_tilt, reg_.mean_norm_cap, plain);
    report_.warnings.push_back(
        "initial_exploration: joint tilt moments infeasible; using the plain "
        "z-moment construction for this iteration");
  }

  // Realized z; appended after the solve so eval never extrapolates.
  const Vector z_real = z_map(y_hat, *zc, basis, noise_vars);
  const double f_real = eval_tilt(tilt, z_real);
  tilt_append_point(tilt, z_real, f_real, 0.0);

  const bool psi = coin_rng_.uniform() < f_real;
  auto tilt_sp = std::make_shared<const TiltFunction>(std::move(tilt));
  report_.tilts.push_back(tilt_sp);

  TiltEvent ev;
  ev.tilt = tilt_sp;
  ev.z_context = zc;
  ev.basis = basis;
  ev.noise_vars = noise_vars;
  ev.observed = psi;
  ev.inner_n = opt_.inner_n;
  ev.seed = inner_seed;
  push_signal(ev);

  // The action that a Psi = 1 draw commits to; it is y-hat-measurable, so the
  // later sign(R) record can reference it whatever the coin showed. The tilt
  // makes the true conditional mean vanish here, so a mean within its own
  // Monte-Carlo error of zero takes the fallback branch: construction
  // residue must not masquerade as a direction.
  TiltEvent ev_one = ev;
  ev_one.observed = true;
  bool psi_one_fallback = false;
  const UnitVector psi_one_action = [&] {
    const ParticleCloud c = reweight(prior_cloud_, SignalRecord(ev_one));
    const PosteriorMean pm = posterior_mean(c);
    if (pm.norm > std::max(zero_tol_, 5.0 * pm.credible_radius)) {
      return UnitVector(pm.mean / pm.norm);
    }
    psi_one_fallback = true;
    return fallback_direction();
  }();

  // Played step: Exploit on the realized coin.
  UnitVector action = psi_one_action;
  if (psi) {
    last_fallback_ = psi_one_fallback;
    chain_cloud_ = reweight(chain_cloud_, chain_.back());
  } else {
    chain_cloud_ = reweight(chain_cloud_, chain_.back());
    action = exploit_chain(&last_fallback_);
  }
  const double reward = pull_logged(env, action, "psi");

  // Selection probability p_select / f keeps P(R = real reward) = p_select
  // for every y-hat, which is what the sign(R) conditioning below relies on.
  const double q_sel = reg_.p_select / f_real;
  if (q_sel > 1.0 + 1e-9) {
    throw PreconditionError("initial_exploration: invalid selection probability");
  }
  double big_r;
  if (psi && coin_rng_.uniform() < q_sel) {
    big_r = reward;
  } else {
    big_r = fresh_rng_.normal();
  }

  // The returned action conditions on sign(R) with Psi marginalized out (the
  // Exploit(1_{R>0}, v) reading): the reward-vs-placebo mixture carries the
  // unexplored-direction signal on every branch of the coin. The tilt record
  // above justifies only the one step just played, so the forward chain for
  // this iteration restarts at the mixture record.
  chain_.clear();
  chain_begin_ = static_cast<int>(report_.signals.size());
  chain_cloud_ = prior_cloud_;
  MixtureSign mix;
  mix.action = psi_one_action.coords();
  mix.select_prob = reg_.p_select;
  mix.sign = big_r > 0.0 ? +1 : -1;
  mix.noise_sd = env.noise_sd();
  push_signal(mix);
  chain_cloud_ = reweight(chain_cloud_, chain_.back());

  return exploit_chain(&last_fallback_);
}

UnitVector BicExplorer::exponential_growth(BanditHandle& env, const UnitVector& a) {
  const int ell = ledger_.ell_lambda;
  if (ell < 1) throw PreconditionError("exponential_growth: no explored subspace");
  const Vector perp = a.coords() - ledger_.s_basis * (ledger_.s_basis.transpose() * a.coords());
  const double pn = perp.norm();
  if (pn <= kExactZero) {
    throw PreconditionError("exponential_growth: action lies in the explored span");
  }
  if (pn > std::sqrt(reg_.lambda) + 1e-9) {
    throw PreconditionError("exponential_growth: ||P_perp(a)|| already above sqrt(lambda)");
  }
  const Vector ps = a.coords() - perp;
  const Vector c = combo_coefficients(ps, ledger_.dirs, ledger_.gram, ell, reg_.lambda);
  const double sumc2 = c.squaredNorm();
  const int j = static_cast<int>(ledger_.dirs.size());

  long big_l;
  if (reg_.l_override > 0) {
    big_l = reg_.l_override;
  } else {
    big_l = static_cast<long>(std::ceil(
        4.0 * d_ * (mean_e1_ + 1.0) * (mean_e1_ + 1.0) * (1.0 + sumc2) /
        (reg_.c_l5 * reg_.c_l5)));
  }
  if (big_l > reg_.kappa) {
    if (reg_.mode == ConstantsRegistry::Mode::theoretical) {
      throw LogExhaustedError("exponential_growth: L = " + std::to_string(big_l) +
                              " exceeds kappa = " + std::to_string(reg_.kappa));
    }
    report_.warnings.push_back("exponential_growth: L " + std::to_string(big_l) +
                               " wraps around kappa " + std::to_string(reg_.kappa));
  }

  double big_r = 0.0;
  for (long i = 0; i < big_l; ++i) {
    const double r = pull_logged(env, a, "growth");
    double debias = 0.0;
    for (int k = 0; k < j; ++k) {
      debias += c[k] * ledger_.reward_logs[k][i % reg_.kappa];
    }
    big_r += r - debias;
  }

  SignThreshold st;
  st.coef = static_cast<double>(big_l) * perp;
  st.noise_sd = env.noise_sd() * std::sqrt(static_cast<double>(big_l) * (1.0 + sumc2));
  st.sign = big_r > 0.0 ? +1 : -1;
  push_signal(st);
  chain_cloud_ = reweight(chain_cloud_, chain_.back());

  return exploit_chain(&last_fallback_);
}

void BicExplorer::confirm_direction(BanditHandle& env, const UnitVector& a) {
  Vector log(reg_.kappa);
  for (long i = 0; i < reg_.kappa; ++i) log[i] = pull_logged(env, a, "confirm");
  ledger_.dirs.push_back(a);
  ledger_.reward_logs.push_back(std::move(log));
  ledger_.gram = eigendecompose(gram_update(ledger_.gram, a));
  report_.min_eig_trajectory.push_back(min_eig_of(action_gram_));
}

TranscriptReport BicExplorer::run(BanditHandle& env, double lambda_bar) {
  if (lambda_bar <= 0.0) throw PreconditionError("run: lambda_bar must be positive");
  // The e1 phase is prior-BIC only for canonical priors.
  const Vector mean = prior_mean(prior_);
  for (int i = 1; i < d_; ++i) {
    if (std::abs(mean[i]) > 1e-9) {
      throw PreconditionError("run: prior is not canonicalized (nonzero mean off e1)");
    }
  }
  if (mean[0] < -1e-9) {
    throw PreconditionError("run: canonical prior mean must be nonnegative on e1");
  }
  const long repeats = static_cast<long>(std::ceil(lambda_bar / reg_.lambda - 1e-12));
  try {
    for (repeat_ = 0; repeat_ < repeats; ++repeat_) {
      begin(env);
      while (!spectral_done()) {
        begin_iteration();
        UnitVector a = initial_exploration(env);
        bool degenerate = false;
        while (psperp_norm(a.coords()) <= std::sqrt(reg_.lambda)) {
          if (psperp_norm(a.coords()) <= kExactZero) {
            // Exactly-zero unexplored component (symmetric discrete priors).
            // Retry the iteration with fresh coins; max_steps bounds the loop.
            degenerate = true;
            break;
          }
          a = exponential_growth(env, a);
        }
        if (degenerate) continue;
        confirm_direction(env, a);
      }
    }
  } catch (const BudgetExceededError& e) {
    report_.failure = std::string("budget_exceeded: ") + e.what();
  } catch (const TiltInfeasibleError& e) {
    report_.failure = std::string("tilt_infeasible at iteration ") +
                      std::to_string(iteration_) + ": " + e.what();
  } catch (const DegeneratePosteriorError& e) {
    report_.failure = std::string("degenerate_posterior at iteration ") +
                      std::to_string(iteration_) + ": " + e.what();
  } catch (const LogExhaustedError& e) {
    report_.failure = std::string("log_exhausted at iteration ") +
                      std::to_string(iteration_) + ": " + e.what();
  }

  const SpectralCheck cert = check_spectral(report_, lambda_bar);
  report_.achieved_lambda = cert.min_eig;
  report_.certified = cert.holds && report_.failure.empty();
  return report_;
}

SpectralCheck check_spectral(const TranscriptReport& transcript, double lambda_bar) {
  if (transcript.actions.empty()) {
    throw PreconditionError("check_spectral: empty transcript");
  }
  const Eigen::Index d = transcript.actions.front().action.size();
  Matrix gram = Matrix::Zero(d, d);
  for (const auto& rec : transcript.actions) {
    gram.noalias() += rec.action * rec.action.transpose();
  }
  SpectralCheck out;
  out.min_eig = min_eig_of(gram);
  out.holds = out.min_eig >= lambda_bar - 1e-9;
  return out;
}

}  // namespace bicx
