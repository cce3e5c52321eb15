#ifndef BICX_BIC_EXPLORE_HPP
#define BICX_BIC_EXPLORE_HPP

#include <memory>
#include <string>
#include <vector>

#include "bicx/bandit_env.hpp"
#include "bicx/constants.hpp"
#include "bicx/geometry.hpp"
#include "bicx/posterior.hpp"
#include "bicx/priors.hpp"

namespace bicx {

// Persistent algorithm state: confirmed directions, their kappa-entry reward
// logs, and the spectral bookkeeping of M = sum_k v_k v_k^T.
struct ExplorationLedger {
  std::vector<UnitVector> dirs;
  std::vector<Vector> reward_logs;  // one per dir, exactly kappa entries
  GramState gram;
  int ell_lambda = 0;
  Matrix s_basis;  // d x ell_lambda, eigenvectors with eigenvalue >= lambda
  long t = 0;
};

struct StepRecord {
  long t = 0;
  Vector action;
  std::string phase;  // e1 | psi | growth | confirm
  double reward = 0.0;
  int repeat = 0;
  int iteration = 0;
  int chain_begin = 0;  // [chain_begin, chain_end) into TranscriptReport::signals
  int chain_end = 0;
  bool fallback = false;  // the exploit zero-mean branch produced this action
  double min_eig = 0.0;   // action-gram minimum eigenvalue after this pull
  double psperp = 0.0;    // ||P_{S_perp}(action)|| at play time
  int ell_lambda = 0;
  int j = 0;
};

struct TranscriptReport {
  int d = 0;
  std::vector<StepRecord> actions;
  std::vector<SignalRecord> signals;
  std::vector<std::shared_ptr<const TiltFunction>> tilts;
  std::vector<double> min_eig_trajectory;  // after each confirmed direction
  std::vector<std::string> warnings;
  long total_pulls = 0;
  double achieved_lambda = 0.0;
  bool certified = false;
  std::string failure;  // empty on success
};

struct RunOptions {
  int particles = 2000;
  int inner_n = 8;
  int z_subsample = 4000;
  int lp_var_cap = 40000;
  long max_steps = 200000;
  double zero_tol = -1.0;  // < 0 selects the default 1e-8 * sqrt(d)
  bool chain_scope = true; // false = condition each exploit on its last signal only
  double resample_ess_frac = 0.0;
};

// Exploration driver. run() is the whole procedure; the phase methods are
// public so tests and scenario scripts can exercise one stage at a time.
class BicExplorer {
 public:
  // prior must be canonicalized: E[l*_i] = 0 for i > 1 and E[l*_1] >= 0.
  BicExplorer(PriorSpec prior, ConstantsRegistry registry, RunOptions options,
              std::uint64_t seed);

  // Runs ceil(lambda_bar / lambda) repeats of the exploration procedure and
  // returns the accumulated transcript with its spectral certificate.
  TranscriptReport run(BanditHandle& env, double lambda_bar);

  // Stage API -------------------------------------------------------------
  void begin(BanditHandle& env);     // fresh repeat state + the e1 block
  bool spectral_done() const;        // min eig of the direction gram >= lambda
  void begin_iteration();            // eigensystem, ell_lambda, S, fresh chain
  UnitVector initial_exploration(BanditHandle& env);
  UnitVector exponential_growth(BanditHandle& env, const UnitVector& a);
  void confirm_direction(BanditHandle& env, const UnitVector& a);

  double psperp_norm(const Vector& v) const;
  bool last_exploit_fallback() const { return last_fallback_; }
  const ExplorationLedger& ledger() const { return ledger_; }
  const TranscriptReport& transcript() const { return report_; }
  TranscriptReport take_transcript() { return std::move(report_); }
  const ParticleCloud& prior_cloud() const { return prior_cloud_; }

 private:
  UnitVector fallback_direction() const;  // w_{ell_lambda + 1}
  UnitVector exploit_chain(bool* used_fallback);
  double pull_logged(BanditHandle& env, const UnitVector& a, const char* phase);
  void push_signal(SignalRecord rec);

  PriorSpec prior_;
  ConstantsRegistry reg_;
  RunOptions opt_;
  int d_ = 0;
  double zero_tol_ = 0.0;
  double mean_e1_ = 0.0;  // E[l*_1] of the canonical prior, fixed at start
  std::uint64_t seed_ = 0;
  RngStream coin_rng_;   // Psi coin + R selection
  RngStream fresh_rng_;  // dedicated logged stream for placebo normals

  ExplorationLedger ledger_;
  ParticleCloud prior_cloud_;
  ParticleCloud chain_cloud_;
  std::vector<SignalRecord> chain_;
  int chain_begin_ = 0;
  bool last_fallback_ = false;
  int repeat_ = 0;
  int iteration_ = 0;
  Matrix action_gram_;
  TranscriptReport report_;
};

// Debiased per-eigendirection reward estimate y_hat from the stored logs:
// y_hat_l = (1/n_y) sum_{t'<n_y} sum_k <v_k, w_l> / lambda_l * q_k[t'],
// distributed as <l*, w_l> + N(0, sd_model^2 / (n_y lambda_l)). The second
// return holds those per-coordinate noise variances.
std::pair<Vector, Vector> estimate_y_hat(const ExplorationLedger& ledger,
                                         const ConstantsRegistry& registry,
                                         double sd_model);

struct SpectralCheck {
  bool holds = false;
  double min_eig = 0.0;
};

// Exact certificate: minimum eigenvalue of sum over pulled actions of a a^T,
// compared against lambda_bar. No Monte Carlo anywhere.
SpectralCheck check_spectral(const TranscriptReport& transcript, double lambda_bar);

}  // namespace bicx

#endif  // BICX_BIC_EXPLORE_HPP
