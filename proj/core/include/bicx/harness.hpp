#ifndef BICX_HARNESS_HPP
#define BICX_HARNESS_HPP

#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "bicx/bic_explore.hpp"

namespace bicx {

// Run configuration. One JSON document; unknown keys are rejected so constant
// misconfiguration fails loudly instead of silently.
struct RunConfig {
  int d = 2;
  PriorSpec prior = UniformBallPrior{1.0, Vector::Zero(2)};
  double lambda_bar = 0.05;
  std::string mode = "scaled";  // scaled | theoretical
  std::map<std::string, double> constants;
  RunOptions options;
  double noise_sd = 1.0;
  int replicates = 1;
  std::uint64_t seed = 1;
  std::string signal_scope = "chain";  // chain | single
  int estimate_dirs = 64;
  int estimate_samples = 20000;
  bool has_assumption_constants = false;
  AssumptionConstants assumption_constants;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
  ConstantsRegistry build_registry() const;
};

nlohmann::json prior_to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const nlohmann::json& j, int expected_dim);

// --- trace persistence ------------------------------------------------------

// metrics.csv: schema comment line, then
// t,phase,j,ell_lambda,min_eig,psperp_a,reward — one row per pull.
void write_metrics_csv(const TranscriptReport& report, const std::string& path);

// trace.jsonl: one object per event ({kind, ...}): header (config + seed),
// tilt table, signal records, per-pull action rows, final certificate line.
void write_trace_jsonl(const RunConfig& config, const TranscriptReport& report,
                       const std::string& path);

struct LoadedTrace {
  RunConfig config;  // canonicalized prior as run
  TranscriptReport transcript;
};
LoadedTrace load_trace_jsonl(const std::string& path);

// --- run driver --------------------------------------------------------------

struct RunArtifacts {
  std::vector<TranscriptReport> transcripts;  // one per replicate
  std::vector<std::string> trace_paths;
  std::vector<std::string> metrics_paths;
  int exit_code = 0;  // 0 certified, 2 config error, 3 budget, 1 other failure
};
RunArtifacts cmd_run(const RunConfig& config, const std::string& out_dir);

// --- BIC audit ---------------------------------------------------------------

struct PhaseAudit {
  std::string phase;
  int decisions = 0;       // unique recommendations audited
  int zero_mean_events = 0;  // fallback branch / statistically-zero means
  double min_cos = 1.0;
  double median_cos = 1.0;
};

struct AuditReport {
  std::vector<PhaseAudit> phases;
  int replicates = 1;
  std::string signal_scope;
  std::vector<std::string> violations;  // phases with median cosine < 0.95
  bool pass = true;
  nlohmann::json to_json() const;
};

// Re-estimates E[l* | signal chain] for every recommendation with an
// independent particle cloud and reports cos(recommendation, estimate) per
// phase. Zero-mean events (where any action is optimal) are excluded from the
// cosine statistics and counted separately.
AuditReport audit_bic(const std::string& trace_path, int particles, int replicates,
                      std::uint64_t seed);

// --- lemma verification -------------------------------------------------------

struct VerifyCell {
  std::string name;
  bool pass = true;
  bool normative = true;
  double stat = 0.0;
  double bound = 0.0;
  std::string note;
};

struct VerifyReport {
  std::vector<VerifyCell> cells;
  bool pass = true;
  nlohmann::json to_json() const;
};

// suite: all | geometry | appendixA
VerifyReport verify_lemmas(const std::string& suite, std::uint64_t seed);

// --- counterexample scenarios ---------------------------------------------------

struct ScenarioReport {
  std::string name;
  bool expectation_met = false;
  nlohmann::json details;
};

// name: half_space | degenerate_variance
ScenarioReport run_scenario(const std::string& name, std::uint64_t seed);

}  // namespace bicx

#endif  // BICX_HARNESS_HPP
