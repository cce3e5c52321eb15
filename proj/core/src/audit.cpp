#include <algorithm>
#include <map>

#include "bicx/errors.hpp"
#include "bicx/harness.hpp"

namespace bicx {

namespace {

struct PhaseBucket {
  std::vector<double> cosines;
  int zero_mean = 0;
};

ParticleCloud audit_cloud(const PriorSpec& prior, int particles, std::uint64_t seed) {
  if (const auto* emp = std::get_if<EmpiricalPrior>(&prior)) {
    if (emp->points.rows() <= particles) {
      return cloud_from_weighted(emp->points, emp->weights, seed);
    }
  }
  return cloud_from_points(sample(prior, particles, seed), seed);
}

}  // namespace

AuditReport audit_bic(const std::string& trace_path, int particles, int replicates,
                      std::uint64_t seed) {
  if (particles < 1 || replicates < 1) {
    throw PreconditionError("audit_bic: counts must be >= 1");
  }
  const LoadedTrace lt = load_trace_jsonl(trace_path);
  const RunConfig& cfg = lt.config;

  std::map<std::string, PhaseBucket> buckets;
  for (int rep = 0; rep < replicates; ++rep) {
    const std::uint64_t rep_seed =
        splitmix64(seed ^ fnv1a("audit") ^ (0x9e3779b97f4a7c15ull * rep));
    const ParticleCloud cloud = audit_cloud(cfg.prior, particles, rep_seed);

    // The auditor's own conditional-mean context, mirroring the engine.
    std::shared_ptr<const ParticleCloud> zc;
    if (cloud.size() > cfg.options.z_subsample) {
      ParticleCloud rs = resample_systematic(cloud, splitmix64(rep_seed ^ fnv1a("zc")));
      ParticleCloud trimmed;
      trimmed.points = rs.points.topRows(cfg.options.z_subsample);
      trimmed.log_weights = Vector::Zero(cfg.options.z_subsample);
      trimmed.seed_lineage = rs.seed_lineage;
      zc = std::make_shared<ParticleCloud>(std::move(trimmed));
    } else {
      zc = std::make_shared<ParticleCloud>(cloud);
    }

    // Rebuild signals with the audit-side context injected into tilt events.
    std::vector<SignalRecord> signals = lt.transcript.signals;
    for (auto& s : signals) {
      if (auto* ev = std::get_if<TiltEvent>(&s)) ev->z_context = zc;
    }

    ParticleCloud cur = cloud;
    int applied = 0;
    int cur_begin = -1;
    long prev_key = -1;
    for (const auto& rec : lt.transcript.actions) {
      // One audit per unique recommendation: blocks repeat (chain, action).
      const long key = static_cast<long>(rec.chain_end) * 1000003 + rec.chain_begin;
      if (key == prev_key) continue;
      prev_key = key;

      if (rec.chain_begin != cur_begin || applied > rec.chain_end) {
        cur = cloud;
        applied = rec.chain_begin;
        cur_begin = rec.chain_begin;
      }
      while (applied < rec.chain_end) {
        cur = reweight(cur, signals[static_cast<std::size_t>(applied)]);
        ++applied;
      }
      const PosteriorMean pm = posterior_mean(cur);
      auto& bucket = buckets[rec.phase];
      if (rec.fallback || pm.norm <= 5.0 * pm.credible_radius + 1e-12) {
        // Zero-mean event: any action is posterior optimal; counted, not rated.
        ++bucket.zero_mean;
        continue;
      }
      const double cosine = rec.action.dot(pm.mean) / pm.norm;
      bucket.cosines.push_back(cosine);
    }
  }

  AuditReport report;
  report.replicates = replicates;
  report.signal_scope = cfg.signal_scope;
  for (auto& [phase, bucket] : buckets) {
    PhaseAudit pa;
    pa.phase = phase;
    pa.decisions = static_cast<int>(bucket.cosines.size()) + bucket.zero_mean;
    pa.zero_mean_events = bucket.zero_mean;
    if (!bucket.cosines.empty()) {
      std::sort(bucket.cosines.begin(), bucket.cosines.end());
      pa.min_cos = bucket.cosines.front();
      pa.median_cos = bucket.cosines[bucket.cosines.size() / 2];
      if (pa.median_cos < 0.95) {
        report.violations.push_back(phase);
        report.pass = false;
      }
    }
    report.phases.push_back(std::move(pa));
  }
  return report;
}

nlohmann::json AuditReport::to_json() const {
  nlohmann::json j;
  j["replicates"] = replicates;
  j["signal_scope"] = signal_scope;
  j["pass"] = pass;
  j["violations"] = violations;
  j["phases"] = nlohmann::json::array();
  for (const auto& p : phases) {
    j["phases"].push_back({{"phase", p.phase},
                           {"decisions", p.decisions},
                           {"zero_mean_events", p.zero_mean_events},
                           {"min_cos", p.min_cos},
                           {"median_cos", p.median_cos}});
  }
  return j;
}

}  // namespace bicx
