#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "bicx/harness.hpp"

namespace {

using bicx::AuditReport;
using bicx::RunConfig;
using bicx::ScenarioReport;
using bicx::VerifyReport;

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

// Compact prior forms for `estimate --prior`:
//   gaussian:d=2[,var=0.5]   uniform_ball:d=2[,r=1]
//   box:h=0.6,0.6            file:PATH[,d=2]
bicx::PriorSpec parse_prior_arg(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw bicx::ConfigError("prior spec needs kind:args, got " + spec);
  }
  const std::string kind = spec.substr(0, colon);
  std::map<std::string, std::string> kv;
  std::vector<double> plain;
  std::string rest = spec.substr(colon + 1);
  std::stringstream ss(rest);
  std::string tok;
  std::string file_path;
  while (std::getline(ss, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      if (kind == "file" && file_path.empty()) {
        file_path = tok;
      } else {
        plain.push_back(std::stod(tok));
      }
    } else {
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
  }
  if (kind == "gaussian") {
    const int d = std::stoi(kv.at("d"));
    bicx::GaussianPrior g;
    g.mean = bicx::Vector::Zero(d);
    const double var = kv.count("var") ? std::stod(kv.at("var")) : 1.0;
    g.cov = var * bicx::Matrix::Identity(d, d);
    return g;
  }
  if (kind == "uniform_ball") {
    const int d = std::stoi(kv.at("d"));
    bicx::UniformBallPrior b;
    b.radius = kv.count("r") ? std::stod(kv.at("r")) : 1.0;
    b.center = bicx::Vector::Zero(d);
    return b;
  }
  if (kind == "box") {
    if (kv.count("h")) plain.push_back(std::stod(kv.at("h")));
    if (plain.empty()) throw bicx::ConfigError("box prior needs halfwidths");
    bicx::RRegularBody b;
    b.kind = bicx::RRegularBody::Kind::box;
    b.halfwidths = Eigen::Map<const bicx::Vector>(plain.data(),
                                                  static_cast<Eigen::Index>(plain.size()));
    b.r = kv.count("r") ? std::stod(kv.at("r")) : b.halfwidths.minCoeff();
    return b;
  }
  if (kind == "file") {
    const int d = kv.count("d") ? std::stoi(kv.at("d")) : -1;
    return bicx::load_empirical(file_path, d);
  }
  throw bicx::ConfigError("unknown prior kind " + kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BIC exploration simulator for linear bandits on the unit ball"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the exploration algorithm from a config");
  std::string run_config_path;
  std::string run_out = "out";
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  run->add_option("--config", run_config_path, "JSON config path")->required();
  run->add_option("--out", run_out, "output directory");
  run->add_option("--seed", run_seed, "seed override")->each([&](const std::string&) {
    run_seed_set = true;
  });

  auto* audit = app.add_subcommand("audit", "re-estimate BIC cosines from a trace");
  std::string audit_trace;
  int audit_particles = 100000;
  int audit_replicates = 1;
  std::uint64_t audit_seed = 1;
  std::string audit_out = "report.json";
  audit->add_option("--trace", audit_trace, "trace.jsonl path")->required();
  audit->add_option("--particles", audit_particles, "auditor cloud size");
  audit->add_option("--replicates", audit_replicates, "independent audit clouds");
  audit->add_option("--seed", audit_seed, "audit seed");
  audit->add_option("--out", audit_out, "report path");

  auto* verify = app.add_subcommand("verify", "run the lemma verification suites");
  std::string verify_suite = "all";
  std::uint64_t verify_seed = 2024;
  std::string verify_out = "report.json";
  verify->add_option("--suite", verify_suite, "all|geometry|appendixA");
  verify->add_option("--seed", verify_seed, "seed");
  verify->add_option("--out", verify_out, "report path");

  auto* estimate = app.add_subcommand("estimate", "estimate assumption constants");
  std::string est_prior;
  int est_samples = 40000;
  int est_dirs = 64;
  std::uint64_t est_seed = 1;
  estimate->add_option("--prior", est_prior, "prior spec, e.g. uniform_ball:d=2")
      ->required();
  estimate->add_option("--samples", est_samples, "sample count");
  estimate->add_option("--dirs", est_dirs, "probe directions");
  estimate->add_option("--seed", est_seed, "seed");

  auto* scenario = app.add_subcommand("scenario", "run a counterexample scenario");
  std::string scen_name;
  std::uint64_t scen_seed = 7;
  std::string scen_out = "report.json";
  scenario->add_option("--name", scen_name, "half_space|degenerate_variance")
      ->required();
  scenario->add_option("--seed", scen_seed, "seed");
  scenario->add_option("--out", scen_out, "report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      RunConfig cfg;
      try {
        cfg = RunConfig::from_file(run_config_path);
      } catch (const bicx::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
      if (run_seed_set) cfg.seed = run_seed;
      const auto artifacts = bicx::cmd_run(cfg, run_out);
      for (std::size_t i = 0; i < artifacts.transcripts.size(); ++i) {
        const auto& tr = artifacts.transcripts[i];
        std::printf("replicate %zu: pulls=%ld min_eig=%.6g certified=%s%s%s\n", i,
                    tr.total_pulls, tr.achieved_lambda, tr.certified ? "yes" : "no",
                    tr.failure.empty() ? "" : " failure=", tr.failure.c_str());
      }
      return artifacts.exit_code;
    }
    if (*audit) {
      const AuditReport rep =
          bicx::audit_bic(audit_trace, audit_particles, audit_replicates, audit_seed);
      write_json(rep.to_json(), audit_out);
      for (const auto& p : rep.phases) {
        std::printf("phase %-8s decisions=%3d zero_mean=%3d min_cos=%.4f median_cos=%.4f\n",
                    p.phase.c_str(), p.decisions, p.zero_mean_events, p.min_cos,
                    p.median_cos);
      }
      std::printf("audit %s (scope=%s)\n", rep.pass ? "PASS" : "FAIL",
                  rep.signal_scope.c_str());
      return rep.pass ? 0 : 1;
    }
    if (*verify) {
      const VerifyReport rep = bicx::verify_lemmas(verify_suite, verify_seed);
      write_json(rep.to_json(), verify_out);
      for (const auto& c : rep.cells) {
        std::printf("[%s] %-36s stat=%.6g bound=%.6g%s\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.stat, c.bound,
                    c.normative ? "" : " (non-normative)");
      }
      return rep.pass ? 0 : 1;
    }
    if (*estimate) {
      const auto prior = parse_prior_arg(est_prior);
      const auto ac = bicx::estimate_constants(prior, est_dirs, est_samples, est_seed);
      std::printf("c_d=%.6g eps_d=%.6g sigma_var=%.6g k_subg=%.6g\n", ac.c_d, ac.eps_d,
                  ac.sigma_var, ac.k_subg);
      return 0;
    }
    if (*scenario) {
      const ScenarioReport rep = bicx::run_scenario(scen_name, scen_seed);
      write_json(
          nlohmann::json{{"name", rep.name},
                         {"expectation_met", rep.expectation_met},
                         {"details", rep.details}},
          scen_out);
      std::printf("scenario %s: expectation %s\n", rep.name.c_str(),
                  rep.expectation_met ? "met" : "NOT met");
      return rep.expectation_met ? 0 : 1;
    }
  } catch (const bicx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
