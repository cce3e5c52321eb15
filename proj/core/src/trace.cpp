#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bicx/errors.hpp"
#include "bicx/harness.hpp"

namespace bicx {

namespace {

using nlohmann::json;

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json vec_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Vector vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
  }
  return rows;
}

Matrix mat_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

}  // namespace

void write_metrics_csv(const TranscriptReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_metrics_csv: cannot open " + path);
  out << "# bicx-metrics-v1\n";
  out << "t,phase,j,ell_lambda,min_eig,psperp_a,reward\n";
  for (const auto& rec : report.actions) {
    out << rec.t << ',' << rec.phase << ',' << rec.j << ',' << rec.ell_lambda << ','
        << fmt_g17(rec.min_eig) << ',' << fmt_g17(rec.psperp) << ','
        << fmt_g17(rec.reward) << '\n';
  }
}

void write_trace_jsonl(const RunConfig& config, const TranscriptReport& report,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_trace_jsonl: cannot open " + path);
  json header;
  header["kind"] = "header";
  header["version"] = 1;
  header["config"] = config.to_json();
  out << header.dump() << '\n';

  for (std::size_t i = 0; i < report.tilts.size(); ++i) {
    json t;
    t["kind"] = "tilt";
    t["id"] = i;
    t["tilt"] = report.tilts[i]->to_json();
    out << t.dump() << '\n';
  }

  for (std::size_t i = 0; i < report.signals.size(); ++i) {
    json s;
    s["kind"] = "signal";
    s["id"] = i;
    std::visit(
        [&](const auto& rec) {
          using T = std::decay_t<decltype(rec)>;
          if constexpr (std::is_same_v<T, GaussianObs>) {
            s["signal"] = {{"type", "gaussian_obs"},
                           {"direction", vec_json(rec.direction)},
                           {"noise_var", rec.noise_var},
                           {"value", rec.value}};
          } else if constexpr (std::is_same_v<T, SignThreshold>) {
            s["signal"] = {{"type", "sign_threshold"},
                           {"coef", vec_json(rec.coef)},
                           {"noise_sd", rec.noise_sd},
                           {"sign", rec.sign}};
          } else if constexpr (std::is_same_v<T, MixtureSign>) {
            s["signal"] = {{"type", "mixture_sign"},
                           {"action", vec_json(rec.action)},
                           {"select_prob", rec.select_prob},
                           {"sign", rec.sign},
                           {"noise_sd", rec.noise_sd}};
          } else {
            std::size_t tilt_id = report.tilts.size();
            for (std::size_t k = 0; k < report.tilts.size(); ++k) {
              if (report.tilts[k] == rec.tilt) {
                tilt_id = k;
                break;
              }
            }
            s["signal"] = {{"type", "tilt_event"},    {"tilt_id", tilt_id},
                           {"basis", mat_json(rec.basis)}, {"noise_vars", vec_json(rec.noise_vars)},
                           {"observed", rec.observed},  {"inner_n", rec.inner_n},
                           {"seed", rec.seed}};
          }
        },
        report.signals[i]);
    out << s.dump() << '\n';
  }

  for (const auto& rec : report.actions) {
    json a;
    a["kind"] = "action";
    a["t"] = rec.t;
    a["phase"] = rec.phase;
    a["action"] = vec_json(rec.action);
    a["reward"] = rec.reward;
    a["repeat"] = rec.repeat;
    a["iteration"] = rec.iteration;
    a["chain_begin"] = rec.chain_begin;
    a["chain_end"] = rec.chain_end;
    a["fallback"] = rec.fallback;
    a["min_eig"] = rec.min_eig;
    a["psperp"] = rec.psperp;
    a["ell_lambda"] = rec.ell_lambda;
    a["j"] = rec.j;
    out << a.dump() << '\n';
  }

  json cert;
  cert["kind"] = "certificate";
  cert["total_pulls"] = report.total_pulls;
  cert["achieved_lambda"] = report.achieved_lambda;
  cert["certified"] = report.certified;
  cert["failure"] = report.failure;
  cert["warnings"] = report.warnings;
  out << cert.dump() << '\n';
}

LoadedTrace load_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_trace_jsonl: cannot open " + path);
  LoadedTrace lt;
  std::string line;
  bool have_header = false;
  std::vector<std::shared_ptr<const TiltFunction>> tilts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("load_trace_jsonl: bad line: ") + e.what());
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "header") {
      lt.config = RunConfig::from_json(j.at("config"));
      have_header = true;
    } else if (kind == "tilt") {
      tilts.push_back(std::make_shared<TiltFunction>(TiltFunction::from_json(j.at("tilt"))));
    } else if (kind == "signal") {
      const auto& s = j.at("signal");
      const std::string type = s.at("type").get<std::string>();
      if (type == "gaussian_obs") {
        GaussianObs g;
        g.direction = vec_from(s.at("direction"));
        g.noise_var = s.at("noise_var").get<double>();
        g.value = s.at("value").get<double>();
        lt.transcript.signals.emplace_back(g);
      } else if (type == "sign_threshold") {
        SignThreshold st;
        st.coef = vec_from(s.at("coef"));
        st.noise_sd = s.at("noise_sd").get<double>();
        st.sign = s.at("sign").get<int>();
        lt.transcript.signals.emplace_back(st);
      } else if (type == "mixture_sign") {
        MixtureSign mx;
        mx.action = vec_from(s.at("action"));
        mx.select_prob = s.at("select_prob").get<double>();
        mx.sign = s.at("sign").get<int>();
        mx.noise_sd = s.at("noise_sd").get<double>();
        lt.transcript.signals.emplace_back(mx);
      } else if (type == "tilt_event") {
        TiltEvent ev;
        const std::size_t id = s.at("tilt_id").get<std::size_t>();
        if (id >= tilts.size()) throw ConfigError("load_trace_jsonl: bad tilt_id");
        ev.tilt = tilts[id];
        ev.z_context = nullptr;  // the auditor supplies its own cloud
        ev.basis = mat_from(s.at("basis"));
        ev.noise_vars = vec_from(s.at("noise_vars"));
        ev.observed = s.at("observed").get<bool>();
        ev.inner_n = s.at("inner_n").get<int>();
        ev.seed = s.at("seed").get<std::uint64_t>();
        lt.transcript.signals.emplace_back(ev);
      } else {
        throw ConfigError("load_trace_jsonl: unknown signal type " + type);
      }
    } else if (kind == "action") {
      StepRecord rec;
      rec.t = j.at("t").get<long>();
      rec.action = vec_from(j.at("action"));
      rec.phase = j.at("phase").get<std::string>();
      rec.reward = j.at("reward").get<double>();
      rec.repeat = j.at("repeat").get<int>();
      rec.iteration = j.at("iteration").get<int>();
      rec.chain_begin = j.at("chain_begin").get<int>();
      rec.chain_end = j.at("chain_end").get<int>();
      rec.fallback = j.at("fallback").get<bool>();
      rec.min_eig = j.at("min_eig").get<double>();
      rec.psperp = j.at("psperp").get<double>();
      rec.ell_lambda = j.at("ell_lambda").get<int>();
      rec.j = j.at("j").get<int>();
      lt.transcript.actions.push_back(std::move(rec));
    } else if (kind == "certificate") {
      lt.transcript.total_pulls = j.at("total_pulls").get<long>();
      lt.transcript.achieved_lambda = j.at("achieved_lambda").get<double>();
      lt.transcript.certified = j.at("certified").get<bool>();
      lt.transcript.failure = j.at("failure").get<std::string>();
    } else {
      throw ConfigError("load_trace_jsonl: unknown record kind " + kind);
    }
  }
  if (!have_header) throw ConfigError("load_trace_jsonl: missing header");
  lt.transcript.tilts = std::move(tilts);
  lt.transcript.d = lt.config.d;
  return lt;
}

RunArtifacts cmd_run(const RunConfig& config, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunArtifacts out;
  const ConstantsRegistry registry = config.build_registry();
  auto [canon_prior, rotation] = canonicalize(config.prior);
  (void)rotation;
  RunConfig canon_config = config;
  canon_config.prior = canon_prior;

  bool all_certified = true;
  bool budget = false;
  for (int rep = 0; rep < config.replicates; ++rep) {
    const std::uint64_t rep_seed = splitmix64(config.seed + 0x9e3779b97f4a7c15ull * rep);
    auto env = Environment::spawn(canon_prior, rep_seed, config.noise_sd);
    BicExplorer explorer(canon_prior, registry, config.options,
                         splitmix64(rep_seed ^ fnv1a("explorer")));
    TranscriptReport report = explorer.run(env, config.lambda_bar);

    const std::string suffix = config.replicates > 1 ? "_r" + std::to_string(rep) : "";
    const std::string metrics = out_dir + "/metrics" + suffix + ".csv";
    const std::string trace = out_dir + "/trace" + suffix + ".jsonl";
    write_metrics_csv(report, metrics);
    write_trace_jsonl(canon_config, report, trace);
    out.metrics_paths.push_back(metrics);
    out.trace_paths.push_back(trace);
    if (!report.certified) all_certified = false;
    if (report.failure.rfind("budget_exceeded", 0) == 0) budget = true;
    out.transcripts.push_back(std::move(report));
  }
  out.exit_code = all_certified ? 0 : (budget ? 3 : 1);
  return out;
}

}  // namespace bicx
