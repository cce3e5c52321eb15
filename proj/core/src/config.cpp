#include <fstream>
#include <set>

#include "bicx/errors.hpp"
#include "bicx/harness.hpp"

namespace bicx {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
  }
}

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> vector_to_std(const Vector& v) {
  return std::vector<double>(v.begin(), v.end());
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ConfigError("config: empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("config: ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
  }
  return rows;
}

const std::set<std::string> kKnownConstants = {
    "lambda", "kappa", "n_y",      "p_select", "c_L5",         "c_L7",
    "delta_L5", "c_L6",  "delta_L6", "c_L4",     "eps_tilt",     "mean_norm_cap",
    "L"};

}  // namespace

PriorSpec prior_from_json(const json& j, int expected_dim) {
  reject_unknown_keys(j, {"kind", "mean", "cov", "var", "radius", "center", "r",
                          "dim", "halfwidths", "points", "weights", "path"},
                      "prior");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    GaussianPrior g;
    if (j.count("mean")) {
      g.mean = vector_from_json(j.at("mean"));
    } else {
      g.mean = Vector::Zero(expected_dim);
    }
    if (j.count("cov")) {
      g.cov = matrix_from_json(j.at("cov"));
    } else {
      const double var = j.count("var") ? j.at("var").get<double>() : 1.0;
      g.cov = var * Matrix::Identity(g.mean.size(), g.mean.size());
    }
    return g;
  }
  if (kind == "uniform_ball") {
    UniformBallPrior b;
    b.radius = j.count("radius") ? j.at("radius").get<double>() : 1.0;
    b.center = j.count("center") ? vector_from_json(j.at("center"))
                                 : Vector::Zero(expected_dim);
    return b;
  }
  if (kind == "r_regular_ball") {
    RRegularBody b;
    b.kind = RRegularBody::Kind::ball;
    b.r = j.at("r").get<double>();
    b.dim = j.count("dim") ? j.at("dim").get<int>() : expected_dim;
    b.ball_radius = j.count("radius") ? j.at("radius").get<double>() : 1.0;
    return b;
  }
  if (kind == "r_regular_box") {
    RRegularBody b;
    b.kind = RRegularBody::Kind::box;
    b.r = j.at("r").get<double>();
    b.halfwidths = vector_from_json(j.at("halfwidths"));
    return b;
  }
  if (kind == "empirical") {
    if (j.count("path")) {
      return load_empirical(j.at("path").get<std::string>(), expected_dim);
    }
    EmpiricalPrior e;
    e.points = matrix_from_json(j.at("points"));
    if (j.count("weights")) {
      e.weights = vector_from_json(j.at("weights"));
    } else {
      e.weights = Vector::Constant(e.points.rows(), 1.0 / double(e.points.rows()));
    }
    return e;
  }
  throw ConfigError("config: unknown prior kind '" + kind + "'");
}

json prior_to_json(const PriorSpec& prior) {
  json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussianPrior>) {
          j["kind"] = "gaussian";
          j["mean"] = vector_to_std(p.mean);
          j["cov"] = matrix_to_json(p.cov);
        } else if constexpr (std::is_same_v<T, UniformBallPrior>) {
          j["kind"] = "uniform_ball";
          j["radius"] = p.radius;
          j["center"] = vector_to_std(p.center);
        } else if constexpr (std::is_same_v<T, RRegularBody>) {
          if (p.kind == RRegularBody::Kind::ball) {
            j["kind"] = "r_regular_ball";
            j["r"] = p.r;
            j["dim"] = p.dim;
            j["radius"] = p.ball_radius;
          } else {
            j["kind"] = "r_regular_box";
            j["r"] = p.r;
            j["halfwidths"] = vector_to_std(p.halfwidths);
          }
        } else {
          j["kind"] = "empirical";
          j["points"] = matrix_to_json(p.points);
          j["weights"] = vector_to_std(p.weights);
        }
      },
      prior);
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown_keys(
      j,
      {"d", "prior", "lambda_bar", "mode", "constants", "particles", "inner_n",
       "z_subsample", "lp_var_cap", "max_steps", "zero_tol", "signal_scope",
       "resample_ess_frac", "noise_sd", "replicates", "seed", "estimate_dirs",
       "estimate_samples", "assumption_constants"},
      "top level");
  RunConfig c;
  c.d = j.at("d").get<int>();
  if (c.d < 1) throw ConfigError("config: d must be >= 1");
  c.prior = prior_from_json(j.at("prior"), c.d);
  if (prior_dim(c.prior) != c.d) {
    throw ConfigError("config: prior dimension disagrees with d");
  }
  c.lambda_bar = j.at("lambda_bar").get<double>();
  if (c.lambda_bar <= 0.0) throw ConfigError("config: lambda_bar must be positive");
  if (j.count("mode")) c.mode = j.at("mode").get<std::string>();
  if (c.mode != "scaled" && c.mode != "theoretical") {
    throw ConfigError("config: mode must be scaled or theoretical");
  }
  if (j.count("constants")) {
    for (auto it = j.at("constants").begin(); it != j.at("constants").end(); ++it) {
      if (!kKnownConstants.count(it.key())) {
        throw ConfigError("config: unknown constant '" + it.key() + "'");
      }
      c.constants[it.key()] = it.value().get<double>();
    }
  }
  if (j.count("particles")) c.options.particles = j.at("particles").get<int>();
  if (j.count("inner_n")) c.options.inner_n = j.at("inner_n").get<int>();
  if (j.count("z_subsample")) c.options.z_subsample = j.at("z_subsample").get<int>();
  if (j.count("lp_var_cap")) c.options.lp_var_cap = j.at("lp_var_cap").get<int>();
  if (j.count("max_steps")) c.options.max_steps = j.at("max_steps").get<long>();
  if (j.count("zero_tol")) c.options.zero_tol = j.at("zero_tol").get<double>();
  if (j.count("resample_ess_frac")) {
    c.options.resample_ess_frac = j.at("resample_ess_frac").get<double>();
  }
  if (j.count("signal_scope")) c.signal_scope = j.at("signal_scope").get<std::string>();
  if (c.signal_scope != "chain" && c.signal_scope != "single") {
    throw ConfigError("config: signal_scope must be chain or single");
  }
  c.options.chain_scope = c.signal_scope == "chain";
  if (j.count("noise_sd")) c.noise_sd = j.at("noise_sd").get<double>();
  if (c.noise_sd < 0.0) throw ConfigError("config: noise_sd must be >= 0");
  if (j.count("replicates")) c.replicates = j.at("replicates").get<int>();
  if (c.replicates < 1) throw ConfigError("config: replicates must be >= 1");
  if (j.count("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.count("estimate_dirs")) c.estimate_dirs = j.at("estimate_dirs").get<int>();
  if (j.count("estimate_samples")) {
    c.estimate_samples = j.at("estimate_samples").get<int>();
  }
  if (j.count("assumption_constants")) {
    const auto& a = j.at("assumption_constants");
    reject_unknown_keys(a, {"c_d", "eps_d", "sigma_var", "k_subg"},
                        "assumption_constants");
    c.has_assumption_constants = true;
    c.assumption_constants.c_d = a.at("c_d").get<double>();
    c.assumption_constants.eps_d = a.at("eps_d").get<double>();
    c.assumption_constants.sigma_var = a.at("sigma_var").get<double>();
    c.assumption_constants.k_subg = a.at("k_subg").get<double>();
  }
  if (j.count("particles") && c.options.particles < 1) {
    throw ConfigError("config: particles must be >= 1");
  }
  if (c.options.inner_n < 1) throw ConfigError("config: inner_n must be >= 1");
  if (c.options.max_steps < 1) throw ConfigError("config: max_steps must be >= 1");
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse failure: ") + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["d"] = d;
  j["prior"] = prior_to_json(prior);
  j["lambda_bar"] = lambda_bar;
  j["mode"] = mode;
  j["constants"] = constants;
  j["particles"] = options.particles;
  j["inner_n"] = options.inner_n;
  j["z_subsample"] = options.z_subsample;
  j["lp_var_cap"] = options.lp_var_cap;
  j["max_steps"] = options.max_steps;
  if (options.zero_tol >= 0.0) j["zero_tol"] = options.zero_tol;
  j["signal_scope"] = signal_scope;
  j["resample_ess_frac"] = options.resample_ess_frac;
  j["noise_sd"] = noise_sd;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["estimate_dirs"] = estimate_dirs;
  j["estimate_samples"] = estimate_samples;
  if (has_assumption_constants) {
    j["assumption_constants"] = {{"c_d", assumption_constants.c_d},
                                 {"eps_d", assumption_constants.eps_d},
                                 {"sigma_var", assumption_constants.sigma_var},
                                 {"k_subg", assumption_constants.k_subg}};
  }
  return j;
}

ConstantsRegistry RunConfig::build_registry() const {
  if (mode == "scaled") {
    return ConstantsRegistry::scaled(d, constants);
  }
  AssumptionConstants ac = assumption_constants;
  if (!has_assumption_constants) {
    ac = estimate_constants(prior, estimate_dirs, estimate_samples,
                            splitmix64(seed ^ fnv1a("estimate")));
  }
  return ConstantsRegistry::theoretical(ac, d, constants);
}

}  // namespace bicx
