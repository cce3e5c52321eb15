#include "bicx/constants.hpp"

#include <cmath>

#include "bicx/errors.hpp"
#include "bicx/math.hpp"

namespace bicx {

namespace {

double get_or(const std::map<std::string, double>& m, const std::string& key,
              double fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

bool has(const std::map<std::string, double>& m, const std::string& key) {
  return m.count(key) > 0;
}

}  // namespace

double compute_lambda(const AssumptionConstants& ac, int d,
                      const ConstantsRegistry& registry) {
  if (registry.mode == ConstantsRegistry::Mode::scaled) {
    return registry.lambda;
  }
  if (ac.sigma_var <= 0.0 || ac.k_subg <= 0.0) {
    throw PreconditionError("compute_lambda: constants must be positive");
  }
  const double delta_min =
      std::min({registry.delta_l5, registry.delta_l6, 1.0 / registry.c_l6});
  const double c5 = ac.sigma_var / std::sqrt(8.0 * kPi);
  const double cap = ac.k_subg * std::sqrt(kPi) + 1.0;
  return std::min(1.0, delta_min * delta_min * c5 * c5 / (4.0 * d * cap * cap));
}

ConstantsRegistry ConstantsRegistry::theoretical(
    const AssumptionConstants& ac, int d,
    const std::map<std::string, double>& overrides) {
  if (!has(overrides, "delta_L5") || !has(overrides, "c_L6")) {
    throw ConfigError(
        "theoretical mode: delta_L5 and c_L6 are existence-only constants; "
        "supply overrides for them");
  }
  if (ac.c_d <= 0.0 || ac.eps_d <= 0.0 || ac.eps_d > 1.0 || ac.sigma_var <= 0.0 ||
      ac.k_subg <= 0.0) {
    throw PreconditionError("theoretical mode: invalid assumption constants");
  }
  ConstantsRegistry r;
  r.mode = Mode::theoretical;
  r.overrides = overrides;
  r.delta_l5 = overrides.at("delta_L5");
  r.c_l6 = overrides.at("c_L6");
  r.c_l4 = get_or(overrides, "c_L4", 0.01);
  r.delta_l6 = get_or(overrides, "delta_L6",
                      std::min(1.0, 1.0 / (2.0 * ac.k_subg * std::sqrt(std::log(2.0)))));
  r.c_l5 = ac.sigma_var / std::sqrt(8.0 * kPi);
  r.c_l7 = (ac.c_d * ac.c_d / 32.0) / std::log(4.0 / ac.eps_d);
  const double cap = ac.k_subg * std::sqrt(kPi) + 1.0;
  r.mean_norm_cap = cap;
  r.p_select = ac.eps_d * ac.c_d / (16.0 * cap);
  r.eps_tilt = ac.eps_d * ac.c_d / 4.0;
  r.lambda = compute_lambda(ac, d, r);
  if (r.lambda <= 0.0) {
    throw PreconditionError("theoretical mode: lambda degenerated to 0");
  }
  r.n_y = static_cast<long>(std::ceil(1.0 / (r.lambda * r.c_l7) - 1e-9));
  const double kappa_l = 4.0 * d * cap * cap * (1.0 + 1.0 / r.lambda) / (r.c_l5 * r.c_l5);
  r.kappa = std::max<long>(r.n_y, static_cast<long>(std::ceil(kappa_l)));
  r.validate(d);
  return r;
}

ConstantsRegistry ConstantsRegistry::scaled(
    int d, const std::map<std::string, double>& overrides) {
  ConstantsRegistry r;
  r.mode = Mode::scaled;
  r.overrides = overrides;
  r.lambda = get_or(overrides, "lambda", 0.05);
  r.c_l7 = get_or(overrides, "c_L7", 0.1);
  r.c_l5 = get_or(overrides, "c_L5", 1.0);
  r.delta_l5 = get_or(overrides, "delta_L5", 0.1);
  r.c_l6 = get_or(overrides, "c_L6", 10.0);
  r.delta_l6 = get_or(overrides, "delta_L6", 1.0);
  r.c_l4 = get_or(overrides, "c_L4", 0.01);
  r.eps_tilt = get_or(overrides, "eps_tilt", 0.2);
  r.mean_norm_cap = get_or(overrides, "mean_norm_cap", 1.0);
  r.p_select = get_or(overrides, "p_select", r.tilt_lower_bound());
  r.n_y = static_cast<long>(std::ceil(1.0 / (r.lambda * r.c_l7) - 1e-9));
  if (has(overrides, "n_y")) {
    r.n_y = static_cast<long>(overrides.at("n_y"));
    r.c_l7 = 1.0 / (r.lambda * static_cast<double>(r.n_y));
  }
  r.kappa = static_cast<long>(get_or(overrides, "kappa", 200.0));
  r.kappa = std::max(r.kappa, r.n_y);
  r.l_override = static_cast<long>(get_or(overrides, "L", 0.0));
  r.validate(d);
  return r;
}

double ConstantsRegistry::tilt_lower_bound() const {
  return eps_tilt / (4.0 * std::max(mean_norm_cap, 1.0));
}

void ConstantsRegistry::validate(int d) const {
  if (d < 1) throw PreconditionError("registry: d >= 1 required");
  if (lambda <= 0.0 || lambda > 1.0) {
    throw PreconditionError("registry: lambda must lie in (0, 1]");
  }
  if (kappa < 1 || n_y < 1 || kappa < n_y) {
    throw PreconditionError("registry: need kappa >= n_y >= 1");
  }
  if (p_select <= 0.0 || p_select >= 1.0) {
    throw PreconditionError("registry: p_select outside (0,1)");
  }
  if (eps_tilt <= 0.0 || eps_tilt > 0.5) {
    throw PreconditionError("registry: eps_tilt outside (0, 1/2]");
  }
  // Guarantees p_select / f(z) <= 1 for every f above the tilt lower bound.
  if (p_select > tilt_lower_bound() + 1e-12) {
    throw PreconditionError(
        "registry: p_select exceeds the tilt lower bound; R would need an "
        "invalid selection probability");
  }
  if (c_l5 <= 0.0 || c_l7 <= 0.0 || delta_l5 <= 0.0 || c_l6 <= 0.0 ||
      delta_l6 <= 0.0 || c_l4 <= 0.0) {
    throw PreconditionError("registry: constants must be positive");
  }
}

}  // namespace bicx
