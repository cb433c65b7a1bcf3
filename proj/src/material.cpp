#include "rlab/material.hpp"

#include <cmath>
#include <string>

#include "rlab/errors.hpp"

namespace rlab::material {

namespace {

void require_positive(double v, const char* name) {
  require(v > 0.0 && std::isfinite(v), std::string(name) + " must be positive");
}

double atoms(double side, double a) { return std::pow(side / a, 3); }

}  // namespace

void MaterialParams::validate() const {
  require_positive(L, "L");
  require_positive(a, "a");
  require_positive(d, "d");
  require_positive(lambda_mfp, "lambda_mfp");
  require_positive(c_s, "c_s");
  require_positive(Delta, "Delta");
  require_positive(T_over_Theta, "T_over_Theta");
  require(std::isfinite(xi) && xi >= 0.0, "xi must be non-negative");
  require(d >= lambda_mfp,
          "d must be at least the phonon mean free path (subsystems larger than lambda "
          "are needed for incoherent subsystem wave functions)");
  require(alpha.has_value() || hbar_omega_over_kT.has_value(),
          "either alpha or hbar_omega_over_kT must be given");
  require(resolved_alpha() >= 1.0, "alpha must be at least 1");
}

double MaterialParams::resolved_alpha() const {
  if (alpha) return *alpha;
  return alpha_of(*hbar_omega_over_kT);
}

double alpha_of(double hbar_omega_over_kT) {
  require(hbar_omega_over_kT > 0.0, "hbar_omega_over_kT must be positive");
  return 1.0 / std::tanh(0.5 * hbar_omega_over_kT);
}

double overlap_ground(double N, double xi, double Delta) {
  require(N >= 1.0, "N must be at least 1");
  require_positive(Delta, "Delta");
  return std::exp(-N * xi * xi / (8.0 * Delta * Delta));
}

double overlap_thermal(double N, double xi, double Delta, double alpha) {
  require(N >= 1.0, "N must be at least 1");
  require_positive(Delta, "Delta");
  require(alpha >= 1.0, "alpha must be at least 1");
  return std::exp(-N * xi * xi / (8.0 * alpha * Delta * Delta));
}

double orthogonality_bound(double N, double xi, double Delta, double alpha) {
  require(N >= 1.0, "N must be at least 1");
  require_positive(Delta, "Delta");
  require(alpha >= 1.0, "alpha must be at least 1");
  return std::exp(-N * xi * xi / (4.0 * alpha * Delta * Delta));
}

double orthogonality_displacement(double N, double Delta, double alpha, double level) {
  require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
  return std::sqrt(-std::log(level) * 4.0 * alpha * Delta * Delta / N);
}

double phonon_count(double N_beta, double T_over_Theta) {
  require(N_beta >= 0.0 && T_over_Theta >= 0.0, "phonon_count arguments must be non-negative");
  return 3.0 * N_beta * T_over_Theta;
}

double subsystem_fluctuation(const MaterialParams& params, double p1, double p2, double dt) {
  params.validate();
  require(p1 >= 0.0 && p2 >= 0.0 && std::abs(p1 + p2 - 1.0) <= 1e-9,
          "p1 and p2 must be probabilities summing to 1");
  require(dt >= 0.0, "dt must be non-negative");
  const double N_beta = atoms(params.d, params.a);
  const double n_beta = phonon_count(N_beta, params.T_over_Theta);
  const double tau = params.lambda_mfp / params.c_s;
  const double e_prime = overlap_thermal(N_beta, params.xi, params.Delta, params.resolved_alpha());
  return std::sqrt(p1 * p2 * dt / (n_beta * tau)) * e_prime;
}

RateBreakdown reduction_rate(const MaterialParams& params) {
  params.validate();
  RateBreakdown r;
  r.alpha = params.resolved_alpha();
  r.N = atoms(params.L, params.a);
  r.N_beta = atoms(params.d, params.a);
  r.N_over_N_beta_sq = std::pow(params.L * params.a / (params.d * params.d), 3);
  r.n_beta = phonon_count(r.N_beta, params.T_over_Theta);
  r.tau = params.lambda_mfp / params.c_s;
  r.e_prime = overlap_thermal(r.N_beta, params.xi, params.Delta, r.alpha);
  r.xi0 = std::sqrt(4.0 * r.alpha * params.Delta * params.Delta / r.N_beta);
  const double suppression =
      std::exp(-r.N_beta * params.xi * params.xi / (4.0 * r.alpha * params.Delta * params.Delta));
  r.inv_tau_red = 2.0 * r.N_over_N_beta_sq / params.T_over_Theta * suppression / r.tau;
  r.tau_red = 1.0 / r.inv_tau_red;
  r.delta_p_subsystem = subsystem_fluctuation(params, 0.5, 0.5, 1.0);
  r.delta_p_total_per_sqrt_dt = std::sqrt(0.25 * r.inv_tau_red);
  return r;
}

double reduction_rate_microscopic(const MaterialParams& params, double dt, double p1) {
  require(dt > 0.0, "dt must be positive");
  require(p1 > 0.0 && p1 < 1.0, "p1 must lie in (0, 1)");
  const double p2 = 1.0 - p1;
  const double subsystems = atoms(params.L, params.a) / atoms(params.d, params.a);
  const double per_subsystem = subsystem_fluctuation(params, p1, p2, dt);
  // Independent contributions add in variance; each carries weight 1/2.
  const double total = 0.5 * std::sqrt(subsystems) * per_subsystem;
  return total * total / (p1 * p2 * dt);
}

ConsistencyReport consistency(const MaterialParams& params) {
  ConsistencyReport c;
  const auto r = reduction_rate(params);
  c.inv_tau_red = r.inv_tau_red;
  c.inv_tau_red_microscopic = reduction_rate_microscopic(params, 1e-15);
  c.ratio = c.inv_tau_red_microscopic / c.inv_tau_red;
  c.expected_ratio = (1.0 / 12.0) / 2.0;
  c.tau_red_vs_quoted = r.tau_red / kQuotedTauRed;
  c.xi0_vs_quoted = r.xi0 / kQuotedXi0;
  return c;
}

nlohmann::json to_json(const MaterialParams& p) {
  nlohmann::json j = {{"L", p.L},           {"a", p.a},
                      {"d", p.d},           {"lambda_mfp", p.lambda_mfp},
                      {"c_s", p.c_s},       {"Delta", p.Delta},
                      {"T_over_Theta", p.T_over_Theta}, {"xi", p.xi}};
  j["alpha"] = p.alpha ? nlohmann::json(*p.alpha) : nlohmann::json(nullptr);
  j["hbar_omega_over_kT"] =
      p.hbar_omega_over_kT ? nlohmann::json(*p.hbar_omega_over_kT) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const RateBreakdown& r) {
  return {{"N", r.N},
          {"N_beta", r.N_beta},
          {"n_beta", r.n_beta},
          {"N_over_N_beta_sq", r.N_over_N_beta_sq},
          {"tau_s", r.tau},
          {"alpha", r.alpha},
          {"e_prime", r.e_prime},
          {"xi0_cm", r.xi0},
          {"inv_tau_red_per_s", r.inv_tau_red},
          {"tau_red_s", r.tau_red},
          {"delta_p_subsystem_per_sqrt_s", r.delta_p_subsystem},
          {"delta_p_total_per_sqrt_s", r.delta_p_total_per_sqrt_dt}};
}

nlohmann::json to_json(const ConsistencyReport& c) {
  return {{"inv_tau_red", c.inv_tau_red},
          {"inv_tau_red_microscopic", c.inv_tau_red_microscopic},
          {"ratio", c.ratio},
          {"expected_ratio", c.expected_ratio},
          {"tau_red_over_quoted", c.tau_red_vs_quoted},
          {"xi0_over_quoted", c.xi0_vs_quoted}};
}

}  // namespace rlab::material
