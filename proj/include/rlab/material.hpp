#pragma once

#include <optional>

#include <json.hpp>

namespace rlab::material {

/// Physical inputs of the phonon reduction model, CGS units.
/// Geometry is cubic: N = (L/a)^3 atoms in the pointer, N_beta = (d/a)^3 in
/// each incoherent subsystem.
struct MaterialParams {
  double L = 1.0;              // pointer side, cm
  double a = 3e-8;             // lattice cell side, cm
  double d = 3e-6;             // subsystem side, cm
  double lambda_mfp = 3e-7;    // phonon mean free path, cm
  double c_s = 3e5;            // sound velocity, cm/s
  double Delta = 1e-9;         // ground-state position spread, cm
  double T_over_Theta = 1.0;   // temperature over Debye temperature
  /// Thermal factor alpha; when empty it is derived from hbar_omega_over_kT.
  std::optional<double> alpha = 1.0;
  std::optional<double> hbar_omega_over_kT;
  double xi = 0.0;             // pointer displacement, cm

  /// Worked example: NaCl at room temperature, d = 10 lambda, alpha = 1, T = Theta.
  static MaterialParams reference_example() { return {}; }

  /// Throws ValidationError on non-positive lengths, d < lambda_mfp or alpha < 1.
  void validate() const;
  double resolved_alpha() const;
};

/// (gamma + 1) / (gamma - 1) with gamma = exp(x), evaluated as coth(x/2).
double alpha_of(double hbar_omega_over_kT);

/// <x1|x2> for N ground-state atoms displaced by xi: exp(-N xi^2 / 8 Delta^2).
double overlap_ground(double N, double xi, double Delta);

/// Thermal version exp(-N xi^2 / 8 alpha Delta^2).
double overlap_thermal(double N, double xi, double Delta, double alpha);

/// Upper bound exp(-N xi^2 / 4 alpha Delta^2) on |<x1|x2>|^2; the square of
/// overlap_thermal.
double orthogonality_bound(double N, double xi, double Delta, double alpha);

/// Displacement at which orthogonality_bound falls to `level`.
double orthogonality_displacement(double N, double Delta, double alpha, double level);

/// n_beta = 3 N_beta (T / Theta).
double phonon_count(double N_beta, double T_over_Theta);

/// Per-subsystem standard deviation of the probability exchanged in dt:
/// sqrt(p1 p2 dt / (n_beta tau)) e', with tau = lambda / c_s and
/// e' = exp(-N_beta xi^2 / 8 alpha Delta^2).
double subsystem_fluctuation(const MaterialParams& params, double p1, double p2, double dt);

struct RateBreakdown {
  double N = 0.0;
  double N_beta = 0.0;
  double n_beta = 0.0;
  double N_over_N_beta_sq = 0.0;
  double tau = 0.0;               // s
  double alpha = 1.0;
  double e_prime = 1.0;
  double xi0 = 0.0;               // cm
  double inv_tau_red = 0.0;       // 1/s
  double tau_red = 0.0;           // s
  double delta_p_subsystem = 0.0;          // per sqrt(s), at p1 = p2 = 1/2
  double delta_p_total_per_sqrt_dt = 0.0;  // per sqrt(s), at p1 = p2 = 1/2
};

/// 1/tau_red = 2 (N / N_beta^2) (Theta / T) exp(-N_beta xi^2 / 4 alpha Delta^2) / tau,
/// together with every intermediate. xi0 = sqrt(4 alpha Delta^2 / N_beta).
RateBreakdown reduction_rate(const MaterialParams& params);

/// Rate implied by aggregating the N / N_beta independent subsystem
/// fluctuations, each entering the channel probability with weight 1/2:
/// std = (1/2) sqrt(N / N_beta) subsystem_fluctuation, matched to
/// std = sqrt(p1 p2 dt / tau_red).
double reduction_rate_microscopic(const MaterialParams& params, double dt, double p1 = 0.5);

/// Literature values quoted for the reference example.
inline constexpr double kQuotedTauRed = 1e-22;  // s
inline constexpr double kQuotedXi0 = 1e-11;     // cm

struct ConsistencyReport {
  double inv_tau_red = 0.0;
  double inv_tau_red_microscopic = 0.0;
  double ratio = 0.0;            // microscopic / macroscopic
  double expected_ratio = 0.0;   // (1/12) / 2 from the prefactors
  double tau_red_vs_quoted = 0.0;
  double xi0_vs_quoted = 0.0;
};

ConsistencyReport consistency(const MaterialParams& params);

nlohmann::json to_json(const MaterialParams& params);
nlohmann::json to_json(const RateBreakdown& breakdown);
nlohmann::json to_json(const ConsistencyReport& report);

}  // namespace rlab::material
