#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "rlab/stats.hpp"

namespace rlab {

/// Two-channel Fokker-Planck density Q(p, t) for p = probability of the
/// first channel, discretized on the nodes p_i = i / M. The M - 1 interior
/// nodes carry the density; the boundary nodes p = 0 and p = 1 are absorbing
/// and their inflow is accumulated in absorbed_0 and absorbed_1.
///
/// The evolution is dQ/dt = s d^2/dp^2 [p(1-p) Q] in units of tau_red, with
/// s = diffusion_scale. s = 1/2 is the forward equation of the channel
/// diffusion whose increments have variance p(1-p) dt / tau_red.
class FpGrid {
 public:
  FpGrid(std::size_t cells, double diffusion_scale = 0.5);

  /// Normalized triangular hat of half-width 2/M centred at p_start. The hat
  /// preserves the mean exactly, so the absorbed split converges to p_start.
  static FpGrid pulse(double p_start, std::size_t cells, double diffusion_scale = 0.5);

  std::size_t cells() const noexcept { return cells_; }
  double spacing() const noexcept { return 1.0 / static_cast<double>(cells_); }
  double node(std::size_t i) const noexcept { return static_cast<double>(i) * spacing(); }
  double diffusion_scale() const noexcept { return scale_; }

  /// Density at interior node i (1 <= i <= M - 1).
  double q(std::size_t i) const { return q_[i]; }
  std::vector<double>& density() noexcept { return q_; }
  const std::vector<double>& density() const noexcept { return q_; }

  double interior_mass() const noexcept;
  double total_mass() const noexcept { return interior_mass() + absorbed_0 + absorbed_1; }
  /// First moment including the absorbed mass at p = 1.
  double mean() const noexcept;
  double min_density() const noexcept;

  /// Largest explicit step keeping the update positive: M^-2 / (2 s max D).
  double explicit_dt_limit() const noexcept;

  double absorbed_0 = 0.0;
  double absorbed_1 = 0.0;
  double time = 0.0;

 private:
  std::size_t cells_;
  double scale_;
  std::vector<double> q_;  // size cells + 1; entries 0 and cells stay zero
};

enum class FpScheme { explicit_euler, crank_nicolson, implicit_euler };

/// Advances the grid by dt. The explicit scheme rejects dt above
/// explicit_dt_limit(). All schemes conserve total mass to round-off.
FpGrid fp_step(const FpGrid& grid, double dt, FpScheme scheme = FpScheme::explicit_euler);
void fp_step_inplace(FpGrid& grid, double dt, FpScheme scheme = FpScheme::explicit_euler);

struct FpOptions {
  FpScheme scheme = FpScheme::explicit_euler;
  double diffusion_scale = 0.5;
  /// Time step; 0 picks 0.9 of the explicit limit (explicit) or 1e-3 (implicit).
  double dt = 0.0;
  /// Spacing of the recorded history; 0 records 1000 evenly spaced samples.
  double output_interval = 0.0;
  /// Implicit-Euler half steps replacing the first Crank-Nicolson step.
  std::size_t startup_steps = 4;
};

struct FpSolution {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> absorbed_0;
  std::vector<double> absorbed_1;
  double max_mass_error = 0.0;
  double min_density = 0.0;
  double p_start = 0.0;
  std::size_t cells = 0;
  double dt = 0.0;

  stats::TailFit tail_fit(double s_high, double s_low) const;
  /// Linear interpolation of a recorded series at time t.
  static double interpolate(const std::vector<double>& times, const std::vector<double>& values,
                            double t);
};

/// Starts from FpGrid::pulse(p_start, cells) and integrates to t_end.
/// Throws NumericalError if total mass drifts by more than 1e-6.
FpSolution fp_solve(double p_start, std::size_t cells, double t_end, const FpOptions& options = {});

nlohmann::json to_json(const FpSolution& solution);

}  // namespace rlab
