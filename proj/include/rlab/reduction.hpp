#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rlab/simplex.hpp"
#include "rlab/stats.hpp"

namespace rlab {

/// Time-stepping parameters for the channel diffusion (all times in seconds).
struct DiffusionParams {
  double tau_red = 1.0;
  double dt = 0.01;
  double max_time = 20.0;
  std::size_t n_trajectories = 0;
  std::uint64_t master_seed = 0;
  double absorption_threshold = kDefaultAbsorptionThreshold;
  /// Number of equally spaced times on [0, max_time] where the ensemble mean
  /// of p_j(t) is recorded.
  std::size_t n_saved_times = 21;

  /// Defaults dt = 0.01 tau_red and max_time = 20 tau_red.
  static DiffusionParams for_tau(double tau_red, std::size_t n_trajectories,
                                 std::uint64_t master_seed);
};

/// Time dependence of the reduction rate 1/tau_red(t).
struct RateSchedule {
  enum class Mode { constant, proximity };
  Mode mode = Mode::constant;
  // proximity mode: xi(t) = xi_init exp(t / tau_signal),
  // 1/tau_red(t) = exp(-xi(t)^2 / xi0^2) / tau_red_at_zero.
  double xi0 = 0.0;         // cm
  double xi_init = 0.0;     // cm
  double tau_signal = 0.0;  // s
  double tau_red_at_zero = 0.0;  // s

  static RateSchedule constant() { return {}; }
  static RateSchedule proximity(double xi0, double xi_init, double tau_signal,
                                double tau_red_at_zero);
};

/// Reduction rate 1/tau_red at time t for the proximity schedule.
double proximity_rate(const RateSchedule& schedule, double t);

/// Integral of the proximity rate over [0, t]: the expected number of
/// reduction time scales elapsed.
double proximity_integrated_rate(const RateSchedule& schedule, double t);

/// Rate at time t for either schedule; constant mode uses params.tau_red.
double reduction_rate_at(const RateSchedule& schedule, const DiffusionParams& params, double t);

struct TrajectoryResult {
  ChannelDistribution final;
  std::optional<double> exit_time;
  std::optional<std::size_t> exit_channel;
};

/// Simulates trajectory `trajectory_index` until one channel holds all the
/// probability or max_time is reached. The random stream is a pure function
/// of (master_seed, trajectory_index).
TrajectoryResult run_trajectory(const ChannelDistribution& p0, const DiffusionParams& params,
                                const RateSchedule& schedule, std::size_t trajectory_index);

struct EnsembleReport {
  std::vector<std::uint64_t> absorption_counts;
  std::vector<double> exit_times;  // trajectory order, resolved only
  std::vector<std::uint32_t> exit_channels;  // parallel to exit_times
  std::size_t unresolved_count = 0;
  std::size_t n_trajectories = 0;
  std::vector<double> saved_times;
  /// mean_trajectory[k][j] = ensemble mean of p_j at saved_times[k];
  /// absorbed trajectories are frozen at their vertex.
  std::vector<std::vector<double>> mean_trajectory;
  std::vector<std::vector<double>> mean_trajectory_stderr;

  std::vector<double> frequencies() const;
  stats::SurvivalCurve survival() const;
  /// Exponential fit of the survival tail over S in [s_low, s_high].
  stats::TailFit tail_fit(double s_high = 0.1, double s_low = 0.01) const;
  double mean_exit_time() const;
  /// Fraction of all trajectories absorbed in `channel` by each of `times`.
  std::vector<double> absorbed_history(std::size_t channel, std::span<const double> times) const;
};

/// Runs every trajectory; the report is bit-identical for a fixed seed
/// regardless of `threads` (0 = hardware concurrency).
EnsembleReport run_ensemble(const ChannelDistribution& p0, const DiffusionParams& params,
                            const RateSchedule& schedule, unsigned threads = 0);

struct DecoherenceParams {
  double t_deco = 1.0;
  double initial_offdiag_magnitude = 1.0;
};

/// |rho_12(t)| after decoherence: initial * exp(-t / t_deco).
double offdiag_magnitude(const DecoherenceParams& params, double t);

nlohmann::json to_json(const DiffusionParams& params);
nlohmann::json to_json(const RateSchedule& schedule);
/// Summary: counts, frequencies, exit-time quantiles and tail fit.
nlohmann::json to_json(const EnsembleReport& report);

}  // namespace rlab
