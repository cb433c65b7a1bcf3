#include "rlab/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rng.hpp"

namespace rlab {

namespace {

constexpr std::size_t kChunk = 256;

void validate(const ChannelDistribution& p0, const DiffusionParams& params,
              const RateSchedule& schedule) {
  require(params.dt > 0.0 && std::isfinite(params.dt), "dt must be positive");
  require(params.max_time > 0.0 && std::isfinite(params.max_time), "max_time must be positive");
  require(params.absorption_threshold > 0.0 && params.absorption_threshold < 0.5,
          "absorption_threshold must lie in (0, 0.5)");
  require(params.n_saved_times >= 2, "n_saved_times must be at least 2");
  if (schedule.mode == RateSchedule::Mode::constant) {
    require(params.tau_red > 0.0 && std::isfinite(params.tau_red), "tau_red must be positive");
    require(params.dt <= 0.05 * params.tau_red * (1.0 + 1e-12),
            "dt must not exceed 0.05 tau_red");
  } else {
    require(schedule.tau_red_at_zero > 0.0, "tau_red_at_zero must be positive");
    require(schedule.xi0 > 0.0, "xi0 must be positive");
    require(schedule.tau_signal > 0.0, "tau_signal must be positive");
    require(schedule.xi_init >= 0.0, "xi_init must be non-negative");
    require(params.dt <= 0.05 * schedule.tau_red_at_zero * (1.0 + 1e-12),
            "dt must not exceed 0.05 tau_red_at_zero");
  }
  (void)p0;
}

std::size_t step_count(const DiffusionParams& params) {
  return static_cast<std::size_t>(std::ceil(params.max_time / params.dt - 1e-9));
}

/// Step indices at which the saved grid is sampled.
std::vector<std::size_t> save_steps(const DiffusionParams& params, std::vector<double>& times) {
  const std::size_t n = params.n_saved_times;
  const std::size_t last = step_count(params);
  std::vector<std::size_t> steps(n);
  times.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = params.max_time * static_cast<double>(k) / static_cast<double>(n - 1);
    steps[k] = std::min(last, static_cast<std::size_t>(std::llround(t / params.dt)));
    times[k] = static_cast<double>(steps[k]) * params.dt;
  }
  return steps;
}

bool settle_if_absorbed(ChannelDistribution& p, double threshold) {
  if (p.winner()) return true;
  const auto probs = p.probs();
  const auto it = std::max_element(probs.begin(), probs.end());
  if (*it >= 1.0 - threshold) {
    p.snap_to(static_cast<std::size_t>(it - probs.begin()));
    return true;
  }
  return false;
}

/// Shared trajectory loop. `observe(step, p)` sees the state after each step
/// until exit (inclusive).
template <typename Observer>
TrajectoryResult simulate(const ChannelDistribution& p0, const DiffusionParams& params,
                          const RateSchedule& schedule, std::size_t index, Observer&& observe) {
  ChannelDistribution p = p0;
  TrajectoryResult result{p0, std::nullopt, std::nullopt};
  const std::size_t n = p.size();
  std::vector<double> noise(n + 1), scratch(n);
  NormalStream rng(params.master_seed, index);

  const std::size_t n_steps = step_count(params);
  bool done = settle_if_absorbed(p, params.absorption_threshold);
  observe(std::size_t{0}, p);
  std::size_t step = 0;
  while (!done && step < n_steps) {
    const double t = static_cast<double>(step) * params.dt;
    const double h = params.dt * reduction_rate_at(schedule, params, t);
    ++step;
    if (h > 0.0) {
      rng.fill(noise);
      sample_step_inplace(p, h, noise, scratch, params.absorption_threshold);
    }
    done = settle_if_absorbed(p, params.absorption_threshold);
    observe(step, p);
  }
  if (done) {
    result.exit_time = static_cast<double>(step) * params.dt;
    result.exit_channel = p.winner();
  }
  result.final = std::move(p);
  return result;
}

}  // namespace

DiffusionParams DiffusionParams::for_tau(double tau_red, std::size_t n_trajectories,
                                         std::uint64_t master_seed) {
  DiffusionParams p;
  p.tau_red = tau_red;
  p.dt = 0.01 * tau_red;
  p.max_time = 20.0 * tau_red;
  p.n_trajectories = n_trajectories;
  p.master_seed = master_seed;
  return p;
}

RateSchedule RateSchedule::proximity(double xi0, double xi_init, double tau_signal,
                                     double tau_red_at_zero) {
  RateSchedule s;
  s.mode = Mode::proximity;
  s.xi0 = xi0;
  s.xi_init = xi_init;
  s.tau_signal = tau_signal;
  s.tau_red_at_zero = tau_red_at_zero;
  return s;
}

double proximity_rate(const RateSchedule& schedule, double t) {
  require(schedule.mode == RateSchedule::Mode::proximity, "schedule is not in proximity mode");
  const double xi = schedule.xi_init * std::exp(t / schedule.tau_signal);
  const double u = (xi / schedule.xi0) * (xi / schedule.xi0);
  return std::exp(-u) / schedule.tau_red_at_zero;
}

double proximity_integrated_rate(const RateSchedule& schedule, double t) {
  require(schedule.mode == RateSchedule::Mode::proximity, "schedule is not in proximity mode");
  require(t >= 0.0, "t must be non-negative");
  if (schedule.xi_init == 0.0) return t / schedule.tau_red_at_zero;
  // With u = xi(t)^2 / xi0^2, dt = tau_signal du / (2u), so the integral is
  // tau_signal / (2 tau0) [E1(u0) - E1(u1)] and E1(x) = -Ei(-x).
  const double u0 = std::pow(schedule.xi_init / schedule.xi0, 2);
  const double u1 = u0 * std::exp(2.0 * t / schedule.tau_signal);
  auto e1 = [](double x) { return std::isinf(x) ? 0.0 : -std::expint(-x); };
  return schedule.tau_signal / (2.0 * schedule.tau_red_at_zero) * (e1(u0) - e1(u1));
}

double reduction_rate_at(const RateSchedule& schedule, const DiffusionParams& params, double t) {
  if (schedule.mode == RateSchedule::Mode::constant) return 1.0 / params.tau_red;
  return proximity_rate(schedule, t);
}

TrajectoryResult run_trajectory(const ChannelDistribution& p0, const DiffusionParams& params,
                                const RateSchedule& schedule, std::size_t trajectory_index) {
  validate(p0, params, schedule);
  require(params.n_trajectories == 0 || trajectory_index < params.n_trajectories,
          "trajectory_index out of range");
  return simulate(p0, params, schedule, trajectory_index, [](std::size_t, const auto&) {});
}

EnsembleReport run_ensemble(const ChannelDistribution& p0, const DiffusionParams& params,
                            const RateSchedule& schedule, unsigned threads) {
  validate(p0, params, schedule);
  const std::size_t n = params.n_trajectories;
  const std::size_t channels = p0.size();

  EnsembleReport report;
  report.n_trajectories = n;
  report.absorption_counts.assign(channels, 0);
  const auto saves = save_steps(params, report.saved_times);
  const std::size_t n_saved = saves.size();
  if (n == 0) return report;

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> exit_time(n, kNaN);
  std::vector<std::int32_t> exit_channel(n, -1);

  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  const std::size_t cells = n_saved * channels;
  std::vector<std::vector<double>> chunk_sum(n_chunks), chunk_sq(n_chunks);

  for_each_chunk(n, kChunk, threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<double> sum(cells, 0.0), sq(cells, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t next_save = 0;
      auto record = [&](const ChannelDistribution& p) {
        for (std::size_t j = 0; j < channels; ++j) {
          const double v = p[j];
          sum[next_save * channels + j] += v;
          sq[next_save * channels + j] += v * v;
        }
        ++next_save;
      };
      auto res = simulate(p0, params, schedule, i, [&](std::size_t step, const auto& p) {
        while (next_save < n_saved && saves[next_save] == step) record(p);
      });
      while (next_save < n_saved) record(res.final);
      if (res.exit_time) {
        exit_time[i] = *res.exit_time;
        exit_channel[i] = static_cast<std::int32_t>(*res.exit_channel);
      }
    }
    chunk_sum[c] = std::move(sum);
    chunk_sq[c] = std::move(sq);
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (exit_channel[i] < 0) {
      ++report.unresolved_count;
      continue;
    }
    ++report.absorption_counts[static_cast<std::size_t>(exit_channel[i])];
    report.exit_times.push_back(exit_time[i]);
    report.exit_channels.push_back(static_cast<std::uint32_t>(exit_channel[i]));
  }

  std::vector<double> sum(cells, 0.0), sq(cells, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    for (std::size_t k = 0; k < cells; ++k) {
      sum[k] += chunk_sum[c][k];
      sq[k] += chunk_sq[c][k];
    }
  }
  const double nd = static_cast<double>(n);
  report.mean_trajectory.assign(n_saved, std::vector<double>(channels));
  report.mean_trajectory_stderr.assign(n_saved, std::vector<double>(channels));
  for (std::size_t k = 0; k < n_saved; ++k) {
    for (std::size_t j = 0; j < channels; ++j) {
      const double mean = sum[k * channels + j] / nd;
      const double var = std::max(0.0, sq[k * channels + j] / nd - mean * mean);
      report.mean_trajectory[k][j] = mean;
      report.mean_trajectory_stderr[k][j] = n > 1 ? std::sqrt(var / (nd - 1.0)) : 0.0;
    }
  }
  return report;
}

std::vector<double> EnsembleReport::frequencies() const {
  std::vector<double> f(absorption_counts.size(), 0.0);
  if (n_trajectories == 0) return f;
  for (std::size_t j = 0; j < f.size(); ++j) {
    f[j] = static_cast<double>(absorption_counts[j]) / static_cast<double>(n_trajectories);
  }
  return f;
}

stats::SurvivalCurve EnsembleReport::survival() const {
  return stats::empirical_survival(exit_times, n_trajectories);
}

stats::TailFit EnsembleReport::tail_fit(double s_high, double s_low) const {
  const auto curve = survival();
  return stats::fit_survival_tail(curve.times, curve.survival, s_high, s_low);
}

double EnsembleReport::mean_exit_time() const {
  if (exit_times.empty()) return std::nan("");
  double s = 0.0;
  for (double t : exit_times) s += t;
  return s / static_cast<double>(exit_times.size());
}

std::vector<double> EnsembleReport::absorbed_history(std::size_t channel,
                                                     std::span<const double> times) const {
  std::vector<double> mine;
  for (std::size_t i = 0; i < exit_times.size(); ++i) {
    if (exit_channels[i] == channel) mine.push_back(exit_times[i]);
  }
  std::sort(mine.begin(), mine.end());
  std::vector<double> out(times.size(), 0.0);
  if (n_trajectories == 0) return out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto count = std::upper_bound(mine.begin(), mine.end(), times[k]) - mine.begin();
    out[k] = static_cast<double>(count) / static_cast<double>(n_trajectories);
  }
  return out;
}

double offdiag_magnitude(const DecoherenceParams& params, double t) {
  require(params.t_deco > 0.0, "t_deco must be positive");
  require(t >= 0.0, "t must be non-negative");
  return params.initial_offdiag_magnitude * std::exp(-t / params.t_deco);
}

nlohmann::json to_json(const DiffusionParams& params) {
  return {{"tau_red", params.tau_red},
          {"dt", params.dt},
          {"max_time", params.max_time},
          {"n_trajectories", params.n_trajectories},
          {"master_seed", params.master_seed},
          {"absorption_threshold", params.absorption_threshold},
          {"n_saved_times", params.n_saved_times}};
}

nlohmann::json to_json(const RateSchedule& schedule) {
  if (schedule.mode == RateSchedule::Mode::constant) return {{"mode", "constant"}};
  return {{"mode", "proximity"},
          {"xi0", schedule.xi0},
          {"xi_init", schedule.xi_init},
          {"tau_signal", schedule.tau_signal},
          {"tau_red_at_zero", schedule.tau_red_at_zero}};
}

nlohmann::json to_json(const EnsembleReport& report) {
  std::vector<double> sorted = report.exit_times;
  std::sort(sorted.begin(), sorted.end());
  nlohmann::json quantiles = nlohmann::json::object();
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    char key[16];
    std::snprintf(key, sizeof key, "q%02d", static_cast<int>(std::lround(q * 100)));
    quantiles[key] = sorted.empty() ? nlohmann::json(nullptr)
                                    : nlohmann::json(stats::quantile_sorted(sorted, q));
  }
  const auto tail = report.tail_fit();
  return {{"n_trajectories", report.n_trajectories},
          {"counts", report.absorption_counts},
          {"frequencies", report.frequencies()},
          {"unresolved", report.unresolved_count},
          {"mean_exit_time", sorted.empty() ? nlohmann::json(nullptr)
                                            : nlohmann::json(report.mean_exit_time())},
          {"exit_time_quantiles", quantiles},
          {"tail_fit",
           {{"rate", tail.rate}, {"r2", tail.r2}, {"points", tail.points},
            {"s_high", tail.s_high}, {"s_low", tail.s_low}}},
          {"saved_times", report.saved_times},
          {"mean_trajectory", report.mean_trajectory}};
}

}  // namespace rlab
