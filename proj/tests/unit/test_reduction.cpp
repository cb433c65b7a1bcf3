#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rlab/errors.hpp"
#include "rlab/reduction.hpp"

using namespace rlab;

TEST_CASE("a vertex exits at t = 0") {
  const auto params = DiffusionParams::for_tau(1.0, 1, 7);
  const auto r = run_trajectory(ChannelDistribution({1.0, 0.0}), params, RateSchedule::constant(), 0);
  REQUIRE(r.exit_time);
  CHECK(*r.exit_time == 0.0);
  CHECK(r.exit_channel == 0u);
}

TEST_CASE("empty ensemble") {
  const auto params = DiffusionParams::for_tau(1.0, 0, 7);
  const auto rep = run_ensemble(ChannelDistribution({0.5, 0.5}), params, RateSchedule::constant());
  CHECK(rep.n_trajectories == 0);
  CHECK(rep.exit_times.empty());
  CHECK(rep.absorption_counts == std::vector<std::uint64_t>{0, 0});
}

TEST_CASE("parameter validation") {
  auto params = DiffusionParams::for_tau(1.0, 10, 1);
  params.dt = 0.1;
  CHECK_THROWS_AS(run_ensemble(ChannelDistribution({0.5, 0.5}), params, RateSchedule::constant()),
                  ValidationError);
  params = DiffusionParams::for_tau(0.0, 10, 1);
  CHECK_THROWS_AS(run_ensemble(ChannelDistribution({0.5, 0.5}), params, RateSchedule::constant()),
                  ValidationError);
}

TEST_CASE("trajectories depend only on the seed and their index") {
  const auto params = DiffusionParams::for_tau(1.0, 50, 99);
  const ChannelDistribution p0({0.2, 0.3, 0.5});
  const auto a = run_trajectory(p0, params, RateSchedule::constant(), 17);
  const auto b = run_trajectory(p0, params, RateSchedule::constant(), 17);
  CHECK(a.exit_time == b.exit_time);
  CHECK(a.exit_channel == b.exit_channel);
  const auto rep = run_ensemble(p0, params, RateSchedule::constant(), 3);
  // Resolved exit times are stored in trajectory order.
  std::size_t k = 0;
  for (std::size_t i = 0; i < 17; ++i) {
    if (run_trajectory(p0, params, RateSchedule::constant(), i).exit_time) ++k;
  }
  REQUIRE(a.exit_time);
  CHECK(rep.exit_times[k] == *a.exit_time);
}

TEST_CASE("ensemble report is independent of the worker count") {
  const auto params = DiffusionParams::for_tau(1.0, 3000, 5);
  const ChannelDistribution p0({0.25, 0.25, 0.5});
  const auto one = run_ensemble(p0, params, RateSchedule::constant(), 1);
  const auto many = run_ensemble(p0, params, RateSchedule::constant(), 5);
  CHECK(to_json(one).dump() == to_json(many).dump());
  CHECK(one.mean_trajectory == many.mean_trajectory);
  CHECK(one.exit_times == many.exit_times);
}

TEST_CASE("Born rule for a symmetric and an asymmetric start") {
  for (double p : {0.5, 0.3}) {
    constexpr std::size_t n = 100000;
    const auto params = DiffusionParams::for_tau(1.0, n, 2024 + static_cast<int>(10 * p));
    const auto rep = run_ensemble(ChannelDistribution({p, 1.0 - p}), params, RateSchedule::constant());
    const auto total = std::accumulate(rep.absorption_counts.begin(), rep.absorption_counts.end(),
                                       std::uint64_t{0}) + rep.unresolved_count;
    CHECK(total == n);
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(rep.frequencies()[0] - p) <= 3 * sigma);
  }
}

TEST_CASE("ensemble mean of p_j stays at p0 on the saved grid") {
  constexpr std::size_t n = 20000;
  const auto params = DiffusionParams::for_tau(1.0, n, 31);
  const ChannelDistribution p0({0.2, 0.3, 0.5});
  const auto rep = run_ensemble(p0, params, RateSchedule::constant());
  REQUIRE(rep.mean_trajectory.size() == params.n_saved_times);
  for (std::size_t k = 0; k < rep.saved_times.size(); ++k) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double se = rep.mean_trajectory_stderr[k][j];
      CHECK(std::abs(rep.mean_trajectory[k][j] - p0[j]) <= 4 * se + 1e-12);
    }
  }
}

TEST_CASE("exit-time tail is a single exponential") {
  const auto params = DiffusionParams::for_tau(1.0, 40000, 8);
  const auto rep = run_ensemble(ChannelDistribution({0.3, 0.7}), params, RateSchedule::constant());
  const auto fit = rep.tail_fit();
  CHECK(fit.r2 > 0.99);
  CHECK(fit.rate > 0.0);
  // Rate is reproducible across seeds.
  const auto other = run_ensemble(ChannelDistribution({0.3, 0.7}),
                                  DiffusionParams::for_tau(1.0, 40000, 9), RateSchedule::constant());
  CHECK(std::abs(other.tail_fit().rate - fit.rate) <= 0.05 * fit.rate);
}

TEST_CASE("mean exit time barely depends on the channel count") {
  const auto two = run_ensemble(ChannelDistribution::uniform(2),
                                DiffusionParams::for_tau(1.0, 5000, 1), RateSchedule::constant());
  const auto four = run_ensemble(ChannelDistribution::uniform(4),
                                 DiffusionParams::for_tau(1.0, 5000, 2), RateSchedule::constant());
  const double r = four.mean_exit_time() / two.mean_exit_time();
  CHECK(r < 2.0);
  CHECK(r > 0.5);
}

TEST_CASE("time scale enters only through dt / tau_red") {
  // Same seed, tau scaled by 1e-22: exit times scale exactly.
  const auto a = DiffusionParams::for_tau(1.0, 200, 4);
  const auto b = DiffusionParams::for_tau(1e-22, 200, 4);
  const ChannelDistribution p0({0.4, 0.6});
  const auto ra = run_ensemble(p0, a, RateSchedule::constant());
  const auto rb = run_ensemble(p0, b, RateSchedule::constant());
  REQUIRE(ra.exit_times.size() == rb.exit_times.size());
  CHECK(ra.absorption_counts == rb.absorption_counts);
  for (std::size_t i = 0; i < ra.exit_times.size(); ++i) {
    CHECK(rb.exit_times[i] == doctest::Approx(ra.exit_times[i] * 1e-22).epsilon(1e-9));
  }
}

TEST_CASE("decoherence decay") {
  const DecoherenceParams d{2.0, 1.0};
  CHECK(offdiag_magnitude(d, 0.0) == 1.0);
  CHECK(offdiag_magnitude(d, 2.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(offdiag_magnitude(d, 40.0) < 1e-8);
}

TEST_CASE("proximity schedule") {
  const auto s = RateSchedule::proximity(1e-11, 0.0, 1e-10, 1e-22);
  CHECK(proximity_rate(s, 0.0) == doctest::Approx(1e22));

  // xi(t) = xi0 at t = tau' ln(xi0 / xi_init): rate reduced by e.
  const auto g = RateSchedule::proximity(1e-11, 1e-13, 1e-10, 1e-22);
  const double t1 = 1e-10 * std::log(100.0);
  CHECK(proximity_rate(g, t1) == doctest::Approx(1e22 * std::exp(-1.0)));

  // Closed-form integral against a fine midpoint rule.
  const double t_end = 1e-10 * std::log(300.0);
  constexpr int m = 200000;
  double sum = 0.0;
  for (int i = 0; i < m; ++i) sum += proximity_rate(g, (i + 0.5) * t_end / m) * t_end / m;
  CHECK(proximity_integrated_rate(g, t_end) == doctest::Approx(sum).epsilon(1e-8));
  // Plenty of reduction time scales elapse before xi passes xi0.
  CHECK(proximity_integrated_rate(g, t1) > 1e10);
}

TEST_CASE("proximity ensemble resolves during the proximity window") {
  auto params = DiffusionParams::for_tau(1e-22, 2000, 6);
  params.max_time = 20e-22;
  const auto s = RateSchedule::proximity(1e-11, 1e-13, 1e-10, 1e-22);
  const auto rep = run_ensemble(ChannelDistribution({0.3, 0.7}), params, s);
  CHECK(rep.unresolved_count < 20);
}
