#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "rlab/simplex.hpp"
#include "rlab/stats.hpp"

namespace rlab::epr {

using Complex = std::complex<double>;

/// Joint outcome order used everywhere, including file output.
enum Outcome : std::size_t { kPlusPlus = 0, kPlusMinus = 1, kMinusPlus = 2, kMinusMinus = 3 };
inline constexpr std::array<int, 4> kAlphaSign{+1, +1, -1, -1};
inline constexpr std::array<int, 4> kBetaSign{+1, -1, +1, -1};

/// Pair a|+-> + b|-+> (z basis) re-expressed along an axis at angle theta.
struct EprState {
  Complex a;
  Complex b;
  double theta = 0.0;
  std::array<Complex, 4> coefficients{};  // (++, +-, -+, --)
};

/// c++ = -(a+b)cs, c+- = ac^2 - bs^2, c-+ = bc^2 - as^2, c-- = (a+b)cs with
/// c = cos(theta/2), s = sin(theta/2). Rejects |a|^2 + |b|^2 != 1 (1e-9).
EprState rotate_pair(Complex a, Complex b, double theta);

/// p_ab = |c_ab|^2 in (++, +-, -+, --) order.
ChannelDistribution joint_probabilities(const EprState& state);

/// Spin correlation sum_ab a b p_ab.
double correlation(std::span<const double> joint);

/// Step of the two local reduction processes. Apparatus 1 diffuses the
/// alpha-marginal with time scale tau1 and rescales each row, keeping
/// p(beta | alpha); apparatus 2 then does the same on the beta-marginal.
/// An infinite tau switches that apparatus off. noise1 and noise2 hold two
/// independent standard normals each, plus an optional third selecting the
/// branch of fit_step_to_simplex for the marginal.
ChannelDistribution two_apparatus_step(const ChannelDistribution& p, double dt, double tau1,
                                       double tau2, std::span<const double> noise1,
                                       std::span<const double> noise2);

/// One apparatus (1 or 2) acting on a raw joint vector with step h = dt / tau.
/// Does nothing once that apparatus's marginal sits at a vertex.
void apply_apparatus(std::array<double, 4>& joint, int apparatus, double h,
                     std::span<const double> noise,
                     double threshold = kDefaultAbsorptionThreshold);

struct EprSchedule {
  enum class Mode { simultaneous, sequential, overlapping };
  Mode mode = Mode::simultaneous;
  double tau_red_1 = 1.0;
  double tau_red_2 = 1.0;
  double start_delay_2 = 0.0;  // overlapping mode only
};

struct EprRunOptions {
  std::size_t n_runs = 0;
  std::uint64_t master_seed = 0;
  double dt_fraction = 0.01;    // dt = dt_fraction * min(tau1, tau2)
  double max_time_factor = 60;  // max_time = factor * (tau1 + tau2 + delay)
  bool keep_runs = false;       // retain per-run records
  unsigned threads = 0;
};

struct RunRecord {
  std::int8_t outcome_alpha = 0;  // +1 / -1, 0 unresolved
  std::int8_t outcome_beta = 0;
  double exit_time_1 = 0.0;
  double exit_time_2 = 0.0;
};

struct EprReport {
  EprState state;
  EprSchedule schedule;
  std::size_t n_runs = 0;
  std::size_t unresolved = 0;
  std::array<std::uint64_t, 4> counts{};
  std::array<double, 4> expected{};  // |c_ab|^2
  std::array<double, 4> frequencies() const;
  std::array<double, 2> alpha_marginal() const;  // (+, -)
  std::array<double, 2> beta_marginal() const;
  double correlation() const;
  double expected_correlation() const;
  stats::Chi2Result chi2() const;
  /// Largest |freq - expected| / sigma over the four outcomes (0 when sigma = 0
  /// and the frequency is exact).
  double max_sigma_deviation() const;
  std::vector<RunRecord> runs;
};

EprReport run_epr_experiment(const EprState& state, const EprSchedule& schedule,
                             const EprRunOptions& options);

nlohmann::json to_json(const EprReport& report);
nlohmann::json to_json(const EprSchedule& schedule);

}  // namespace rlab::epr
