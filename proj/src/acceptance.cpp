#include "rlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "rlab/epr.hpp"
#include "rlab/factorization.hpp"
#include "rlab/fokker_planck.hpp"
#include "rlab/material.hpp"
#include "rlab/reduction.hpp"
#include "rlab/rng.hpp"
#include "rlab/stats.hpp"

namespace rlab::acceptance {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Independent sub-seeds so criteria do not share random streams.
std::uint64_t sub_seed(std::uint64_t seed, int criterion) {
  return stream_seed(seed, static_cast<std::uint64_t>(criterion), 0x61636365ULL);
}

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

json SuiteResult::report() const {
  json list = json::array();
  for (const auto& c : criteria) {
    list.push_back({{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"details", c.details}});
  }
  return {{"schema_version", kSchemaVersion},
          {"seed", seed},
          {"passed", passed()},
          {"criteria", list}};
}

json SuiteResult::timings() const {
  json list = json::array();
  for (const auto& c : criteria) {
    list.push_back({{"id", c.id}, {"seconds", c.seconds}, {"time_limit", c.time_limit}});
  }
  return {{"schema_version", kSchemaVersion}, {"criteria", list}};
}

CriterionResult born_rule(std::uint64_t seed, unsigned threads) {
  const auto t0 = Clock::now();
  CriterionResult r{1, "born_rule", true, json::array(), 0.0, 60.0};
  const std::vector<std::vector<double>> starts{{0.3, 0.7}, {0.1, 0.9}, {0.2, 0.3, 0.5}};
  constexpr std::size_t n = 100000;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const ChannelDistribution p0(starts[s]);
    const auto params = DiffusionParams::for_tau(1.0, n, sub_seed(seed, 1) + s);
    const auto rep = run_ensemble(p0, params, RateSchedule::constant(), threads);
    const auto f = rep.frequencies();
    std::vector<double> z(f.size());
    bool ok = true;
    for (std::size_t j = 0; j < f.size(); ++j) {
      z[j] = (f[j] - p0[j]) / stats::binomial_sigma(p0[j], n);
      ok = ok && std::abs(z[j]) <= 3.0;
    }
    r.passed = r.passed && ok;
    r.details.push_back({{"p0", starts[s]},
                         {"counts", rep.absorption_counts},
                         {"frequencies", f},
                         {"z_scores", z},
                         {"unresolved", rep.unresolved_count},
                         {"passed", ok}});
  }
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<CriterionResult> fp_mc_agreement(std::uint64_t seed, unsigned threads) {
  const auto t0 = Clock::now();
  constexpr double p_start = 0.3;
  constexpr std::size_t cells = 400;
  constexpr std::size_t n = 100000;
  const auto params = DiffusionParams::for_tau(1.0, n, sub_seed(seed, 2));
  const auto mc = run_ensemble(ChannelDistribution({p_start, 1.0 - p_start}), params,
                               RateSchedule::constant(), threads);
  FpOptions opt;
  opt.output_interval = 0.01;
  const auto fp = fp_solve(p_start, cells, params.max_time, opt);

  // FP absorbed_1 (p -> 1) is channel 0 winning in the Monte Carlo.
  const auto mc_win0 = mc.absorbed_history(0, fp.times);
  const auto mc_win1 = mc.absorbed_history(1, fp.times);
  double sup = 0.0;
  for (std::size_t k = 0; k < fp.times.size(); ++k) {
    sup = std::max({sup, std::abs(fp.absorbed_1[k] - mc_win0[k]),
                    std::abs(fp.absorbed_0[k] - mc_win1[k])});
  }
  const double final1 = fp.absorbed_1.back(), final0 = fp.absorbed_0.back();
  const double final_err = std::max(std::abs(final1 - p_start), std::abs(final0 - (1.0 - p_start)));
  CriterionResult c2{2, "fp_mc_agreement", sup <= 0.02 && final_err <= 1e-3, {}, 0.0, 0.0};
  c2.details = {{"p_start", p_start},
                {"cells", cells},
                {"trajectories", n},
                {"sup_norm", sup},
                {"fp_final_absorbed_0", final0},
                {"fp_final_absorbed_1", final1},
                {"fp_final_error", final_err},
                {"fp_max_mass_error", fp.max_mass_error}};

  const auto mc_tail = mc.tail_fit(0.1, 0.01);
  const auto fp_tail = fp.tail_fit(0.1, 0.01);
  const double rate_rel = rel_diff(mc_tail.rate, fp_tail.rate);
  const double vs_theory = mc_tail.rate * params.tau_red;
  const bool linear = mc_tail.points >= 3 && mc_tail.r2 > 0.99 && fp_tail.points >= 3 &&
                      fp_tail.r2 > 0.99;
  const bool agree = std::abs(mc_tail.rate - fp_tail.rate) <= 0.05 * fp_tail.rate;
  const bool factor4 = vs_theory >= 0.25 && vs_theory <= 4.0;
  CriterionResult c3{3, "exit_time_law", linear && agree && factor4, {}, 0.0, 0.0};
  c3.details = {{"window", {0.1, 0.01}},
                {"mc_rate", mc_tail.rate},
                {"mc_r2", mc_tail.r2},
                {"mc_points", mc_tail.points},
                {"fp_rate", fp_tail.rate},
                {"fp_r2", fp_tail.r2},
                {"fp_points", fp_tail.points},
                {"relative_difference", rate_rel},
                {"rate_times_tau_red", vs_theory}};
  c2.seconds = seconds_since(t0);
  return {c2, c3};
}

CriterionResult channel_count(std::uint64_t seed, unsigned threads) {
  const auto t0 = Clock::now();
  CriterionResult r{4, "channel_count", false, {}, 0.0, 0.0};
  constexpr std::size_t n = 20000;
  json runs = json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t channels : {2, 4, 8}) {
    const auto params = DiffusionParams::for_tau(1.0, n, sub_seed(seed, 4) + channels);
    const auto rep =
        run_ensemble(ChannelDistribution::uniform(channels), params, RateSchedule::constant(), threads);
    const double mean = rep.mean_exit_time();
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
    runs.push_back({{"channels", channels},
                    {"mean_exit_time", mean},
                    {"unresolved", rep.unresolved_count}});
  }
  r.passed = hi <= 2.0 * lo;
  r.details = {{"runs", runs}, {"max_over_min", hi / lo}};
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult physical_rates() {
  const auto t0 = Clock::now();
  CriterionResult r{5, "physical_rates", false, {}, 0.0, 0.0};
  auto params = material::MaterialParams::reference_example();
  const auto base = material::reduction_rate(params);
  const double tau_decades = std::log10(base.tau_red / material::kQuotedTauRed);
  const double xi0_decades = std::log10(base.xi0 / material::kQuotedXi0);

  std::vector<double> ratios;
  for (int k = 0; k <= 12; ++k) {
    params.xi = base.xi0 * 0.25 * k;
    const double macro = material::reduction_rate(params).inv_tau_red;
    const double micro = material::reduction_rate_microscopic(params, 1e-15);
    ratios.push_back(micro / macro);
  }
  const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = (*mx - *mn) / *mx;
  r.passed = std::abs(tau_decades) <= 1.0 && std::abs(xi0_decades) <= 1.0 && spread <= 1e-10;
  r.details = {{"tau_red", base.tau_red},
               {"tau_red_quoted", material::kQuotedTauRed},
               {"tau_red_decades_off", tau_decades},
               {"xi0", base.xi0},
               {"xi0_quoted", material::kQuotedXi0},
               {"xi0_decades_off", xi0_decades},
               {"microscopic_ratio", ratios.front()},
               {"microscopic_ratio_relative_spread", spread}};
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult overlap_identities(std::uint64_t seed) {
  const auto t0 = Clock::now();
  CriterionResult r{6, "overlap_identities", false, {}, 0.0, 0.0};
  std::mt19937_64 rng(sub_seed(seed, 6));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_ground = 0.0, worst_square = 0.0;
  constexpr int samples = 1000;
  for (int i = 0; i < samples; ++i) {
    const double N = std::pow(10.0, 6.0 * unit(rng));
    const double Delta = std::pow(10.0, -10.0 + 2.0 * unit(rng));
    const double alpha = 1.0 + 9.0 * unit(rng);
    // Exponents up to about 50 keep the values far from underflow.
    const double xi = Delta * std::sqrt(8.0 * alpha * 50.0 * unit(rng) / N);
    worst_ground = std::max(worst_ground, rel_diff(material::overlap_thermal(N, xi, Delta, 1.0),
                                                   material::overlap_ground(N, xi, Delta)));
    const double e = material::overlap_thermal(N, xi, Delta, alpha);
    worst_square =
        std::max(worst_square, rel_diff(material::orthogonality_bound(N, xi, Delta, alpha), e * e));
  }
  r.passed = worst_ground <= 1e-12 && worst_square <= 1e-12;
  r.details = {{"samples", samples},
               {"max_rel_thermal_vs_ground", worst_ground},
               {"max_rel_bound_vs_square", worst_square}};
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult epr_correlations(std::uint64_t seed, unsigned threads) {
  const auto t0 = Clock::now();
  CriterionResult r{7, "epr_correlations", true, json::array(), 0.0, 300.0};
  using C = std::complex<double>;
  const double s = std::numbers::sqrt2 / 2.0;
  const std::vector<std::pair<C, C>> states{{C(s, 0.0), C(-s, 0.0)},  // singlet
                                            {C(1.0, 0.0), C(0.0, 0.0)},
                                            {C(0.6, 0.0), C(0.0, 0.8)}};
  const std::vector<double> thetas{0.0, std::numbers::pi / 6.0, std::numbers::pi / 3.0,
                                   0.75 * std::numbers::pi};
  constexpr std::size_t n = 100000;
  std::uint64_t point = 0;
  for (const auto& [a, b] : states) {
    for (double theta : thetas) {
      const auto state = epr::rotate_pair(a, b, theta);
      epr::EprRunOptions opt;
      opt.n_runs = n;
      opt.threads = threads;
      opt.master_seed = sub_seed(seed, 7) + 2 * point;
      epr::EprSchedule sim;
      const auto rep = epr::run_epr_experiment(state, sim, opt);
      opt.master_seed += 1;
      epr::EprSchedule seq;
      seq.mode = epr::EprSchedule::Mode::sequential;
      const auto rep_seq = epr::run_epr_experiment(state, seq, opt);
      ++point;

      const double worst = rep.max_sigma_deviation();
      const auto homog = stats::chi2_homogeneity(rep.counts, rep_seq.counts);
      const bool ok = worst <= 3.0 && homog.p_value > 0.01 && rep.unresolved == 0 &&
                      rep_seq.unresolved == 0;
      r.passed = r.passed && ok;
      r.details.push_back({{"a", {a.real(), a.imag()}},
                           {"b", {b.real(), b.imag()}},
                           {"theta", theta},
                           {"expected", rep.expected},
                           {"counts_simultaneous", rep.counts},
                           {"counts_sequential", rep_seq.counts},
                           {"max_sigma_deviation", worst},
                           {"E", rep.correlation()},
                           {"E_expected", rep.expected_correlation()},
                           {"homogeneity_chi2", homog.statistic},
                           {"homogeneity_p_value", homog.p_value},
                           {"passed", ok}});
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

namespace {

template <typename Scalar>
factor::GriddedFunction<Scalar> random_grid(std::mt19937_64& rng, std::size_t n1, std::size_t n2) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.5, 3.0);
  auto a0 = factor::Axis::trapezoid(-u(rng), u(rng), n1);
  auto a1 = factor::Axis::trapezoid(-u(rng), u(rng), n2);
  std::vector<Scalar> v(n1 * n2);
  for (auto& x : v) {
    if constexpr (std::is_same_v<Scalar, double>) {
      x = g(rng);
    } else {
      x = Scalar(g(rng), g(rng));
    }
  }
  factor::GriddedFunction<Scalar> psi({a0, a1}, v);
  const double norm = std::sqrt(psi.norm2());
  for (auto& x : v) x /= norm;
  return factor::GriddedFunction<Scalar>({a0, a1}, std::move(v));
}

/// Compares factorize2 with an SVD of W1^1/2 psi W2^1/2. Factor products
/// phi1 phi2 are compared since they do not depend on the phase convention.
template <typename Scalar>
json compare_with_svd(const factor::GriddedFunction<Scalar>& psi, double& worst_value,
                      double& worst_factor, double& worst_trace) {
  const std::size_t n1 = psi.extent(0), n2 = psi.extent(1);
  const std::size_t rank = std::min(n1, n2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> b(n1, n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      b(i, j) = psi(i, j) * std::sqrt(psi.axis(0).weights[i] * psi.axis(1).weights[j]);
  Eigen::JacobiSVD<decltype(b)> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();

  const auto res = factor::factorize2(psi, rank);
  double value_err = 0.0;
  for (std::size_t k = 0; k < rank; ++k) {
    value_err = std::max(value_err, std::abs(res.eigenvalues[k] - sv(k) * sv(k)));
  }

  // Factors are only unique for isolated eigenvalues.
  double factor_err = 0.0;
  std::size_t compared = 0;
  for (std::size_t k = 0; k < std::min<std::size_t>(rank, 3); ++k) {
    const double gap_above = k == 0 ? 1.0 : sv(k - 1) * sv(k - 1) - sv(k) * sv(k);
    const double gap_below = k + 1 < rank ? sv(k) * sv(k) - sv(k + 1) * sv(k + 1) : 1.0;
    if (std::min(gap_above, gap_below) < 1e-4) continue;
    ++compared;
    const auto& f = res.factors[k];
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        Scalar v = svd.matrixV()(j, k);
        if constexpr (!std::is_same_v<Scalar, double>) v = std::conj(v);
        const Scalar oracle = svd.matrixU()(i, k) * sv(k) * v /
                              std::sqrt(psi.axis(0).weights[i] * psi.axis(1).weights[j]);
        factor_err = std::max(factor_err, std::abs(f.phi1[i] * f.phi2[j] - oracle));
      }
    }
  }
  const double trace_err = rel_diff(factor::build_kernel(psi).trace(), psi.norm2());
  worst_value = std::max(worst_value, value_err);
  worst_factor = std::max(worst_factor, factor_err);
  worst_trace = std::max(worst_trace, trace_err);
  return {{"shape", {n1, n2}},
          {"complex", !std::is_same_v<Scalar, double>},
          {"max_eigenvalue_error", value_err},
          {"factors_compared", compared},
          {"max_factor_error", factor_err},
          {"trace_error", trace_err}};
}

}  // namespace

CriterionResult factorization_oracle(std::uint64_t seed) {
  const auto t0 = Clock::now();
  CriterionResult r{8, "factorization_oracle", false, {}, 0.0, 0.0};
  std::mt19937_64 rng(sub_seed(seed, 8));
  std::uniform_int_distribution<std::size_t> size(2, 32);
  double worst_value = 0.0, worst_factor = 0.0, worst_trace = 0.0;
  json grids = json::array();
  for (int g = 0; g < 20; ++g) {
    const std::size_t n1 = size(rng), n2 = size(rng);
    if (g % 2 == 0) {
      grids.push_back(compare_with_svd(random_grid<double>(rng, n1, n2), worst_value,
                                       worst_factor, worst_trace));
    } else {
      grids.push_back(compare_with_svd(random_grid<std::complex<double>>(rng, n1, n2),
                                       worst_value, worst_factor, worst_trace));
    }
  }

  // Separable inputs: rank one recovers them exactly.
  double worst_separable = 0.0;
  std::normal_distribution<double> gauss;
  for (int g = 0; g < 5; ++g) {
    const double c1 = gauss(rng), c2 = gauss(rng), k1 = gauss(rng), k2 = gauss(rng);
    auto psi = factor::ComplexGrid::sample2(
        factor::Axis::trapezoid(-2.0, 2.0, 24), factor::Axis::trapezoid(-3.0, 1.0, 17),
        [&](double x, double y) {
          return std::exp(-(x - c1) * (x - c1)) * std::polar(1.0, k1 * x) *
                 (1.0 + 0.3 * y * y) * std::polar(std::exp(-0.5 * (y - c2) * (y - c2)), k2 * y);
        });
    const auto res = factor::factorize2(psi, 1);
    worst_separable = std::max({worst_separable, res.residual_J, res.residual_J / res.norm2});
  }

  // Three-variable order dependence on a generic input.
  auto psi3 = factor::RealGrid::sample3(
      factor::Axis::trapezoid(-2.0, 2.0, 12), factor::Axis::trapezoid(-2.0, 2.0, 10),
      factor::Axis::trapezoid(-2.0, 2.0, 8), [](double x, double y, double z) {
        return std::exp(-(x * x + y * y + z * z) / 2.0 - 0.8 * x * y + 0.3 * y * z) +
               0.4 * std::exp(-(x - 1.0) * (x - 1.0) - (z + 0.5) * (z + 0.5)) * y;
      });
  const auto three = factor::factorize3_all_orders(psi3);

  r.passed = worst_value <= 1e-10 && worst_factor <= 1e-10 && worst_trace <= 1e-12 &&
             worst_separable < 1e-12 && three.spread > 1e-6;
  r.details = {{"grids", grids},
               {"max_eigenvalue_error", worst_value},
               {"max_factor_error", worst_factor},
               {"max_trace_error", worst_trace},
               {"max_separable_J", worst_separable},
               {"three_variable", factor::to_json(three)}};
  r.seconds = seconds_since(t0);
  return r;
}

SuiteResult run_all(std::uint64_t seed, unsigned threads) {
  SuiteResult s;
  s.seed = seed;
  s.criteria.push_back(born_rule(seed, threads));
  for (auto& c : fp_mc_agreement(seed, threads)) s.criteria.push_back(std::move(c));
  s.criteria.push_back(channel_count(seed, threads));
  s.criteria.push_back(physical_rates());
  s.criteria.push_back(overlap_identities(seed));
  s.criteria.push_back(epr_correlations(seed, threads));
  s.criteria.push_back(factorization_oracle(seed));
  return s;
}

}  // namespace rlab::acceptance
