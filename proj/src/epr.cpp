#include "rlab/epr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlab/errors.hpp"
#include "rlab/parallel.hpp"
#include "rlab/rng.hpp"

namespace rlab::epr {

namespace {

constexpr std::uint64_t kEprStreamDomain = 0x6570720000000000ULL;
constexpr std::size_t kChunk = 256;

// Joint indices belonging to the '+' and '-' outcome of each apparatus.
constexpr std::array<std::array<std::size_t, 2>, 2> kPlusCells{{{0, 1}, {0, 2}}};
constexpr std::array<std::array<std::size_t, 2>, 2> kMinusCells{{{2, 3}, {1, 3}}};

std::array<double, 2> marginal(const std::array<double, 4>& joint, int apparatus) {
  const auto& plus = kPlusCells[apparatus - 1];
  const auto& minus = kMinusCells[apparatus - 1];
  return {joint[plus[0]] + joint[plus[1]], joint[minus[0]] + joint[minus[1]]};
}

bool at_vertex(const std::array<double, 4>& joint, int apparatus) {
  const auto m = marginal(joint, apparatus);
  return m[0] == 0.0 || m[1] == 0.0;
}

}  // namespace

EprState rotate_pair(Complex a, Complex b, double theta) {
  require(std::isfinite(theta), "theta must be finite");
  const double norm = std::norm(a) + std::norm(b);
  require(std::abs(norm - 1.0) <= 1e-9, "EPR amplitudes must satisfy |a|^2 + |b|^2 = 1");
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  EprState st{a, b, theta, {}};
  st.coefficients[kPlusPlus] = -(a + b) * c * s;
  st.coefficients[kPlusMinus] = a * c * c - b * s * s;
  st.coefficients[kMinusPlus] = b * c * c - a * s * s;
  st.coefficients[kMinusMinus] = (a + b) * c * s;
  return st;
}

ChannelDistribution joint_probabilities(const EprState& state) {
  std::vector<double> p(4);
  for (std::size_t k = 0; k < 4; ++k) p[k] = std::norm(state.coefficients[k]);
  return ChannelDistribution(std::move(p));
}

double correlation(std::span<const double> joint) {
  require(joint.size() == 4, "correlation needs four joint probabilities");
  double e = 0.0;
  for (std::size_t k = 0; k < 4; ++k) e += kAlphaSign[k] * kBetaSign[k] * joint[k];
  return e;
}

void apply_apparatus(std::array<double, 4>& joint, int apparatus, double h,
                     std::span<const double> noise, double threshold) {
  require(apparatus == 1 || apparatus == 2, "apparatus must be 1 or 2");
  require(noise.size() == 2 || noise.size() == 3, "an apparatus step needs two or three normals");
  if (h <= 0.0 || at_vertex(joint, apparatus)) return;
  const auto m = marginal(joint, apparatus);
  std::array<double, 2> dm{};
  wright_fisher_increment(m, h, noise.first(2), dm);
  if (noise.size() > 2) fit_step_to_simplex(m, dm, noise[2]);
  std::array<double, 2> next{m[0] + dm[0], m[1] + dm[1]};
  for (double& v : next) {
    if (!(v >= threshold)) v = 0.0;
  }
  const double total = next[0] + next[1];
  if (total <= 0.0) return;
  next[0] /= total;
  next[1] /= total;

  const double f_plus = next[0] / m[0];
  const double f_minus = next[1] / m[1];
  for (std::size_t k : kPlusCells[apparatus - 1]) joint[k] *= f_plus;
  for (std::size_t k : kMinusCells[apparatus - 1]) joint[k] *= f_minus;

  double sum = 0.0;
  for (double& v : joint) {
    if (!(v >= threshold)) v = 0.0;
    sum += v;
  }
  for (double& v : joint) v /= sum;
}

ChannelDistribution two_apparatus_step(const ChannelDistribution& p, double dt, double tau1,
                                       double tau2, std::span<const double> noise1,
                                       std::span<const double> noise2) {
  require(p.size() == 4, "two_apparatus_step needs a four-channel joint distribution");
  require(dt > 0.0, "dt must be positive");
  require(tau1 > 0.0 && tau2 > 0.0, "reduction time scales must be positive");
  require((noise1.size() == 2 || noise1.size() == 3) && (noise2.size() == 2 || noise2.size() == 3),
          "each apparatus needs two normal draws, plus an optional selector");
  for (double x : noise1) require(std::isfinite(x), "non-finite noise draw");
  for (double x : noise2) require(std::isfinite(x), "non-finite noise draw");

  std::array<double, 4> joint{};
  std::copy(p.probs().begin(), p.probs().end(), joint.begin());
  apply_apparatus(joint, 1, std::isinf(tau1) ? 0.0 : dt / tau1, noise1);
  apply_apparatus(joint, 2, std::isinf(tau2) ? 0.0 : dt / tau2, noise2);
  ChannelDistribution next = p;
  next.update(joint);
  return next;
}

std::array<double, 4> EprReport::frequencies() const {
  std::array<double, 4> f{};
  if (n_runs == 0) return f;
  for (std::size_t k = 0; k < 4; ++k) {
    f[k] = static_cast<double>(counts[k]) / static_cast<double>(n_runs);
  }
  return f;
}

std::array<double, 2> EprReport::alpha_marginal() const {
  const auto f = frequencies();
  return {f[kPlusPlus] + f[kPlusMinus], f[kMinusPlus] + f[kMinusMinus]};
}

std::array<double, 2> EprReport::beta_marginal() const {
  const auto f = frequencies();
  return {f[kPlusPlus] + f[kMinusPlus], f[kPlusMinus] + f[kMinusMinus]};
}

double EprReport::correlation() const { return epr::correlation(frequencies()); }

double EprReport::expected_correlation() const { return epr::correlation(expected); }

stats::Chi2Result EprReport::chi2() const { return stats::chi2_goodness(counts, expected); }

double EprReport::max_sigma_deviation() const {
  const auto f = frequencies();
  double worst = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double sigma = stats::binomial_sigma(expected[k], n_runs);
    const double dev = std::abs(f[k] - expected[k]);
    if (sigma > 0.0) {
      worst = std::max(worst, dev / sigma);
    } else if (dev > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

EprReport run_epr_experiment(const EprState& state, const EprSchedule& schedule,
                             const EprRunOptions& options) {
  const double tau1 = schedule.tau_red_1, tau2 = schedule.tau_red_2;
  require(tau1 > 0.0 && std::isfinite(tau1) && tau2 > 0.0 && std::isfinite(tau2),
          "apparatus time scales must be positive and finite");
  require(schedule.start_delay_2 >= 0.0, "start_delay_2 must be non-negative");
  require(options.dt_fraction > 0.0 && options.dt_fraction <= 0.05,
          "dt_fraction must lie in (0, 0.05]");
  require(options.max_time_factor > 0.0, "max_time_factor must be positive");

  EprReport report;
  report.state = state;
  report.schedule = schedule;
  report.n_runs = options.n_runs;
  const auto initial = joint_probabilities(state);
  std::array<double, 4> p0{};
  for (std::size_t k = 0; k < 4; ++k) {
    p0[k] = initial[k];
    report.expected[k] = initial[k];
  }
  const std::size_t n = options.n_runs;
  if (n == 0) return report;

  const double dt = options.dt_fraction * std::min(tau1, tau2);
  const double delay =
      schedule.mode == EprSchedule::Mode::overlapping ? schedule.start_delay_2 : 0.0;
  const double max_time = options.max_time_factor * (tau1 + tau2 + delay);
  const auto max_steps = static_cast<std::size_t>(std::ceil(max_time / dt));
  const double h1 = dt / tau1, h2 = dt / tau2;

  std::vector<RunRecord> records(n);
  for_each_chunk(n, kChunk, options.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::array<double, 3> noise{};
    for (std::size_t i = begin; i < end; ++i) {
      NormalStream rng(options.master_seed, i, kEprStreamDomain);
      auto joint = p0;
      RunRecord rec;
      bool done1 = at_vertex(joint, 1), done2 = at_vertex(joint, 2);
      rec.exit_time_1 = done1 ? 0.0 : std::nan("");
      rec.exit_time_2 = done2 ? 0.0 : std::nan("");
      double start2 = schedule.mode == EprSchedule::Mode::sequential
                          ? (done1 ? 0.0 : std::numeric_limits<double>::infinity())
                          : delay;
      std::size_t step = 0;
      while (!(done1 && done2) && step < max_steps) {
        const double t = static_cast<double>(step) * dt;
        if (!done1) {
          rng.fill(noise);
          apply_apparatus(joint, 1, h1, noise);
        }
        if (!done2 && t >= start2) {
          rng.fill(noise);
          apply_apparatus(joint, 2, h2, noise);
        }
        ++step;
        const double now = static_cast<double>(step) * dt;
        if (!done1 && at_vertex(joint, 1)) {
          done1 = true;
          rec.exit_time_1 = now;
          if (schedule.mode == EprSchedule::Mode::sequential) start2 = now;
        }
        if (!done2 && at_vertex(joint, 2)) {
          done2 = true;
          rec.exit_time_2 = now;
        }
      }
      if (done1 && done2) {
        const auto winner = static_cast<std::size_t>(
            std::max_element(joint.begin(), joint.end()) - joint.begin());
        rec.outcome_alpha = static_cast<std::int8_t>(kAlphaSign[winner]);
        rec.outcome_beta = static_cast<std::int8_t>(kBetaSign[winner]);
      }
      records[i] = rec;
    }
  });

  for (const auto& rec : records) {
    if (rec.outcome_alpha == 0) {
      ++report.unresolved;
      continue;
    }
    const std::size_t k = (rec.outcome_alpha > 0 ? 0 : 2) + (rec.outcome_beta > 0 ? 0 : 1);
    ++report.counts[k];
  }
  if (options.keep_runs) report.runs = std::move(records);
  return report;
}

nlohmann::json to_json(const EprSchedule& schedule) {
  const char* mode = schedule.mode == EprSchedule::Mode::simultaneous ? "simultaneous"
                     : schedule.mode == EprSchedule::Mode::sequential ? "sequential"
                                                                      : "overlapping";
  return {{"mode", mode},
          {"tau_red_1", schedule.tau_red_1},
          {"tau_red_2", schedule.tau_red_2},
          {"start_delay_2", schedule.start_delay_2}};
}

nlohmann::json to_json(const EprReport& report) {
  const auto chi = report.chi2();
  const auto f = report.frequencies();
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : report.state.coefficients) coeffs.push_back({c.real(), c.imag()});
  return {{"a", {report.state.a.real(), report.state.a.imag()}},
          {"b", {report.state.b.real(), report.state.b.imag()}},
          {"theta", report.state.theta},
          {"coefficients", coeffs},
          {"schedule", to_json(report.schedule)},
          {"n_runs", report.n_runs},
          {"unresolved", report.unresolved},
          {"order", {"++", "+-", "-+", "--"}},
          {"counts", report.counts},
          {"frequencies", f},
          {"expected", report.expected},
          {"alpha_marginal", report.alpha_marginal()},
          {"beta_marginal", report.beta_marginal()},
          {"E", report.correlation()},
          {"E_expected", report.expected_correlation()},
          {"max_sigma_deviation", report.max_sigma_deviation()},
          {"chi2", {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}}}};
}

}  // namespace rlab::epr
