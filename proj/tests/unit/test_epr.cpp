#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rlab/epr.hpp"
#include "rlab/errors.hpp"
#include "rlab/rng.hpp"

using namespace rlab;
using namespace rlab::epr;

namespace {

const double kS = std::numbers::sqrt2 / 2.0;

void check_coeffs(const EprState& s, std::array<Complex, 4> expected) {
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(s.coefficients[k] - expected[k]) < 1e-14);
  }
}

}  // namespace

TEST_CASE("rotated coefficients") {
  check_coeffs(rotate_pair({0.6, 0.0}, {0.0, 0.8}, 0.0), {0.0, Complex(0.6), Complex(0.0, 0.8), 0.0});
  for (double theta : {0.1, 1.0, 2.5}) {
    check_coeffs(rotate_pair({kS, 0}, {-kS, 0}, theta), {0.0, kS, -kS, 0.0});
  }
  check_coeffs(rotate_pair({1, 0}, {0, 0}, std::numbers::pi / 2), {-0.5, 0.5, -0.5, 0.5});
  CHECK_THROWS_AS(rotate_pair({1, 0}, {1, 0}, 0.3), ValidationError);
}

TEST_CASE("joint probabilities") {
  const auto p = joint_probabilities(rotate_pair({1, 0}, {0, 0}, 0.0));
  CHECK(p[kPlusMinus] == 1.0);
  const auto singlet = joint_probabilities(rotate_pair({kS, 0}, {-kS, 0}, 0.9));
  CHECK(singlet[kPlusMinus] == doctest::Approx(0.5));
  CHECK(singlet[kMinusPlus] == doctest::Approx(0.5));
  CHECK(correlation(singlet.probs()) == doctest::Approx(-1.0));

  // Normalization holds for arbitrary amplitudes and angles (before renormalizing).
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Complex a(u(rng), u(rng)), b(u(rng), u(rng));
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    const auto s = rotate_pair(a / n, b / n, 3.0 * u(rng));
    double total = 0.0;
    for (const auto& c : s.coefficients) total += std::norm(c);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
  }
  const auto s = rotate_pair({0.8, 0}, {0.6, 0}, std::numbers::pi / 3);
  double total = 0.0;
  for (const auto& c : s.coefficients) total += std::norm(c);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a reduced joint distribution is left alone") {
  const ChannelDistribution p = ChannelDistribution::vertex(4, kMinusPlus);
  const std::vector<double> n1{0.7, -1.2}, n2{2.0, 0.1};
  const auto next = two_apparatus_step(p, 0.01, 1.0, 1.0, n1, n2);
  for (std::size_t k = 0; k < 4; ++k) CHECK(next[k] == p[k]);
}

TEST_CASE("switched-off apparatus keeps the conditionals exactly") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  const ChannelDistribution p({0.1, 0.2, 0.3, 0.4});
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> n1{g(rng), g(rng)}, n2{g(rng), g(rng)};
    const auto next =
        two_apparatus_step(p, 0.01, 1.0, std::numeric_limits<double>::infinity(), n1, n2);
    // p(beta | alpha) unchanged within each alpha row.
    CHECK(next[kPlusPlus] / (next[kPlusPlus] + next[kPlusMinus]) == doctest::Approx(1.0 / 3.0));
    CHECK(next[kMinusPlus] / (next[kMinusPlus] + next[kMinusMinus]) == doctest::Approx(3.0 / 7.0));
  }
}

TEST_CASE("apparatus 2 keeps p(alpha | beta) exactly") {
  std::array<double, 4> joint{0.15, 0.25, 0.35, 0.25};
  const std::vector<double> noise{0.3, -0.8};
  apply_apparatus(joint, 2, 0.02, noise);
  CHECK(joint[kPlusPlus] / (joint[kPlusPlus] + joint[kMinusPlus]) == doctest::Approx(0.3));
  CHECK(joint[kPlusMinus] / (joint[kPlusMinus] + joint[kMinusMinus]) == doctest::Approx(0.5));
  CHECK_THROWS_AS(apply_apparatus(joint, 3, 0.02, noise), ValidationError);
}

TEST_CASE("one-step covariance is the sum of the two marginal contributions") {
  // Oracle: with small h the joint increment is linear in the marginal
  // increments dA, dB:  dp_ab = p_ab (s_a dA / P(a) + s_b dB / Q(b)),
  // where Var dA = Var dB = h P(+) P(-) (resp. Q) and dA, dB independent.
  const std::array<double, 4> p0{0.1, 0.2, 0.3, 0.4};
  const double h = 1e-4;
  const double Pp = p0[0] + p0[1], Pm = 1 - Pp, Qp = p0[0] + p0[2], Qm = 1 - Qp;
  const std::array<double, 4> ga{1 / Pp, 1 / Pp, -1 / Pm, -1 / Pm};
  const std::array<double, 4> gb{1 / Qp, -1 / Qm, 1 / Qp, -1 / Qm};
  double expected[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      expected[i][j] = p0[i] * p0[j] * (ga[i] * ga[j] * h * Pp * Pm + gb[i] * gb[j] * h * Qp * Qm);

  constexpr int n = 1000000;
  NormalStream rng(5, 0);
  std::array<double, 2> n1{}, n2{};
  double m[4][4] = {};
  for (int s = 0; s < n; ++s) {
    rng.fill(n1);
    rng.fill(n2);
    auto joint = p0;
    apply_apparatus(joint, 1, h, n1);
    apply_apparatus(joint, 2, h, n2);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m[i][j] += (joint[i] - p0[i]) * (joint[j] - p0[j]);
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt((expected[i][i] * expected[j][j] + expected[i][j] * expected[i][j]) / n);
      CHECK(std::abs(m[i][j] / n - expected[i][j]) <= 3 * se + 1e-3 * std::abs(expected[i][j]));
    }
  }
}

TEST_CASE("one-step joint mean is unbiased") {
  const std::array<double, 4> p0{0.05, 0.15, 0.3, 0.5};
  constexpr int n = 400000;
  NormalStream rng(6, 0);
  std::array<double, 3> n1{}, n2{};
  std::array<double, 4> mean{}, sq{};
  for (int s = 0; s < n; ++s) {
    rng.fill(n1);
    rng.fill(n2);
    auto joint = p0;
    apply_apparatus(joint, 1, 0.01, n1);
    apply_apparatus(joint, 2, 0.01, n2);
    for (int k = 0; k < 4; ++k) {
      mean[k] += joint[k];
      sq[k] += joint[k] * joint[k];
    }
  }
  for (int k = 0; k < 4; ++k) {
    const double m = mean[k] / n, var = sq[k] / n - m * m;
    CHECK(std::abs(m - p0[k]) <= 4 * std::sqrt(var / n));
  }
}

TEST_CASE("singlet experiment") {
  EprRunOptions opt;
  opt.n_runs = 20000;
  opt.master_seed = 3;
  const auto rep = run_epr_experiment(rotate_pair({kS, 0}, {-kS, 0}, 0.7), {}, opt);
  CHECK(rep.counts[kPlusPlus] == 0);
  CHECK(rep.counts[kMinusMinus] == 0);
  CHECK(rep.correlation() == -1.0);
  CHECK(rep.max_sigma_deviation() <= 3.0);
}

TEST_CASE("product-basis state at a right angle gives uniform outcomes") {
  EprRunOptions opt;
  opt.n_runs = 20000;
  opt.master_seed = 4;
  const auto rep = run_epr_experiment(rotate_pair({1, 0}, {0, 0}, std::numbers::pi / 2), {}, opt);
  for (double e : rep.expected) CHECK(e == doctest::Approx(0.25));
  CHECK(rep.max_sigma_deviation() <= 3.0);
  CHECK(rep.unresolved == 0);
}

TEST_CASE("schedules give indistinguishable joint statistics") {
  const auto state = rotate_pair({0.6, 0}, {0, 0.8}, 1.1);
  EprRunOptions opt;
  opt.n_runs = 20000;
  opt.master_seed = 10;
  EprSchedule sim, seq, ovl;
  seq.mode = EprSchedule::Mode::sequential;
  ovl.mode = EprSchedule::Mode::overlapping;
  ovl.start_delay_2 = 0.5;
  const auto a = run_epr_experiment(state, sim, opt);
  opt.master_seed = 11;
  const auto b = run_epr_experiment(state, seq, opt);
  opt.master_seed = 12;
  const auto c = run_epr_experiment(state, ovl, opt);
  CHECK(a.max_sigma_deviation() <= 3.0);
  CHECK(b.max_sigma_deviation() <= 3.0);
  CHECK(c.max_sigma_deviation() <= 3.0);
  CHECK(stats::chi2_homogeneity(a.counts, b.counts).p_value > 0.01);
  CHECK(stats::chi2_homogeneity(a.counts, c.counts).p_value > 0.01);
}

TEST_CASE("sequential mode starts apparatus 2 after apparatus 1 finishes") {
  EprRunOptions opt;
  opt.n_runs = 500;
  opt.master_seed = 1;
  opt.keep_runs = true;
  EprSchedule seq;
  seq.mode = EprSchedule::Mode::sequential;
  const auto rep = run_epr_experiment(rotate_pair({1, 0}, {0, 0}, 1.0), seq, opt);
  REQUIRE(rep.runs.size() == 500);
  for (const auto& r : rep.runs) {
    CHECK(r.outcome_alpha != 0);
    CHECK(r.exit_time_2 > r.exit_time_1);
  }
}

TEST_CASE("experiment is independent of the worker count") {
  EprRunOptions opt;
  opt.n_runs = 3000;
  opt.master_seed = 8;
  opt.keep_runs = true;
  opt.threads = 1;
  const auto state = rotate_pair({0.6, 0}, {0, 0.8}, 0.4);
  const auto a = run_epr_experiment(state, {}, opt);
  opt.threads = 4;
  const auto b = run_epr_experiment(state, {}, opt);
  CHECK(to_json(a).dump() == to_json(b).dump());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].exit_time_1 == b.runs[i].exit_time_1);
  }
}
