#include <doctest.h>

#include <cmath>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/stats.hpp"

using namespace rlab::stats;

TEST_CASE("line fit recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 - 0.75 * v);
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(-0.75));
  CHECK(f.intercept == doctest::Approx(2.5));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("survival tail of an exact exponential") {
  std::vector<double> t, s;
  for (int i = 0; i < 500; ++i) {
    t.push_back(0.02 * i);
    s.push_back(std::exp(-1.7 * t.back()));
  }
  const auto f = fit_survival_tail(t, s, 0.1, 0.01);
  CHECK(f.rate == doctest::Approx(1.7).epsilon(1e-10));
  CHECK(f.r2 > 0.999999);
  CHECK(f.points > 3);
}

TEST_CASE("empirical survival counts unresolved items as survivors") {
  const std::vector<double> exits{3.0, 1.0, 2.0};
  const auto c = empirical_survival(exits, 4);
  REQUIRE(c.times.size() == 3);
  CHECK(c.times[0] == 1.0);
  CHECK(c.survival[0] == doctest::Approx(0.75));
  CHECK(c.survival[2] == doctest::Approx(0.25));
}

TEST_CASE("quantiles and binomial sigma") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(3.0));
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(2.0));
  CHECK(binomial_sigma(0.3, 100000) == doctest::Approx(std::sqrt(0.21 / 1e5)));
}

TEST_CASE("chi-square tails") {
  // Closed forms: dof 2 -> exp(-x/2); dof 1 -> erfc(sqrt(x/2)).
  for (double x : {0.1, 1.0, 3.0, 10.0}) {
    CHECK(chi2_survival(x, 2.0) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
    CHECK(chi2_survival(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-12));
  }
}

TEST_CASE("homogeneity and goodness of fit") {
  const std::vector<std::uint64_t> a{100, 200, 300, 0}, b{100, 200, 300, 0};
  const auto h = chi2_homogeneity(a, b);
  CHECK(h.statistic == doctest::Approx(0.0));
  CHECK(h.dof == doctest::Approx(2.0));
  CHECK(h.p_value == doctest::Approx(1.0));

  // 2x2 table with a hand-computed statistic.
  const std::vector<std::uint64_t> c{30, 70}, d{50, 50};
  const auto t = chi2_homogeneity(c, d);
  // Expected counts 40/60 in each row; sum of (o-e)^2/e.
  const double stat = 2 * (100.0 / 40 + 100.0 / 60);
  CHECK(t.statistic == doctest::Approx(stat));
  CHECK(t.p_value == doctest::Approx(std::erfc(std::sqrt(stat / 2))));

  const std::vector<std::uint64_t> obs{25, 25, 50};
  const std::vector<double> probs{0.25, 0.25, 0.5};
  const auto g = chi2_goodness(obs, probs);
  CHECK(g.statistic == doctest::Approx(0.0));
  CHECK(g.dof == doctest::Approx(2.0));
}
