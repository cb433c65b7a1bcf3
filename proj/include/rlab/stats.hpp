#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rlab::stats {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope * x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Exponential tail of a survival curve: rate = -d log S / dt.
struct TailFit {
  double rate = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  double s_high = 0.0;
  double s_low = 0.0;
};

/// Fits log S(t) over the points where s_low <= S <= s_high.
/// Returns points == 0 if fewer than three points fall in the window.
TailFit fit_survival_tail(std::span<const double> times, std::span<const double> survival,
                          double s_high, double s_low);

/// Empirical survival of `n_total` items of which `exit_times` resolved
/// (unresolved items count as surviving forever). Returns (t, S(t)) at
/// each resolved exit time, sorted.
struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> survival;
};
SurvivalCurve empirical_survival(std::span<const double> exit_times, std::size_t n_total);

/// Linear-interpolated quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Binomial standard error of a frequency estimate.
double binomial_sigma(double p, std::size_t n);

/// Upper tail P(X >= x) of a chi-square variable with `dof` degrees of freedom.
double chi2_survival(double x, double dof);

/// Pearson homogeneity test of two count vectors over the same categories.
/// Categories empty in both samples are dropped from the degrees of freedom.
struct Chi2Result {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};
Chi2Result chi2_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Pearson goodness-of-fit of observed counts against expected probabilities.
/// Categories with zero expected probability are excluded (and must be empty
/// for the fit to make sense; callers check that separately).
Chi2Result chi2_goodness(std::span<const std::uint64_t> observed,
                         std::span<const double> expected_probs);

}  // namespace rlab::stats
