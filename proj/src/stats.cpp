#include "rlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "rlab/errors.hpp"

namespace rlab::stats {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "fit_line: size mismatch");
  LineFit fit;
  fit.points = x.size();
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

TailFit fit_survival_tail(std::span<const double> times, std::span<const double> survival,
                          double s_high, double s_low) {
  require(times.size() == survival.size(), "fit_survival_tail: size mismatch");
  std::vector<double> t, logs;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s = survival[i];
    if (s >= s_low && s <= s_high && s > 0.0) {
      t.push_back(times[i]);
      logs.push_back(std::log(s));
    }
  }
  TailFit out;
  out.s_high = s_high;
  out.s_low = s_low;
  if (t.size() < 3) return out;
  const LineFit line = fit_line(t, logs);
  out.rate = -line.slope;
  out.r2 = line.r2;
  out.points = line.points;
  return out;
}

SurvivalCurve empirical_survival(std::span<const double> exit_times, std::size_t n_total) {
  std::vector<double> sorted(exit_times.begin(), exit_times.end());
  std::sort(sorted.begin(), sorted.end());
  SurvivalCurve curve;
  curve.times = sorted;
  curve.survival.resize(sorted.size());
  const double n = static_cast<double>(n_total);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    curve.survival[i] = static_cast<double>(n_total - i - 1) / n;
  }
  return curve;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double binomial_sigma(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

double chi2_survival(double x, double dof) {
  if (dof <= 0.0) return 1.0;
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

Chi2Result chi2_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  require(a.size() == b.size(), "chi2_homogeneity: category mismatch");
  double na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    na += static_cast<double>(a[k]);
    nb += static_cast<double>(b[k]);
  }
  Chi2Result r;
  if (na == 0.0 || nb == 0.0) return r;
  const double n = na + nb;
  std::size_t used = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double col = static_cast<double>(a[k] + b[k]);
    if (col == 0.0) continue;
    ++used;
    const double ea = na * col / n, eb = nb * col / n;
    const double da = static_cast<double>(a[k]) - ea, db = static_cast<double>(b[k]) - eb;
    r.statistic += da * da / ea + db * db / eb;
  }
  r.dof = used > 1 ? static_cast<double>(used - 1) : 0.0;
  r.p_value = chi2_survival(r.statistic, r.dof);
  return r;
}

Chi2Result chi2_goodness(std::span<const std::uint64_t> observed,
                         std::span<const double> expected_probs) {
  require(observed.size() == expected_probs.size(), "chi2_goodness: category mismatch");
  double n = 0.0;
  for (auto c : observed) n += static_cast<double>(c);
  Chi2Result r;
  if (n == 0.0) return r;
  std::size_t used = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (expected_probs[k] <= 0.0) continue;
    ++used;
    const double e = n * expected_probs[k];
    const double d = static_cast<double>(observed[k]) - e;
    r.statistic += d * d / e;
  }
  r.dof = used > 1 ? static_cast<double>(used - 1) : 0.0;
  r.p_value = chi2_survival(r.statistic, r.dof);
  return r;
}

}  // namespace rlab::stats
