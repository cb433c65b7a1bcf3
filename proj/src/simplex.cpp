#include "rlab/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rlab/errors.hpp"

namespace rlab {

ChannelDistribution::ChannelDistribution(std::vector<double> probs, double sum_tolerance)
    : probs_(std::move(probs)), dead_(probs_.size(), 0) {
  require(probs_.size() >= 2, "a channel distribution needs at least two channels");
  double sum = 0.0;
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    const double v = probs_[j];
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0 + sum_tolerance,
            "channel probability " + std::to_string(j) + " outside [0,1]");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= sum_tolerance,
          "channel probabilities sum to " + std::to_string(sum) + ", expected 1");
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    if (probs_[j] == 0.0) dead_[j] = 1;
    probs_[j] /= sum;
  }
}

ChannelDistribution ChannelDistribution::uniform(std::size_t channels) {
  require(channels >= 2, "a channel distribution needs at least two channels");
  return ChannelDistribution(std::vector<double>(channels, 1.0 / static_cast<double>(channels)));
}

ChannelDistribution ChannelDistribution::vertex(std::size_t channels, std::size_t winner) {
  require(winner < channels, "vertex index out of range");
  std::vector<double> p(channels, 0.0);
  p[winner] = 1.0;
  return ChannelDistribution(std::move(p));
}

std::size_t ChannelDistribution::alive_count() const noexcept {
  return static_cast<std::size_t>(std::count(dead_.begin(), dead_.end(), 0));
}

std::optional<std::size_t> ChannelDistribution::winner() const noexcept {
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    if (probs_[j] == 1.0) return j;
  }
  return std::nullopt;
}

void ChannelDistribution::update(std::span<const double> values, double threshold) {
  require(values.size() == probs_.size(), "update size mismatch");
  double sum = 0.0;
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    double v = values[j];
    if (dead_[j] || !(v >= threshold)) {
      dead_[j] = 1;
      v = 0.0;
    }
    probs_[j] = v;
    sum += v;
  }
  if (sum <= 0.0) {
    // Every channel undershot in the same step; keep the largest survivor.
    std::size_t best = 0;
    for (std::size_t j = 1; j < values.size(); ++j) {
      if (values[j] > values[best]) best = j;
    }
    snap_to(best);
    return;
  }
  for (double& v : probs_) v /= sum;
}

void ChannelDistribution::snap_to(std::size_t j) {
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    probs_[k] = (k == j) ? 1.0 : 0.0;
    dead_[k] = (k == j) ? 0 : 1;
  }
}

CovarianceSpec build_covariance(const ChannelDistribution& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  const Eigen::Map<const Eigen::VectorXd> v(p.probs().data(), n);
  CovarianceSpec a = -v * v.transpose();
  a.diagonal() += v;
  return a;
}

void wright_fisher_increment(std::span<const double> probs, double h,
                             std::span<const double> noise, std::span<double> out) {
  double common = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) common += std::sqrt(probs[k]) * noise[k];
  const double scale = std::sqrt(h);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    out[j] = scale * (std::sqrt(probs[j]) * noise[j] - probs[j] * common);
  }
}

namespace {

/// Largest a in (0, 1] with probs + a * sign * delta >= 0.
double inside_fraction(std::span<const double> probs, std::span<const double> delta,
                       double sign) {
  double a = 1.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double d = sign * delta[j];
    if (d < 0.0 && probs[j] + d < 0.0) a = std::min(a, probs[j] / -d);
  }
  return a;
}

}  // namespace

bool fit_step_to_simplex(std::span<const double> probs, std::span<double> delta,
                         double selector) {
  const double a = inside_fraction(probs, delta, 1.0);
  const double b = inside_fraction(probs, delta, -1.0);
  if (a == 1.0 && b == 1.0) return false;
  const double u = 0.5 * std::erfc(-selector / std::sqrt(2.0));
  const double scale = u * (a + b) < b ? a : -b;
  for (double& d : delta) d *= scale;
  return true;
}

void sample_step_inplace(ChannelDistribution& p, double dt_over_tau,
                         std::span<const double> noise, std::span<double> scratch,
                         double threshold) {
  require(dt_over_tau > 0.0 && std::isfinite(dt_over_tau), "dt_over_tau must be positive");
  require((noise.size() == p.size() || noise.size() == p.size() + 1) &&
              scratch.size() == p.size(),
          "noise needs one normal per channel, plus an optional selector");
  for (double eta : noise) require(std::isfinite(eta), "non-finite noise draw");
  if (p.winner()) return;

  const auto probs = p.probs();
  wright_fisher_increment(probs, dt_over_tau, noise.first(probs.size()), scratch);
  if (noise.size() > probs.size()) fit_step_to_simplex(probs, scratch, noise.back());
  for (std::size_t j = 0; j < probs.size(); ++j) scratch[j] += probs[j];
  p.update(scratch, threshold);
}

ChannelDistribution sample_step(const ChannelDistribution& p, double dt_over_tau,
                                std::span<const double> noise, double threshold) {
  ChannelDistribution next = p;
  std::vector<double> scratch(p.size());
  sample_step_inplace(next, dt_over_tau, noise, scratch, threshold);
  return next;
}

}  // namespace rlab
