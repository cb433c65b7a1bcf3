#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rlab {

/// Probabilities below this are treated as a lost channel.
inline constexpr double kDefaultAbsorptionThreshold = 1e-12;

/// A point on the probability simplex over measurement channels.
///
/// Channels whose probability reaches zero are marked dead and stay at
/// zero for the lifetime of the object. Every mutating operation leaves
/// the probabilities summing to one.
class ChannelDistribution {
 public:
  /// Accepts probabilities whose sum is within `sum_tolerance` of one and
  /// renormalizes them exactly. Exact zeros start out dead.
  explicit ChannelDistribution(std::vector<double> probs, double sum_tolerance = 1e-9);

  static ChannelDistribution uniform(std::size_t channels);
  static ChannelDistribution vertex(std::size_t channels, std::size_t winner);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t j) const { return probs_[j]; }
  std::span<const double> probs() const noexcept { return probs_; }
  bool is_dead(std::size_t j) const { return dead_[j] != 0; }
  std::size_t alive_count() const noexcept;

  /// Index of the channel holding all the mass, if any.
  std::optional<std::size_t> winner() const noexcept;

  /// Replaces the probabilities with `values`. Entries below `threshold`
  /// (or belonging to dead channels) become zero and are marked dead; the
  /// rest are renormalized proportionally.
  void update(std::span<const double> values,
              double threshold = kDefaultAbsorptionThreshold);

  /// Collapses onto channel `j`.
  void snap_to(std::size_t j);

 private:
  std::vector<double> probs_;
  std::vector<unsigned char> dead_;
};

/// Covariance rate of channel fluctuations in units of 1/tau_red:
/// diag(p) - p p^T.
using CovarianceSpec = Eigen::MatrixXd;

CovarianceSpec build_covariance(const ChannelDistribution& p);

/// Writes the drift-free increment
///   dp_j = sqrt(h) [ sqrt(p_j) eta_j - p_j sum_k sqrt(p_k) eta_k ]
/// whose covariance is exactly h (diag(p) - p p^T) and which sums to zero.
/// `probs`, `noise` and `out` must have equal length.
void wright_fisher_increment(std::span<const double> probs, double h,
                             std::span<const double> noise, std::span<double> out);

/// Keeps a step inside the simplex without biasing its mean. If p + delta
/// or p - delta leaves the simplex, let a and b be the largest fractions of
/// delta and -delta that stay inside; delta becomes a delta with
/// probability b / (a + b) and -b delta otherwise, so the expected step is
/// unchanged and an exiting step stops exactly on the boundary face.
/// `selector` is a standard normal deciding the branch. Returns false when
/// delta was left untouched.
bool fit_step_to_simplex(std::span<const double> probs, std::span<double> delta,
                         double selector);

/// One Euler-Maruyama step of the channel diffusion with time step
/// `dt_over_tau` measured in units of tau_red. Rejects non-finite noise.
///
/// With p.size() normals an overshooting channel is clamped to zero. With
/// one extra normal the step is first passed through fit_step_to_simplex,
/// which keeps every p_j an exact martingale up to absorption.
ChannelDistribution sample_step(const ChannelDistribution& p, double dt_over_tau,
                                std::span<const double> noise,
                                double threshold = kDefaultAbsorptionThreshold);

/// In-place variant of sample_step; `scratch` must have p.size() entries.
void sample_step_inplace(ChannelDistribution& p, double dt_over_tau,
                         std::span<const double> noise, std::span<double> scratch,
                         double threshold = kDefaultAbsorptionThreshold);

}  // namespace rlab
