#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace rlab::factor {

/// Quadrature nodes and weights for one coordinate.
struct Axis {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// n trapezoidal nodes on [lo, hi].
  static Axis trapezoid(double lo, double hi, std::size_t n);
  std::size_t size() const noexcept { return nodes.size(); }
};

/// A wave function sampled on a tensor grid (2 or 3 axes), row-major.
template <typename Scalar>
class GriddedFunction {
 public:
  GriddedFunction(std::vector<Axis> axes, std::vector<Scalar> values);

  template <typename F>
  static GriddedFunction sample2(Axis a0, Axis a1, F&& f) {
    std::vector<Scalar> v;
    v.reserve(a0.size() * a1.size());
    for (double x0 : a0.nodes)
      for (double x1 : a1.nodes) v.push_back(static_cast<Scalar>(f(x0, x1)));
    return GriddedFunction({std::move(a0), std::move(a1)}, std::move(v));
  }

  template <typename F>
  static GriddedFunction sample3(Axis a0, Axis a1, Axis a2, F&& f) {
    std::vector<Scalar> v;
    v.reserve(a0.size() * a1.size() * a2.size());
    for (double x0 : a0.nodes)
      for (double x1 : a1.nodes)
        for (double x2 : a2.nodes) v.push_back(static_cast<Scalar>(f(x0, x1, x2)));
    return GriddedFunction({std::move(a0), std::move(a1), std::move(a2)}, std::move(v));
  }

  std::size_t ndims() const noexcept { return axes_.size(); }
  const Axis& axis(std::size_t k) const { return axes_.at(k); }
  std::size_t extent(std::size_t k) const { return axes_.at(k).size(); }
  std::span<const Scalar> values() const noexcept { return values_; }

  const Scalar& operator()(std::size_t i, std::size_t j) const {
    return values_[i * extent(1) + j];
  }
  const Scalar& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * extent(1) + j) * extent(2) + k];
  }

  /// Quadrature norm squared.
  double norm2() const;
  /// psi with the two axes exchanged (2D only).
  GriddedFunction transposed() const;

 private:
  std::vector<Axis> axes_;
  std::vector<Scalar> values_;
};

using RealGrid = GriddedFunction<double>;
using ComplexGrid = GriddedFunction<std::complex<double>>;

ComplexGrid to_complex(const RealGrid& psi);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// K(x1, x1') = sum_x2 w2 psi(x1, x2) conj(psi(x1', x2)), acting on functions
/// of x1 through the axis-1 quadrature weights.
template <typename Scalar>
struct Kernel {
  Matrix<Scalar> values;
  std::vector<double> weights;

  /// sum_i w_i K(i, i); equals the norm of psi.
  double trace() const;
  /// Spectrum of the weighted operator, decreasing.
  std::vector<double> eigenvalues() const;
};

template <typename Scalar>
Kernel<Scalar> build_kernel(const GriddedFunction<Scalar>& psi);

/// One separable term phi1(x1) phi2(x2).
template <typename Scalar>
struct Factor {
  std::vector<Scalar> phi1;  // unit quadrature norm
  std::vector<Scalar> phi2;  // norm^2 equals the eigenvalue
};

template <typename Scalar>
struct FactorizationResult {
  std::vector<Factor<Scalar>> factors;
  std::vector<double> eigenvalues;  // decreasing
  /// residuals[k] = norm2 - sum of the first k + 1 eigenvalues.
  std::vector<double> residuals;
  /// |psi - sum_i phi1_i phi2_i|^2 by quadrature.
  double residual_J = 0.0;
  double norm2 = 0.0;
  /// |phi2_i|^2 and the Lagrange multiplier recomputed from each factor;
  /// they should equal nu_i and 2 nu_i.
  std::vector<double> mu;
  std::vector<double> lagrange;
  /// Number of eigenvalues within 1e-10 nu_1 of the leading one.
  std::size_t leading_multiplicity = 1;
  /// True when two of the extracted eigenvalues (or the last extracted and
  /// the next one) are closer than 1e-10 nu_1, so factors are not unique.
  bool degenerate = false;
};

/// Best rank-`rank` separable approximation. phi1 are eigenfunctions of K
/// in decreasing eigenvalue order; phi2_i(x2) = sum_x1 w1 conj(phi1_i) psi.
/// Each phi1 is phased so that its first significant entry is real positive;
/// inside degenerate clusters the basis is fixed by Gram-Schmidt over the
/// projected coordinate vectors in index order.
template <typename Scalar>
FactorizationResult<Scalar> factorize2(const GriddedFunction<Scalar>& psi, std::size_t rank);

/// Leading product chi1(x_s1) chi2(x_s2) chi3(x_outer) from the stepwise
/// procedure: rank-1 split of every outer slice, then rank-1 split of each
/// slice factor against the outer coordinate.
template <typename Scalar>
struct Stepwise3Result {
  std::size_t outer_axis = 2;
  std::array<std::size_t, 2> selected{0, 1};
  std::vector<Scalar> chi1, chi2, chi3;  // on selected[0], selected[1], outer
  double residual = 0.0;
  double norm2 = 0.0;
};

template <typename Scalar>
Stepwise3Result<Scalar> factorize3_stepwise(const GriddedFunction<Scalar>& psi,
                                            std::size_t outer_axis);

template <typename Scalar>
struct Stepwise3Comparison {
  std::array<Stepwise3Result<Scalar>, 3> runs;
  std::size_t best_outer_axis = 0;
  double spread = 0.0;  // max residual - min residual
};

template <typename Scalar>
Stepwise3Comparison<Scalar> factorize3_all_orders(const GriddedFunction<Scalar>& psi);

template <typename Scalar>
nlohmann::json to_json(const FactorizationResult<Scalar>& result);
template <typename Scalar>
nlohmann::json to_json(const Stepwise3Comparison<Scalar>& result);

}  // namespace rlab::factor
