#include "rlab/factorization.hpp"

#include <algorithm>
#include <cmath>

#include "rlab/errors.hpp"

namespace rlab::factor {

namespace {

double abs2(double x) { return x * x; }
double abs2(const std::complex<double>& z) { return std::norm(z); }
double conj(double x) { return x; }
std::complex<double> conj(const std::complex<double>& z) { return std::conj(z); }

template <typename Scalar>
Scalar unit_phase(const Scalar& v) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return v < 0.0 ? -1.0 : 1.0;
  } else {
    const double m = std::abs(v);
    return m > 0.0 ? v / m : Scalar(1.0);
  }
}

template <typename Scalar>
Matrix<Scalar> as_matrix(const GriddedFunction<Scalar>& psi) {
  const auto n1 = static_cast<Eigen::Index>(psi.extent(0));
  const auto n2 = static_cast<Eigen::Index>(psi.extent(1));
  Matrix<Scalar> m(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j) m(i, j) = psi(i, j);
  return m;
}

Eigen::VectorXd weight_vector(const Axis& axis) {
  return Eigen::Map<const Eigen::VectorXd>(axis.weights.data(),
                                           static_cast<Eigen::Index>(axis.size()));
}

/// Canonical basis of a degenerate eigenspace: Gram-Schmidt over the
/// projections of e_0, e_1, ... onto the span of `cluster`.
template <typename Scalar>
Matrix<Scalar> canonical_basis(const Matrix<Scalar>& cluster) {
  const Eigen::Index n = cluster.rows(), d = cluster.cols();
  const Matrix<Scalar> projector = cluster * cluster.adjoint();
  Matrix<Scalar> basis(n, d);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < n && found < d; ++i) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = projector.col(i);
    for (Eigen::Index k = 0; k < found; ++k) v -= basis.col(k) * (basis.col(k).adjoint() * v)(0);
    const double norm = v.norm();
    if (norm > 1e-8) basis.col(found++) = v / norm;
  }
  if (found < d) return cluster;
  return basis;
}

template <typename Scalar>
double direct_residual(const GriddedFunction<Scalar>& psi,
                       const std::vector<Factor<Scalar>>& factors) {
  const Axis& a0 = psi.axis(0);
  const Axis& a1 = psi.axis(1);
  double r = 0.0;
  for (std::size_t i = 0; i < a0.size(); ++i) {
    for (std::size_t j = 0; j < a1.size(); ++j) {
      Scalar approx{};
      for (const auto& f : factors) approx += f.phi1[i] * f.phi2[j];
      r += a0.weights[i] * a1.weights[j] * abs2(psi(i, j) - approx);
    }
  }
  return r;
}

}  // namespace

Axis Axis::trapezoid(double lo, double hi, std::size_t n) {
  require(n >= 2, "an axis needs at least two nodes");
  require(hi > lo && std::isfinite(lo) && std::isfinite(hi), "axis range must be finite and increasing");
  Axis a;
  a.nodes.resize(n);
  a.weights.resize(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    a.nodes[i] = lo + h * static_cast<double>(i);
    a.weights[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
  }
  return a;
}

template <typename Scalar>
GriddedFunction<Scalar>::GriddedFunction(std::vector<Axis> axes, std::vector<Scalar> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  require(axes_.size() == 2 || axes_.size() == 3, "gridded functions have 2 or 3 axes");
  std::size_t total = 1;
  for (const auto& a : axes_) {
    require(a.size() >= 2, "every axis needs at least two nodes");
    require(a.weights.size() == a.size(), "axis weights must match the node count");
    for (double w : a.weights) require(w > 0.0 && std::isfinite(w), "quadrature weights must be positive");
    total *= a.size();
  }
  require(values_.size() == total, "value count does not match the grid shape");
  for (const auto& v : values_) require(std::isfinite(abs2(v)), "grid values must be finite");
}

template <typename Scalar>
double GriddedFunction<Scalar>::norm2() const {
  double s = 0.0;
  if (ndims() == 2) {
    for (std::size_t i = 0; i < extent(0); ++i)
      for (std::size_t j = 0; j < extent(1); ++j)
        s += axes_[0].weights[i] * axes_[1].weights[j] * abs2((*this)(i, j));
  } else {
    for (std::size_t i = 0; i < extent(0); ++i)
      for (std::size_t j = 0; j < extent(1); ++j)
        for (std::size_t k = 0; k < extent(2); ++k)
          s += axes_[0].weights[i] * axes_[1].weights[j] * axes_[2].weights[k] *
               abs2((*this)(i, j, k));
  }
  return s;
}

template <typename Scalar>
GriddedFunction<Scalar> GriddedFunction<Scalar>::transposed() const {
  require(ndims() == 2, "transposed() needs a two-axis grid");
  std::vector<Scalar> v;
  v.reserve(values_.size());
  for (std::size_t j = 0; j < extent(1); ++j)
    for (std::size_t i = 0; i < extent(0); ++i) v.push_back((*this)(i, j));
  return GriddedFunction({axes_[1], axes_[0]}, std::move(v));
}

ComplexGrid to_complex(const RealGrid& psi) {
  std::vector<std::complex<double>> v(psi.values().begin(), psi.values().end());
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < psi.ndims(); ++k) axes.push_back(psi.axis(k));
  return ComplexGrid(std::move(axes), std::move(v));
}

template <typename Scalar>
double Kernel<Scalar>::trace() const {
  double t = 0.0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    t += weights[static_cast<std::size_t>(i)] * std::real(values(i, i));
  }
  return t;
}

template <typename Scalar>
std::vector<double> Kernel<Scalar>::eigenvalues() const {
  Eigen::VectorXd sw(values.rows());
  for (Eigen::Index i = 0; i < sw.size(); ++i) sw(i) = std::sqrt(weights[static_cast<std::size_t>(i)]);
  const Matrix<Scalar> g = sw.asDiagonal() * values * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(g, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::reverse(ev.begin(), ev.end());
  return ev;
}

template <typename Scalar>
Kernel<Scalar> build_kernel(const GriddedFunction<Scalar>& psi) {
  require(psi.ndims() == 2, "build_kernel needs a two-axis grid");
  const Matrix<Scalar> m = as_matrix(psi);
  const Eigen::VectorXd w2 = weight_vector(psi.axis(1));
  Kernel<Scalar> k;
  k.values = m * w2.asDiagonal() * m.adjoint();
  k.weights = psi.axis(0).weights;
  return k;
}

template <typename Scalar>
FactorizationResult<Scalar> factorize2(const GriddedFunction<Scalar>& psi, std::size_t rank) {
  require(psi.ndims() == 2, "factorize2 needs a two-axis grid");
  const std::size_t n1 = psi.extent(0), n2 = psi.extent(1);
  require(rank >= 1 && rank <= std::min(n1, n2), "rank must lie in [1, min(node counts)]");

  const Matrix<Scalar> m = as_matrix(psi);
  const Eigen::VectorXd w1 = weight_vector(psi.axis(0));
  const Eigen::VectorXd w2 = weight_vector(psi.axis(1));
  const Eigen::VectorXd sw1 = w1.cwiseSqrt();

  // Symmetrized kernel W1^1/2 K W1^1/2 = B B^H with B = W1^1/2 psi W2^1/2.
  const Matrix<Scalar> b = sw1.asDiagonal() * m * w2.cwiseSqrt().asDiagonal();
  const Matrix<Scalar> g = b * b.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(g);
  require(es.info() == Eigen::Success, "kernel eigendecomposition failed");

  const auto n = static_cast<Eigen::Index>(n1);
  std::vector<double> nu(n1);
  Matrix<Scalar> vecs(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    nu[static_cast<std::size_t>(k)] = std::max(0.0, es.eigenvalues()(n - 1 - k));
    vecs.col(k) = es.eigenvectors().col(n - 1 - k);
  }

  FactorizationResult<Scalar> out;
  out.norm2 = psi.norm2();
  const double tol = 1e-10 * std::max(nu[0], 1e-300);
  while (out.leading_multiplicity < n1 && nu[0] - nu[out.leading_multiplicity] < tol) {
    ++out.leading_multiplicity;
  }
  const std::size_t check_upto = std::min(rank + 1, n1);
  for (std::size_t k = 1; k < check_upto; ++k) {
    if (nu[k - 1] - nu[k] < tol && nu[k - 1] > tol) out.degenerate = true;
  }

  // Fix a canonical basis inside every cluster of (near) equal eigenvalues.
  for (std::size_t start = 0; start < n1;) {
    std::size_t end = start + 1;
    while (end < n1 && nu[start] - nu[end] < tol) ++end;
    if (end - start > 1 && nu[start] > tol) {
      const auto s = static_cast<Eigen::Index>(start), d = static_cast<Eigen::Index>(end - start);
      vecs.middleCols(s, d) = canonical_basis<Scalar>(vecs.middleCols(s, d));
    }
    start = end;
  }

  double captured = 0.0;
  for (std::size_t k = 0; k < rank; ++k) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = vecs.col(static_cast<Eigen::Index>(k));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phi1 = v.cwiseQuotient(sw1.template cast<Scalar>());

    double biggest = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) biggest = std::max(biggest, std::abs(phi1(i)));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(phi1(i)) > 1e-8 * biggest) {
        phi1 *= conj(unit_phase(phi1(i)));
        break;
      }
    }

    // phi2(x2) = sum_x1 w1 conj(phi1) psi(x1, x2)
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weighted =
        w1.template cast<Scalar>().cwiseProduct(phi1.conjugate());
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phi2 = m.transpose() * weighted;

    Factor<Scalar> f;
    f.phi1.assign(phi1.data(), phi1.data() + phi1.size());
    f.phi2.assign(phi2.data(), phi2.data() + phi2.size());

    double mu = 0.0;
    for (std::size_t j = 0; j < n2; ++j) mu += w2(static_cast<Eigen::Index>(j)) * abs2(f.phi2[j]);
    // (lambda - mu) phi1 = sum_x2 w2 psi conj(phi2); project on phi1.
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phi2c =
        w2.template cast<Scalar>().cwiseProduct(phi2.conjugate());
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> k_phi1 = m * phi2c;
    const Scalar overlap = (weighted.transpose() * k_phi1)(0);
    out.mu.push_back(mu);
    out.lagrange.push_back(mu + std::real(overlap));

    captured += nu[k];
    out.eigenvalues.push_back(nu[k]);
    out.residuals.push_back(out.norm2 - captured);
    out.factors.push_back(std::move(f));
  }
  out.residual_J = direct_residual(psi, out.factors);
  return out;
}

template <typename Scalar>
Stepwise3Result<Scalar> factorize3_stepwise(const GriddedFunction<Scalar>& psi,
                                            std::size_t outer_axis) {
  require(psi.ndims() == 3, "factorize3_stepwise needs a three-axis grid");
  require(outer_axis < 3, "outer_axis must be 0, 1 or 2");
  Stepwise3Result<Scalar> out;
  out.outer_axis = outer_axis;
  std::size_t s = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (k != outer_axis) out.selected[s++] = k;
  }
  const Axis& ax1 = psi.axis(out.selected[0]);
  const Axis& ax2 = psi.axis(out.selected[1]);
  const Axis& axo = psi.axis(outer_axis);
  const std::size_t n1 = ax1.size(), n2 = ax2.size(), no = axo.size();

  auto value = [&](std::size_t i1, std::size_t i2, std::size_t io) -> const Scalar& {
    std::array<std::size_t, 3> idx{};
    idx[out.selected[0]] = i1;
    idx[out.selected[1]] = i2;
    idx[outer_axis] = io;
    return psi(idx[0], idx[1], idx[2]);
  };

  // Phase reference: leading x_s1 factor of psi unfolded as x_s1 | (x_s2, x_o).
  std::vector<Scalar> reference;
  {
    Axis merged;
    for (std::size_t i2 = 0; i2 < n2; ++i2)
      for (std::size_t io = 0; io < no; ++io) {
        merged.nodes.push_back(static_cast<double>(merged.nodes.size()));
        merged.weights.push_back(ax2.weights[i2] * axo.weights[io]);
      }
    std::vector<Scalar> v;
    v.reserve(n1 * n2 * no);
    for (std::size_t i1 = 0; i1 < n1; ++i1)
      for (std::size_t i2 = 0; i2 < n2; ++i2)
        for (std::size_t io = 0; io < no; ++io) v.push_back(value(i1, i2, io));
    reference = factorize2(GriddedFunction<Scalar>({ax1, merged}, std::move(v)), 1).factors[0].phi1;
  }

  // Slice-wise rank-1 split: phi1(x_s1; x_o) phi2(x_s2; x_o).
  std::vector<Scalar> phi1(n1 * no), phi2(n2 * no);  // row-major (x, x_o)
  for (std::size_t io = 0; io < no; ++io) {
    std::vector<Scalar> v;
    v.reserve(n1 * n2);
    for (std::size_t i1 = 0; i1 < n1; ++i1)
      for (std::size_t i2 = 0; i2 < n2; ++i2) v.push_back(value(i1, i2, io));
    const GriddedFunction<Scalar> slice({ax1, ax2}, std::move(v));
    auto f = factorize2(slice, 1).factors[0];
    Scalar overlap{};
    for (std::size_t i1 = 0; i1 < n1; ++i1) overlap += ax1.weights[i1] * conj(reference[i1]) * f.phi1[i1];
    const Scalar phase = std::abs(overlap) > 0.0 ? unit_phase(overlap) : Scalar(1.0);
    for (std::size_t i1 = 0; i1 < n1; ++i1) phi1[i1 * no + io] = f.phi1[i1] * conj(phase);
    for (std::size_t i2 = 0; i2 < n2; ++i2) phi2[i2 * no + io] = f.phi2[i2] * phase;
  }

  const auto f1 = factorize2(GriddedFunction<Scalar>({ax1, axo}, std::move(phi1)), 1).factors[0];
  const auto f2 = factorize2(GriddedFunction<Scalar>({ax2, axo}, std::move(phi2)), 1).factors[0];
  out.chi1 = f1.phi1;
  out.chi2 = f2.phi1;
  out.chi3.resize(no);
  for (std::size_t io = 0; io < no; ++io) out.chi3[io] = f1.phi2[io] * f2.phi2[io];

  out.norm2 = psi.norm2();
  double r = 0.0;
  for (std::size_t i1 = 0; i1 < n1; ++i1)
    for (std::size_t i2 = 0; i2 < n2; ++i2)
      for (std::size_t io = 0; io < no; ++io) {
        const Scalar approx = out.chi1[i1] * out.chi2[i2] * out.chi3[io];
        r += ax1.weights[i1] * ax2.weights[i2] * axo.weights[io] * abs2(value(i1, i2, io) - approx);
      }
  out.residual = r;
  return out;
}

template <typename Scalar>
Stepwise3Comparison<Scalar> factorize3_all_orders(const GriddedFunction<Scalar>& psi) {
  Stepwise3Comparison<Scalar> c;
  for (std::size_t k = 0; k < 3; ++k) c.runs[k] = factorize3_stepwise(psi, k);
  double lo = c.runs[0].residual, hi = lo;
  for (std::size_t k = 1; k < 3; ++k) {
    if (c.runs[k].residual < lo) {
      lo = c.runs[k].residual;
      c.best_outer_axis = k;
    }
    hi = std::max(hi, c.runs[k].residual);
  }
  c.spread = hi - lo;
  return c;
}

template <typename Scalar>
nlohmann::json to_json(const FactorizationResult<Scalar>& r) {
  return {{"eigenvalues", r.eigenvalues},
          {"residuals", r.residuals},
          {"residual_J", r.residual_J},
          {"norm2", r.norm2},
          {"mu", r.mu},
          {"lagrange", r.lagrange},
          {"leading_multiplicity", r.leading_multiplicity},
          {"degenerate", r.degenerate}};
}

template <typename Scalar>
nlohmann::json to_json(const Stepwise3Comparison<Scalar>& c) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : c.runs) {
    runs.push_back({{"outer_axis", r.outer_axis},
                    {"selected_axes", r.selected},
                    {"residual", r.residual},
                    {"norm2", r.norm2}});
  }
  return {{"runs", runs}, {"best_outer_axis", c.best_outer_axis}, {"spread", c.spread}};
}

#define RLAB_INSTANTIATE(S)                                                               \
  template class GriddedFunction<S>;                                                      \
  template struct Kernel<S>;                                                              \
  template Kernel<S> build_kernel<S>(const GriddedFunction<S>&);                          \
  template FactorizationResult<S> factorize2<S>(const GriddedFunction<S>&, std::size_t);  \
  template Stepwise3Result<S> factorize3_stepwise<S>(const GriddedFunction<S>&, std::size_t); \
  template Stepwise3Comparison<S> factorize3_all_orders<S>(const GriddedFunction<S>&);    \
  template nlohmann::json to_json<S>(const FactorizationResult<S>&);                      \
  template nlohmann::json to_json<S>(const Stepwise3Comparison<S>&);

RLAB_INSTANTIATE(double)
RLAB_INSTANTIATE(std::complex<double>)

#undef RLAB_INSTANTIATE

}  // namespace rlab::factor
