#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/factorization.hpp"

using namespace rlab::factor;
using cd = std::complex<double>;

namespace {

template <typename Scalar>
GriddedFunction<Scalar> random_grid(std::mt19937_64& rng, std::size_t n1, std::size_t n2,
                                    double lo = -1.0, double hi = 2.0) {
  std::normal_distribution<double> g;
  std::vector<Scalar> v(n1 * n2);
  for (auto& x : v) {
    if constexpr (std::is_same_v<Scalar, double>) x = g(rng);
    else x = Scalar(g(rng), g(rng));
  }
  return GriddedFunction<Scalar>({Axis::trapezoid(lo, hi, n1), Axis::trapezoid(0.0, 1.5, n2)}, v);
}

// Weighted inner product on axis `a`.
template <typename Scalar>
Scalar inner(const Axis& a, const std::vector<Scalar>& f, const std::vector<Scalar>& g) {
  Scalar s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += a.weights[i] * std::conj(f[i]) * g[i];
  return s;
}

}  // namespace

TEST_CASE("trapezoid axis") {
  const auto a = Axis::trapezoid(0.0, 2.0, 5);
  CHECK(a.nodes[4] == 2.0);
  CHECK(a.weights[0] == doctest::Approx(0.25));
  CHECK(a.weights[2] == doctest::Approx(0.5));
  double s = 0.0;
  for (double w : a.weights) s += w;
  CHECK(s == doctest::Approx(2.0));
  CHECK_THROWS_AS(Axis::trapezoid(1.0, 0.0, 4), rlab::ValidationError);
  CHECK_THROWS_AS(Axis::trapezoid(0.0, 1.0, 1), rlab::ValidationError);
}

TEST_CASE("kernel of a separable input is a scaled projector") {
  const auto ax0 = Axis::trapezoid(-2.0, 2.0, 21), ax1 = Axis::trapezoid(0.0, 3.0, 15);
  auto f = [](double x) { return std::exp(-x * x); };
  auto g = [](double y) { return 1.0 + y; };
  const auto psi = RealGrid::sample2(ax0, ax1, [&](double x, double y) { return f(x) * g(y); });
  double nf = 0.0, ng = 0.0;
  for (std::size_t i = 0; i < ax0.size(); ++i) nf += ax0.weights[i] * f(ax0.nodes[i]) * f(ax0.nodes[i]);
  for (std::size_t j = 0; j < ax1.size(); ++j) ng += ax1.weights[j] * g(ax1.nodes[j]) * g(ax1.nodes[j]);
  const auto k = build_kernel(psi);
  for (std::size_t i = 0; i < ax0.size(); ++i) {
    for (std::size_t j = 0; j < ax0.size(); ++j) {
      CHECK(k.values(i, j) == doctest::Approx(f(ax0.nodes[i]) * f(ax0.nodes[j]) * ng).epsilon(1e-12));
    }
  }
  const auto ev = k.eigenvalues();
  CHECK(ev[0] == doctest::Approx(nf * ng).epsilon(1e-12));
  CHECK(std::abs(ev[1]) < 1e-12 * ev[0]);
}

TEST_CASE("kernel trace equals the norm and the spectrum is nonnegative") {
  std::mt19937_64 rng(8);
  auto psi = random_grid<double>(rng, 8, 8);
  const auto k = build_kernel(psi);
  CHECK(k.trace() == doctest::Approx(psi.norm2()).epsilon(1e-12));
  for (double e : k.eigenvalues()) CHECK(e >= -1e-12);
  auto c = random_grid<cd>(rng, 9, 7);
  CHECK(build_kernel(c).trace() == doctest::Approx(c.norm2()).epsilon(1e-12));
}

TEST_CASE("two-term analytic decomposition") {
  // u1, u2 and v1, v2 orthonormal under the quadrature.
  const auto ax = Axis::trapezoid(0.0, 1.0, 3);  // weights 1/4, 1/2, 1/4
  const std::vector<double> u1{2.0, 0.0, 0.0}, u2{0.0, std::sqrt(2.0), 0.0};
  const std::vector<double> v1{0.0, 0.0, 2.0}, v2{0.0, std::sqrt(2.0), 0.0};
  std::vector<double> vals(9);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      vals[i * 3 + j] = (u1[i] * v1[j] + 2.0 * u2[i] * v2[j]) / std::sqrt(5.0);
  const RealGrid psi({ax, ax}, vals);
  const auto r = factorize2(psi, 2);
  CHECK(r.eigenvalues[0] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(r.eigenvalues[1] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(r.residuals[0] == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(factorize2(psi, 1).residual_J == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(std::abs(r.residual_J) < 1e-14);
  // Leading factor is u2 with the positive sign convention.
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.factors[0].phi1[i] == doctest::Approx(u2[i]));
}

TEST_CASE("separable input gives a vanishing residual") {
  const auto psi = ComplexGrid::sample2(
      Axis::trapezoid(-3.0, 3.0, 31), Axis::trapezoid(-1.0, 1.0, 19), [](double x, double y) {
        return std::exp(cd(-x * x, 0.7 * x)) * cd(1.0 + y, y * y);
      });
  const auto r = factorize2(psi, 1);
  CHECK(r.residual_J < 1e-12);
  CHECK(r.residuals[0] < 1e-12);
}

TEST_CASE("factors match a dense SVD of the weighted matrix") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 4; ++trial) {
    const auto psi = random_grid<cd>(rng, 16, 16);
    Eigen::MatrixXcd b(16, 16);
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j)
        b(i, j) = psi(i, j) * std::sqrt(psi.axis(0).weights[i] * psi.axis(1).weights[j]);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto r = factorize2(psi, 16);
    for (int k = 0; k < 16; ++k) {
      const double sv = svd.singularValues()(k);
      CHECK(std::abs(r.eigenvalues[k] - sv * sv) < 1e-10);
      const auto& f = r.factors[k];
      // Phase-free comparison of the rank-one term.
      double err = 0.0;
      for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
          const cd oracle = svd.matrixU()(i, k) * sv * std::conj(svd.matrixV()(j, k)) /
                            std::sqrt(psi.axis(0).weights[i] * psi.axis(1).weights[j]);
          err = std::max(err, std::abs(f.phi1[i] * f.phi2[j] - oracle));
        }
      CHECK(err < 1e-10);
    }
    CHECK(std::abs(r.residual_J) < 1e-10);
  }
}

TEST_CASE("factor bookkeeping: orthonormality, mu = nu, lambda = 2 nu") {
  std::mt19937_64 rng(3);
  const auto psi = random_grid<cd>(rng, 12, 10);
  const auto r = factorize2(psi, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(r.mu[k] == doctest::Approx(r.eigenvalues[k]).epsilon(1e-10));
    CHECK(r.lagrange[k] == doctest::Approx(2.0 * r.eigenvalues[k]).epsilon(1e-10));
    for (std::size_t l = 0; l < 5; ++l) {
      const cd ip = inner(psi.axis(0), r.factors[k].phi1, r.factors[l].phi1);
      CHECK(std::abs(ip - (k == l ? 1.0 : 0.0)) < 1e-12);
    }
    // First significant entry of phi1 is real and positive.
    const auto& phi = r.factors[k].phi1;
    double biggest = 0.0;
    for (const auto& v : phi) biggest = std::max(biggest, std::abs(v));
    for (const auto& v : phi) {
      if (std::abs(v) > 1e-8 * biggest) {
        CHECK(v.real() > 0.0);
        CHECK(std::abs(v.imag()) < 1e-14 * std::abs(v));
        break;
      }
    }
  }
}

TEST_CASE("residual decreases with rank and vanishes at full rank") {
  std::mt19937_64 rng(4);
  const auto psi = random_grid<double>(rng, 9, 6);
  double prev = psi.norm2();
  for (std::size_t k = 1; k <= 6; ++k) {
    const double j = factorize2(psi, k).residual_J;
    CHECK(j <= prev + 1e-14);
    prev = j;
  }
  CHECK(std::abs(prev) <= 1e-10);
  CHECK_THROWS_AS(factorize2(psi, 7), rlab::ValidationError);
  CHECK_THROWS_AS(factorize2(psi, 0), rlab::ValidationError);
}

TEST_CASE("exchanging the variables keeps the spectrum") {
  std::mt19937_64 rng(5);
  const auto psi = random_grid<cd>(rng, 11, 7);
  const auto a = factorize2(psi, 7);
  const auto b = factorize2(psi.transposed(), 7);
  for (std::size_t k = 0; k < 7; ++k) {
    CHECK(std::abs(a.eigenvalues[k] - b.eigenvalues[k]) < 1e-10);
  }
}

TEST_CASE("real input through the complex path") {
  std::mt19937_64 rng(6);
  const auto psi = random_grid<double>(rng, 10, 8);
  const auto r = factorize2(psi, 4);
  const auto c = factorize2(to_complex(psi), 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(c.eigenvalues[k] == doctest::Approx(r.eigenvalues[k]).epsilon(1e-12));
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(std::abs(c.factors[k].phi1[i] - r.factors[k].phi1[i]) < 1e-10);
    }
  }
}

TEST_CASE("degenerate spectrum is flagged and canonicalized") {
  // psi = (u1 v1 + u2 v2) / sqrt(2): a doubly degenerate leading eigenvalue.
  const auto ax = Axis::trapezoid(0.0, 1.0, 3);
  std::vector<double> vals(9, 0.0);
  vals[0 * 3 + 2] = 2.0 * 2.0 / std::sqrt(2.0);
  vals[1 * 3 + 1] = 2.0 / std::sqrt(2.0);
  const RealGrid psi({ax, ax}, vals);
  const auto r = factorize2(psi, 1);
  CHECK(r.degenerate);
  CHECK(r.leading_multiplicity == 2);
  // Canonical basis: projection of e_0 comes first.
  CHECK(std::abs(r.factors[0].phi1[0]) > 0.0);
  CHECK(std::abs(r.factors[0].phi1[1]) < 1e-12);
  CHECK(r.factors[0].phi1[0] > 0.0);
}

TEST_CASE("three-variable stepwise factorization") {
  const Axis a0 = Axis::trapezoid(-1.0, 1.0, 6), a1 = Axis::trapezoid(0.0, 2.0, 6),
             a2 = Axis::trapezoid(-2.0, 0.5, 6);
  const auto product = RealGrid::sample3(a0, a1, a2, [](double x, double y, double z) {
    return std::cos(x) * (1.0 + y) * std::exp(z);
  });
  for (std::size_t outer = 0; outer < 3; ++outer) {
    const auto r = factorize3_stepwise(product, outer);
    CHECK(r.residual < 1e-10);
  }

  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::vector<double> v(216);
  for (auto& x : v) x = g(rng);
  const RealGrid generic({a0, a1, a2}, v);
  const auto cmp = factorize3_all_orders(generic);
  double best = cmp.runs[cmp.best_outer_axis].residual;
  for (const auto& r : cmp.runs) {
    CHECK(r.residual >= best);
    CHECK(r.residual <= r.norm2 + 1e-12);
  }
  CHECK(cmp.spread > 1e-6);
  CHECK(cmp.runs[0].selected == std::array<std::size_t, 2>{1, 2});
  CHECK(cmp.runs[2].selected == std::array<std::size_t, 2>{0, 1});
  CHECK_THROWS_AS(factorize3_stepwise(generic, 3), rlab::ValidationError);
}

TEST_CASE("grid shape validation") {
  const auto ax = Axis::trapezoid(0.0, 1.0, 3);
  CHECK_THROWS_AS(RealGrid({ax, ax}, std::vector<double>(8)), rlab::ValidationError);
  CHECK_THROWS_AS(RealGrid({ax}, std::vector<double>(3)), rlab::ValidationError);
  CHECK_THROWS_AS(RealGrid({ax, ax}, std::vector<double>(9, NAN)), rlab::ValidationError);
}
