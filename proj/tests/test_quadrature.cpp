#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"

#include "crossdefect/quadrature.hpp"

using namespace crossdefect;

TEST_CASE("gauss-legendre weights sum to one and are positive") {
  for (int n : {1, 2, 7, 32, 64, 128}) {
    const QuadratureRule r = gauss_legendre(n);
    REQUIRE(r.size() == n);
    CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (int i = 0; i < n; ++i) {
      CHECK(r.weights[i] > 0.0);
      CHECK(r.nodes[i] > 0.0);
      CHECK(r.nodes[i] < 1.0);
      if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
    }
  }
}

TEST_CASE("gauss-legendre is exact up to degree 2n-1") {
  const int n = 6;
  const QuadratureRule r = gauss_legendre(n);
  for (int p = 0; p <= 2 * n - 1; ++p) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
    CHECK(s == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], 2 * n);
  CHECK(std::abs(s - 1.0 / (2 * n + 1)) > 1e-10);
}

TEST_CASE("gauss-legendre integrates trigonometric polynomials on the period") {
  const QuadratureRule r = gauss_legendre(24);
  double c2 = 0.0, s1 = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    const double t = 2.0 * std::numbers::pi * r.nodes[i];
    c2 += r.weights[i] * std::cos(t) * std::cos(t);
    s1 += r.weights[i] * std::sin(t);
  }
  CHECK(c2 == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(std::abs(s1) < 1e-13);
}

TEST_CASE("adaptive quadrature resolves a sharp peak") {
  // int_0^1 d / (d^2 + x^2) dx = atan(1 / d)
  for (double d : {1e-1, 1e-3, 1e-5}) {
    const auto res = integrate_adaptive(
        [d](double x) { return Matrix::Constant(1, 1, d / (d * d + x * x)); }, 0.0, 1.0);
    CHECK(res.converged);
    CHECK(res.value(0, 0).real() == doctest::Approx(std::atan(1.0 / d)).epsilon(1e-10));
  }
}

TEST_CASE("adaptive quadrature handles inverse square root endpoints") {
  // int_0^1 dx / sqrt(x (1 - x)) = pi
  AdaptiveOptions o;
  o.rel_tol = 1e-8;
  const auto res = integrate_adaptive(
      [](double x) { return Matrix::Constant(1, 1, 1.0 / std::sqrt(x * (1.0 - x))); }, 0.0, 1.0, o);
  CHECK(std::isfinite(res.value(0, 0).real()));
  CHECK(res.value(0, 0).real() == doctest::Approx(std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("adaptive quadrature stops refining at the resolution limit") {
  AdaptiveOptions o;
  o.rel_tol = 1e-15;
  o.abs_tol = 0.0;
  o.max_panels = 100000;
  const auto res = integrate_adaptive(
      [](double x) { return Matrix::Constant(1, 1, 1.0 / std::sqrt(1.0 - x)); }, 0.0, 1.0, o);
  CHECK(std::isfinite(res.value(0, 0).real()));
  CHECK(res.panels < o.max_panels);
}

TEST_CASE("adaptive quadrature of a matrix integrand is entrywise") {
  const auto res = integrate_adaptive(
      [](double x) {
        Matrix m(2, 2);
        m << x, x * x, Complex(0, 1) * std::exp(x), 1.0;
        return m;
      },
      0.0, 1.0);
  CHECK(res.converged);
  CHECK(std::abs(res.value(0, 0) - 0.5) < 1e-13);
  CHECK(std::abs(res.value(0, 1) - 1.0 / 3.0) < 1e-13);
  CHECK(std::abs(res.value(1, 0) - Complex(0, std::exp(1.0) - 1.0)) < 1e-13);
  CHECK(std::abs(res.value(1, 1) - 1.0) < 1e-13);
}
