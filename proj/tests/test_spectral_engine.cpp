#include <cmath>
#include <random>

#include "doctest.h"

#include "crossdefect/fredholm.hpp"
#include "crossdefect/lattice_model.hpp"
#include "crossdefect/spectral_engine.hpp"
#include "support.hpp"

using namespace crossdefect;
using crossdefect::testing::kTwoPi;
using crossdefect::testing::relative_difference;

namespace {

double symbol(const Point& k) { return 4.0 - 2.0 * std::cos(kTwoPi * k.k1) - 2.0 * std::cos(kTwoPi * k.k2); }

// M = 2 operator with both axis terms and a kernel, invertible at lambda = 0.
DefectOperator generic_operator(std::mt19937_64& rng) {
  const MatrixFunction diag(2, 2, [](double k1, double k2) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = symbol({k1, k2}) + 2.0;
    m(1, 1) = symbol({k1, k2}) + 3.0;
    return m;
  });
  const auto small = [&](Index r, Index c) { return 0.3 * testing::random_function(r, c, rng); };
  return {diag + small(2, 2), small(2, 1), small(1, 2), small(2, 2), small(2, 2),
          0.3 * testing::random_kernel(2, rng)};
}

// A = A0 T1 T2 (I + K1) applied with the two axis factors swapped.
GridFunction apply_swapped(const Factorization& f, const GridFunction& u) {
  const GridFunction v = apply(f.fredholm, u);
  return apply(f.multiplication, apply(f.axis2, apply(f.axis1, v)));
}

}  // namespace

TEST_CASE("derive without defects") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(8);
  const DefectOperator op = build_operator(LatticeModel{}, -1.0);
  const SpectralCache c = derive(op, {}, g);
  CHECK(c.e1.empty());
  CHECK(c.e2.empty());
  CHECK(c.c1.empty());
  CHECK(c.d1.is_zero());
  CHECK(c.d2.is_zero());
  REQUIRE(c.fredholm.has_value());
  CHECK(k1_nystrom_matrix(c).norm() == 0.0);
  CHECK(c.fredholm->smallest_singular_value() == 1.0);
}

TEST_CASE("E1 by quadrature matches the closed form") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(8);
  struct Sample {
    double m2, omega2, k2;
  };
  for (const Sample s : {Sample{-0.5, 13.0, 0.5}, Sample{0.5, -0.7, 0.1}, Sample{-0.3, 9.0, 0.83},
                         Sample{0.8, 0.05, 0.31}}) {
    const SpectralCache c = derive(build_operator(LatticeModel{0.0, s.m2, {}}, s.omega2), {}, g);
    const auto exact = closed_form_E1(s.m2, s.omega2, s.k2);
    REQUIRE(exact.has_value());
    CHECK(std::abs(c.e1(s.k2)(0, 0) - *exact) < 1e-8);
  }
  // the worked value 1 - 6.5 / sqrt(45)
  CHECK(*closed_form_E1(-0.5, 13.0, 0.5) == doctest::Approx(1.0 - 6.5 / std::sqrt(45.0)).epsilon(1e-15));
}

TEST_CASE("E1 is undefined on a fibre crossing the band") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(8);
  const SpectralCache c = derive(build_operator(LatticeModel{0.0, 0.5, {}}, 3.0), {}, g);
  CHECK_THROWS_AS(static_cast<void>(c.e1(0.0)), NumericalError);
  // the node data may miss the crossing; the continuum test does not
  const InvertibilityVerdict v = is_invertible(build_operator(LatticeModel{0.0, 0.5, {}}, 3.0), {}, g);
  CHECK_FALSE(v.invertible);
  CHECK(v.failing_condition == 0);
}

TEST_CASE("vanishing A1 gives vanishing D kernels") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(8);
  std::mt19937_64 rng(20);
  DefectOperator op = generic_operator(rng);
  op = DefectOperator(op.a0(), MatrixFunction::zero(2, 1), op.b1(), op.a2(), op.b2(), CompactKernel::zero(2, 2));
  const SpectralCache c = derive(op, {}, g);
  const Point k{0.2, 0.6}, kp{0.7, 0.1};
  CHECK(c.d1(k, kp).norm() == 0.0);
  CHECK(c.d2(k, kp).norm() == 0.0);
}

TEST_CASE("is_invertible examples") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(16);
  const LatticeModel model{0.5, 0.5, {}};
  SUBCASE("below all bands") {
    const InvertibilityVerdict v = is_invertible(build_operator(model, -1.0), {}, g);
    CHECK(v.invertible);
    CHECK(v.failing_condition == -1);
  }
  SUBCASE("inside the bulk band") {
    const InvertibilityVerdict v = is_invertible(build_operator(model, 4.0), {}, g);
    CHECK_FALSE(v.invertible);
    CHECK(v.failing_condition == 0);
  }
  SUBCASE("identity away from one") {
    for (double l : {-3.0, 0.0, 0.5, 2.0}) {
      CHECK(is_invertible(DefectOperator::identity(2), {l}, g).invertible);
    }
    CHECK_FALSE(is_invertible(DefectOperator::identity(2), {1.0}, g).invertible);
  }
  SUBCASE("guided band of a single line") {
    // omega2 = 13 > 12.62 is above the M2 = -0.5 guided band, 12 lies inside it
    const LatticeModel line{0.0, -0.5, {}};
    CHECK(is_invertible(build_operator(line, 13.0), {}, g).invertible);
    const InvertibilityVerdict v = is_invertible(build_operator(line, 12.0), {}, g);
    CHECK_FALSE(v.invertible);
    CHECK(v.failing_condition == 1);
  }
  SUBCASE("point defect bound state") {
    const LatticeModel pd{0.0, 0.0, {{0, 0, -0.3}}};
    const InvertibilityVerdict v = is_invertible(build_operator(pd, 8.1740791726900), {}, QuadratureGrid::gauss_legendre(64));
    CHECK_FALSE(v.invertible);
    CHECK(v.failing_condition == 3);
    CHECK(is_invertible(build_operator(pd, 9.0), {}, g).invertible);
  }
}

TEST_CASE("inverse of a multiplication operator is pointwise") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(12);
  std::mt19937_64 rng(21);
  const GridFunction u = GridFunction::random(g, 1, rng);
  const GridFunction r = inverse_apply(build_operator(LatticeModel{}, -1.0), {}, u);
  GridFunction expected = u;
  for (Index n = 0; n < g.size(); ++n) expected.values()(0, n) /= symbol(g.node(n)) + 1.0;
  CHECK(relative_difference(r, expected) < 1e-15);
}

TEST_CASE("single line inverse follows the rank-structured formula") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(16);
  const double omega2 = -1.0, m2 = 0.5;
  const DefectOperator op = build_operator(LatticeModel{0.0, m2, {}}, omega2);
  std::mt19937_64 rng(22);
  const GridFunction u = GridFunction::random(g, 1, rng);

  // (I - C1 E1^{-1} <B1 .>_1) C0 u written out with the axis-1 rule
  const auto& w1 = g.axis1().weights;
  GridFunction expected(g, 1);
  for (Index j = 0; j < g.n2(); ++j) {
    Complex e1 = 1.0, p = 0.0;
    for (Index i = 0; i < g.n1(); ++i) {
      const double c0 = 1.0 / (symbol(g.node(i, j)) - omega2);
      e1 += w1[i] * c0 * (-omega2 * m2);
      p += w1[i] * c0 * u.values()(0, g.flat(i, j));
    }
    for (Index i = 0; i < g.n1(); ++i) {
      const double c0 = 1.0 / (symbol(g.node(i, j)) - omega2);
      expected.values()(0, g.flat(i, j)) = c0 * u.values()(0, g.flat(i, j)) - c0 * (-omega2 * m2) * p / e1;
    }
  }
  const GridFunction r = inverse_apply(op, {}, u);
  CHECK(relative_difference(r, expected) < 1e-13);
  CHECK(relative_difference(apply(op, r), u) < 1e-13);
}

TEST_CASE("rank-structured inverse identities") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(16);
  const DefectOperator op = build_operator(LatticeModel{0.5, 0.5, {}}, -1.0);
  const SpectralCache c = derive(op, {}, g);
  std::mt19937_64 rng(23);
  const GridFunction u = GridFunction::random(g, 1, rng);
  for (Axis axis : {Axis::first, Axis::second}) {
    const MatrixFunction ci = axis == Axis::first ? c.c1 : c.c2;
    const FibreFunction e = axis == Axis::first ? c.e1_grid : c.e2_grid;
    const MatrixFunction e_inv(1, 1, [e, axis](double k1, double k2) -> Matrix {
      return e(axis == Axis::first ? k2 : k1).inverse();
    });
    const DefectOperator t = DefectOperator::identity_plus_axis(axis, ci, op.b(axis));
    const DefectOperator s = DefectOperator::identity_plus_axis(axis, Complex(-1.0) * (ci * e_inv), op.b(axis));
    CHECK(relative_difference(apply(t, apply(s, u)), u) < 1e-10);
    CHECK(relative_difference(apply(s, apply(t, u)), u) < 1e-10);
  }
}

TEST_CASE("inverse residuals for the crossing lattice") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(32);
  const DefectOperator op = build_operator(LatticeModel{0.5, 0.5, {}}, -1.0);
  const SpectralCache c = derive(op, {}, g);
  std::mt19937_64 rng(24);
  for (int t = 0; t < 3; ++t) {
    const GridFunction u = GridFunction::random(g, 1, rng);
    CHECK(relative_difference(apply(op, inverse_apply(c, u)), u) <= 1e-8);
    CHECK(relative_difference(inverse_apply(c, apply(op, u)), u) <= 1e-8);
  }
}

TEST_CASE("inverse residuals for a generic operator with a kernel") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(10);
  std::mt19937_64 rng(25);
  const DefectOperator op = generic_operator(rng);
  const InvertibilityVerdict v = is_invertible(op, {}, g);
  REQUIRE(v.invertible);
  const SpectralCache c = derive(op, {}, g);
  REQUIRE(c.fredholm.has_value());
  CHECK(c.fredholm->form() == FredholmSystem::Form::dense);
  for (int t = 0; t < 2; ++t) {
    const GridFunction u = GridFunction::random(g, 2, rng);
    CHECK(relative_difference(apply(op, inverse_apply(c, u)), u) <= 1e-8);
    CHECK(relative_difference(inverse_apply(c, apply(op, u)), u) <= 1e-8);
  }
}

TEST_CASE("reduced and dense Fredholm systems agree") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(12);
  const DefectOperator op = build_operator(LatticeModel{0.5, 0.5, {{1, 0, 0.4}}}, -1.0);
  DeriveOptions dense;
  dense.dense_fredholm = true;
  const SpectralCache a = derive(op, {}, g);
  const SpectralCache b = derive(op, {}, g, dense);
  CHECK(a.fredholm->form() == FredholmSystem::Form::reduced);
  CHECK(b.fredholm->form() == FredholmSystem::Form::dense);
  std::mt19937_64 rng(26);
  const GridFunction u = GridFunction::random(g, 1, rng);
  CHECK(relative_difference(inverse_apply(a, u), inverse_apply(b, u)) < 1e-12);
  // I + V U and I + U V share their determinant
  const Complex da = a.fredholm->matrix().determinant();
  const Complex db = b.fredholm->matrix().determinant();
  CHECK(std::abs(da - db) < 1e-10 * std::abs(db));
}

TEST_CASE("inverse failures are signalled") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(12);
  const LatticeModel model{0.5, 0.5, {{0, 0, -0.3}}};
  std::mt19937_64 rng(27);
  const GridFunction u = GridFunction::random(g, 1, rng);
  CHECK_THROWS_AS(inverse_apply(build_operator(model, 4.0), {}, u), NotInvertible);
  const SpectralCache c = derive(build_operator(model, -1.0), {}, g);
  CHECK_THROWS_AS(inverse_apply(c, u, 1.0), IllConditioned);
}

TEST_CASE("factorization examples") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(12);
  std::mt19937_64 rng(28);
  SUBCASE("no defects") {
    const DefectOperator op = build_operator(LatticeModel{}, -1.0);
    const Factorization f = factorize(op, {}, g);
    const GridFunction u = GridFunction::random(g, 1, rng);
    CHECK(relative_difference(apply(f.axis1, u), u) == 0.0);
    CHECK(relative_difference(apply(f.axis2, u), u) == 0.0);
    CHECK(relative_difference(apply(f.fredholm, u), u) == 0.0);
    CHECK(relative_difference(apply(f.multiplication, u), apply(op, u)) < 1e-15);
  }
  SUBCASE("crossing lattice") {
    const DefectOperator op = build_operator(LatticeModel{0.5, 0.5, {{1, -1, 0.2}}}, -1.0);
    const Factorization f = factorize(op, {}, g);
    for (int t = 0; t < 3; ++t) {
      const GridFunction u = GridFunction::random(g, 1, rng);
      CHECK(relative_difference(apply_factors(f, u), apply(op, u)) <= 1e-8);
    }
  }
  SUBCASE("missing axis-1 channel") {
    const DefectOperator op = build_operator(LatticeModel{0.5, 0.0, {}}, -1.0);
    REQUIRE(op.M1() == 0);
    const Factorization f = factorize(op, {}, g);
    const GridFunction u = GridFunction::random(g, 1, rng);
    CHECK(relative_difference(apply(f.axis1, u), u) == 0.0);
    CHECK(relative_difference(apply_factors(f, u), apply(op, u)) <= 1e-8);
  }
  SUBCASE("generic operator") {
    const DefectOperator op = generic_operator(rng);
    const Factorization f = factorize(op, {}, QuadratureGrid::gauss_legendre(8));
    const GridFunction u = GridFunction::random(QuadratureGrid::gauss_legendre(8), 2, rng);
    CHECK(relative_difference(apply_factors(f, u), apply(op, u)) <= 1e-8);
  }
}

TEST_CASE("swapping the axis factors breaks the factorization") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(12);
  std::mt19937_64 rng(29);
  const GridFunction u = GridFunction::random(g, 1, rng);
  // both axes: the axis-1 factor must act after the axis-2 factor
  const DefectOperator both = build_operator(LatticeModel{0.5, 0.5, {}}, -1.0);
  const Factorization f = factorize(both, {}, g);
  CHECK(relative_difference(apply_factors(f, u), apply(both, u)) <= 1e-8);
  CHECK(relative_difference(apply_swapped(f, u), apply(both, u)) > 1e-6);
  // one axis: the order is immaterial
  const DefectOperator one = build_operator(LatticeModel{0.0, 0.5, {}}, -1.0);
  const Factorization h = factorize(one, {}, g);
  CHECK(relative_difference(apply_swapped(h, u), apply(one, u)) <= 1e-8);
}

TEST_CASE("factors are reproduced by re-derivation") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(10);
  const DefectOperator op = build_operator(LatticeModel{0.5, -0.3, {{0, 1, 0.2}}}, -1.0);
  const Factorization a = factorize(op, {}, g);
  const Factorization b = factorize(op, {}, g);
  std::mt19937_64 rng(30);
  const GridFunction u = GridFunction::random(g, 1, rng);
  CHECK((apply(a.axis1, u) - apply(b.axis1, u)).values().norm() == 0.0);
  CHECK((apply(a.axis2, u) - apply(b.axis2, u)).values().norm() == 0.0);
  CHECK((apply(a.fredholm, u) - apply(b.fredholm, u)).values().norm() == 0.0);
  CHECK((apply(a.multiplication, u) - apply(b.multiplication, u)).values().norm() == 0.0);
}

TEST_CASE("derive is invariant under pre-shifting A0") {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre(12);
  const DefectOperator op = build_operator(LatticeModel{0.5, 0.5, {{0, 0, 0.1}}}, 1.0).with_a0(
      MatrixFunction::scalar(1, [](double k1, double k2) { return symbol({k1, k2}) + 0.5; }));
  const double lambda = -0.75;
  const SpectralCache a = derive(op, {lambda}, g);
  const SpectralCache b = derive(op.shifted(lambda), {0.0}, g);
  for (Index n = 0; n < g.size(); ++n) {
    CHECK((a.nodal.c0[n] - b.nodal.c0[n]).norm() == 0.0);
    CHECK((a.nodal.c1[n] - b.nodal.c1[n]).norm() == 0.0);
  }
  for (Index j = 0; j < g.n2(); ++j) CHECK((a.nodal.e1[j] - b.nodal.e1[j]).norm() == 0.0);
  CHECK((a.fredholm->singular_values() - b.fredholm->singular_values()).norm() == 0.0);
  CHECK((a.e1(0.3) - b.e1(0.3)).norm() == 0.0);
}
