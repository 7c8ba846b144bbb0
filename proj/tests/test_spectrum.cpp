#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"

#include "crossdefect/lattice_model.hpp"
#include "crossdefect/spectrum.hpp"
#include "support.hpp"

using namespace crossdefect;
using crossdefect::testing::kTwoPi;

namespace {

SpectralProblem multiplication_problem(MatrixFunction a0) {
  return SpectralProblem::shifted(DefectOperator::multiplication(std::move(a0)));
}

Sigma12Options quick12() {
  Sigma12Options o;
  o.lambda_points = 500;
  o.fibres = 32;
  return o;
}

}  // namespace

TEST_CASE("interval sets merge, measure and complement") {
  const IntervalSet s({{3, 4}, {0, 1}, {0.5, 2}, {6, 6}});
  REQUIRE(s.size() == 3);
  CHECK(s[0].lo == 0.0);
  CHECK(s[0].hi == 2.0);
  CHECK(s.contains(3.5));
  CHECK_FALSE(s.contains(2.5));
  CHECK(s.distance(2.5) == doctest::Approx(0.5));
  CHECK(s.distance(1.0) == 0.0);
  CHECK(IntervalSet().distance(1.0) == std::numeric_limits<double>::infinity());
  const IntervalSet c = s.complement_within(-1, 10, 0.1);
  REQUIRE(c.size() == 4);
  CHECK(c[0].hi == doctest::Approx(-0.1));
  CHECK(c[1].lo == doctest::Approx(2.1));
  CHECK(c[3].hi == 10.0);
  CHECK(IntervalSet({{0, 1}, {1.05, 2}}, 0.1).size() == 1);
  CHECK(set_union(IntervalSet({{0, 1}}), IntervalSet({{0.5, 3}})) == IntervalSet({{0, 3}}));
  CHECK(s.to_string() == "[0, 2] U [3, 4] U [6, 6]");
}

TEST_CASE("sigma0 examples") {
  SUBCASE("lattice bulk band") {
    const ComponentResult r = sigma0(spectral_problem(LatticeModel{0.5, -0.5, {}}));
    CHECK(r.hermitian_path);
    REQUIRE(r.set.size() == 1);
    CHECK(std::abs(r.set[0].lo) <= 1e-6);
    CHECK(std::abs(r.set[0].hi - 8.0) <= 1e-6);
  }
  SUBCASE("constant symbol") {
    const ComponentResult r = sigma0(multiplication_problem(MatrixFunction::constant(Matrix::Constant(1, 1, 2.5))));
    REQUIRE(r.set.size() == 1);
    CHECK(r.set[0].lo == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(r.set[0].hi == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("one-dimensional band") {
    const ComponentResult r = sigma0(multiplication_problem(
        MatrixFunction::scalar(1, [](double k1, double) { return 2.0 - 2.0 * std::cos(kTwoPi * k1); })));
    REQUIRE(r.set.size() == 1);
    CHECK(std::abs(r.set[0].lo) <= 1e-6);
    CHECK(std::abs(r.set[0].hi - 4.0) <= 1e-6);
  }
  SUBCASE("two separated bands") {
    const MatrixFunction a0(2, 2, [](double k1, double k2) {
      Matrix m = Matrix::Zero(2, 2);
      m(0, 0) = 1.0 - std::cos(kTwoPi * k1);
      m(1, 1) = 5.0 + std::cos(kTwoPi * k2);
      return m;
    });
    const ComponentResult r = sigma0(multiplication_problem(a0));
    REQUIRE(r.set.size() == 2);
    CHECK(std::abs(r.set[0].hi - 2.0) <= 1e-6);
    CHECK(std::abs(r.set[1].lo - 4.0) <= 1e-6);
    CHECK(std::abs(r.set[1].hi - 6.0) <= 1e-6);
  }
  SUBCASE("non-Hermitian symbol takes the generic path") {
    const MatrixFunction a0(2, 2, [](double k1, double) {
      Matrix m(2, 2);
      const double s = 2.0 - 2.0 * std::cos(kTwoPi * k1);
      m << s, 0.5, 0.0, s + 10.0;
      return m;
    });
    Sigma0Options o;
    o.window = {-1.0, 16.0};
    const ComponentResult r = sigma0(multiplication_problem(a0), o);
    CHECK_FALSE(r.hermitian_path);
    REQUIRE(r.set.size() == 2);
    // edges overshoot by threshold / slope of the smallest singular value, about 1.0013e-6 here
    CHECK(std::abs(r.set[0].lo) <= 2e-6);
    CHECK(std::abs(r.set[0].hi - 4.0) <= 2e-6);
    CHECK(std::abs(r.set[1].lo - 10.0) <= 2e-6);
    CHECK(std::abs(r.set[1].hi - 14.0) <= 2e-6);
  }
  SUBCASE("scan statistic is the band distance") {
    Sigma0Options o;
    o.lambda_points = 101;
    o.window = {-2.0, 10.0};
    const ComponentResult r = sigma0(spectral_problem(LatticeModel{}), o);
    REQUIRE(r.scan.rows.size() == 101);
    for (const ScanRow& row : r.scan.rows) {
      const double d = row.lambda < 0 ? -row.lambda : row.lambda > 8 ? row.lambda - 8 : 0.0;
      CHECK(row.statistic == doctest::Approx(d).epsilon(1e-9));
    }
  }
}

TEST_CASE("sigma12 of an absent line is empty") {
  const ComponentResult r = sigma12(spectral_problem(LatticeModel{0.5, 0.0, {}}), Axis::first, quick12());
  CHECK(r.set.empty());
}

TEST_CASE("sigma12 guided band of a heavy line") {
  const ComponentResult r = sigma12(spectral_problem(LatticeModel{0.0, -0.5, {}}), Axis::first, quick12());
  REQUIRE(r.set.size() == 1);
  CHECK(std::abs(r.set[0].lo - 16.0 / 3.0) <= 1e-4);
  CHECK(std::abs(r.set[0].hi - (6.0 + 2.0 * std::sqrt(3.0)) / 0.75) <= 1e-4);
}

TEST_CASE("sigma12 on axis 2 follows the row mass") {
  const ComponentResult r = sigma12(spectral_problem(LatticeModel{-0.5, 0.0, {}}), Axis::second, quick12());
  REQUIRE(r.set.size() == 1);
  CHECK(std::abs(r.set[0].lo - 16.0 / 3.0) <= 1e-4);
  CHECK(sigma12(spectral_problem(LatticeModel{-0.5, 0.0, {}}), Axis::first, quick12()).set.empty());
}

TEST_CASE("sigma1 ignores the axis-2 blocks and the kernel") {
  Sigma12Options o = quick12();
  o.window = {4.0, 14.0};
  const ComponentResult a = sigma12(spectral_problem(LatticeModel{0.0, -0.5, {}}), Axis::first, o);
  const ComponentResult b = sigma12(spectral_problem(LatticeModel{0.7, -0.5, {{2, 3, 0.4}}}), Axis::first, o);
  CHECK(a.set == b.set);
  REQUIRE(a.scan.rows.size() == b.scan.rows.size());
  for (std::size_t i = 0; i < a.scan.rows.size(); ++i) {
    CHECK(std::memcmp(&a.scan.rows[i], &b.scan.rows[i], sizeof(ScanRow)) == 0);
  }
}

TEST_CASE("fredholm statistic") {
  const SpectralProblem clean = spectral_problem(LatticeModel{});
  CHECK(fredholm_statistic(clean, 10.0, 16) == 1.0);
  const SpectralProblem point = spectral_problem(LatticeModel{0, 0, {{0, 0, -0.3}}});
  CHECK(fredholm_statistic(point, 8.17407917, 64) < 1e-6);
  CHECK(fredholm_statistic(point, 10.0, 64) > 0.1);
}

TEST_CASE("sigma3 examples") {
  SUBCASE("no defects") {
    const Sigma3Result r = sigma3(spectral_problem(LatticeModel{}), IntervalSet({{0, 8}}));
    CHECK(r.eigenvalues.empty());
    CHECK(r.windows.size() == 2);
  }
  SUBCASE("light point mass binds one state above the band") {
    const Sigma3Result r = sigma3(spectral_problem(LatticeModel{0, 0, {{0, 0, -0.3}}}), IntervalSet({{0, 8}}));
    REQUIRE(r.eigenvalues.size() == 1);
    const DiscreteEigenvalue& e = r.eigenvalues[0];
    CHECK(e.lambda > 8.0);
    CHECK(e.lambda == doctest::Approx(8.17408).epsilon(1e-5));
    CHECK(e.residual < 1e-6);
    CHECK(e.multiplicity == 1);
    CHECK(e.validated);
    CHECK(e.validation_shift <= 1e-4);
  }
  SUBCASE("windows touching the margin are refused") {
    Sigma3Options o;
    o.windows = {{8.0005, 9.0}};
    CHECK_THROWS_AS(sigma3(spectral_problem(LatticeModel{}), IntervalSet({{0, 8}}), o), std::invalid_argument);
    o.windows = {{8.01, 9.0}};
    CHECK_NOTHROW(sigma3(spectral_problem(LatticeModel{}), IntervalSet({{0, 8}}), o));
  }
}

TEST_CASE("spectrum report invariants") {
  SpectrumOptions o;
  o.sigma12 = quick12();
  o.sigma3.nystrom_order = 32;
  o.sigma0.window = o.sigma12.window = o.sigma3.window = {-1.0, 30.0};
  const SpectrumReport r = compute_spectrum(spectral_problem(LatticeModel{-0.4, -0.4, {}}), o);
  REQUIRE_FALSE(r.sigma1.empty());
  REQUIRE_FALSE(r.sigma3.empty());
  const IntervalSet cont = r.continuous();
  for (const auto& e : r.sigma3) {
    CHECK_FALSE(cont.contains(e.lambda));
    CHECK(e.residual < 1e-6);
  }
  for (int c = 0; c < 4; ++c) {
    CHECK(r.scans[c].component == c);
    for (std::size_t i = 1; i < r.scans[c].rows.size(); ++i) {
      CHECK(r.scans[c].rows[i - 1].lambda <= r.scans[c].rows[i].lambda);
    }
  }
}
