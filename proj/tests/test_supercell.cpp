#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "crossdefect/supercell.hpp"
#include "support.hpp"

using namespace crossdefect;
using crossdefect::testing::kTwoPi;

namespace {

// Bloch energies 4 - 2 cos(2 pi a / L) - 2 cos(2 pi b / L) of the periodic L x L cell.
std::vector<double> bloch_energies(int side) {
  std::vector<double> e;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b)
      e.push_back(4.0 - 2.0 * std::cos(kTwoPi * a / side) - 2.0 * std::cos(kTwoPi * b / side));
  std::sort(e.begin(), e.end());
  return e;
}

}  // namespace

TEST_CASE("assembled problem is symmetric with the model masses") {
  const LatticeModel model{0.5, -0.25, {{1, 2, 0.3}}};
  const SupercellProblem p = assemble_supercell(model, 3);
  REQUIRE(p.side() == 7);
  REQUIRE(p.stiffness.rows() == 49);
  CHECK((p.stiffness - p.stiffness.transpose()).norm() == 0.0);
  CHECK(p.stiffness.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  const auto idx = [&](int x, int y) { return (x + 3) * 7 + (y + 3); };
  CHECK(p.mass(idx(0, 0)) == doctest::Approx(1.25));
  CHECK(p.mass(idx(0, 2)) == doctest::Approx(0.75));
  CHECK(p.mass(idx(2, 0)) == doctest::Approx(1.5));
  CHECK(p.mass(idx(1, 2)) == doctest::Approx(1.3));
  CHECK(p.mass(idx(-3, 3)) == 1.0);
  CHECK(p.stiffness(idx(-3, 0), idx(3, 0)) == -1.0);  // periodic wrap

  const SupercellProblem f = assemble_supercell(model, 3, Boundary::fixed);
  CHECK(f.stiffness(idx(-3, 0), idx(3, 0)) == 0.0);
  CHECK(f.stiffness(idx(-3, 0), idx(-3, 0)) == 4.0);
}

TEST_CASE("defects outside the cell are rejected") {
  CHECK_THROWS_AS(assemble_supercell(LatticeModel{0, 0, {{5, 0, 0.1}}}, 3), std::invalid_argument);
  CHECK_THROWS_AS(supercell_eigenvalues(LatticeModel{0, 0, {{0, 0, -2.0}}}, 3), std::invalid_argument);
}

TEST_CASE("degenerate single site") {
  const std::vector<double> e = supercell_eigenvalues(LatticeModel{}, 0);
  REQUIRE(e.size() == 1);
  CHECK(std::abs(e[0]) < 1e-14);
}

TEST_CASE("clean periodic cell reproduces the Bloch energies") {
  const int n = 30;
  const std::vector<double> e = supercell_eigenvalues(LatticeModel{}, n);
  const std::vector<double> bloch = bloch_energies(2 * n + 1);
  REQUIRE(e.size() == bloch.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(e[i] - bloch[i]));
  CHECK(worst < 1e-10);
  CHECK(std::abs(e.front()) < 1e-10);
  CHECK(e.back() <= 8.0 + 1e-10);
  CHECK(e.back() >= 8.0 - 0.05);
  double gap = 0.0;
  for (std::size_t i = 1; i < e.size(); ++i) gap = std::max(gap, e[i] - e[i - 1]);
  CHECK(gap <= 0.1);
}

TEST_CASE("eigenvalues are non-negative") {
  for (Boundary b : {Boundary::periodic, Boundary::fixed}) {
    const std::vector<double> e = supercell_eigenvalues(LatticeModel{0.5, -0.5, {{2, -1, 0.3}}}, 8, b);
    CHECK(e.front() >= -1e-10);
    CHECK(std::is_sorted(e.begin(), e.end()));
  }
}

TEST_CASE("massless crossing site is condensed") {
  const LatticeModel model{-0.5, -0.5, {}};
  const std::vector<double> e = supercell_eigenvalues(model, 5);
  CHECK(e.size() == 11u * 11u - 1u);
  CHECK(e.front() >= -1e-10);
  // a tiny crossing mass recovers the same low spectrum
  const std::vector<double> near = supercell_eigenvalues(LatticeModel{-0.5, -0.5, {{0, 0, 1e-7}}}, 5);
  REQUIRE(near.size() == e.size() + 1);
  for (std::size_t i = 0; i < 20; ++i) CHECK(std::abs(near[i] - e[i]) < 1e-5);
}

TEST_CASE("point-defect bound state converges with the cell size") {
  const LatticeModel model{0, 0, {{0, 0, -0.3}}};
  const std::vector<double> small = supercell_eigenvalues(model, 10);
  const std::vector<double> large = supercell_eigenvalues(model, 20);
  CHECK(small.back() > 8.0);
  CHECK(large.back() > 8.0);
  CHECK(small[small.size() - 2] <= 8.0);
  CHECK(std::abs(small.back() - large.back()) <= 5e-3);
}

TEST_CASE("oracle comparison") {
  SUBCASE("clean lattice lies in the bulk band") {
    SpectrumReport r;
    r.sigma0 = IntervalSet({{0, 8}});
    const OracleVerdict v = oracle_compare(r, supercell_eigenvalues(LatticeModel{}, 10), {1e-6, 5e-3});
    CHECK(v.passed);
    CHECK(v.unexplained.empty());
  }
  SUBCASE("a missing bound state is reported") {
    SpectrumReport r;
    r.sigma0 = IntervalSet({{0, 8}});
    const OracleVerdict v = oracle_compare(r, supercell_eigenvalues(LatticeModel{0, 0, {{0, 0, -0.3}}}, 10));
    CHECK_FALSE(v.passed);
    REQUIRE(v.unexplained.size() == 1);
    CHECK(v.unexplained[0] > 8.1);
    CHECK_FALSE(v.diagnostics.empty());
  }
  SUBCASE("an unmatched sigma3 entry is reported") {
    SpectrumReport r;
    r.sigma0 = IntervalSet({{0, 8}});
    r.sigma3.push_back({9.0, 0.0, 1, 0.0, true});
    const OracleVerdict v = oracle_compare(r, supercell_eigenvalues(LatticeModel{}, 6));
    CHECK_FALSE(v.passed);
    CHECK(v.unmatched_sigma3 == std::vector<double>{9.0});
  }
}
