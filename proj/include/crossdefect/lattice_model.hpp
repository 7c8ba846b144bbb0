#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossdefect/defect_operator.hpp"
#include "crossdefect/interval_set.hpp"
#include "crossdefect/spectrum.hpp"

namespace crossdefect {

/// Extra mass at one lattice site n = (x, y).
struct PointDefect {
  int x = 0;
  int y = 0;
  double delta_mass = 0.0;
};

/// Square spring-mass lattice with unit masses and springs, a row y = 0 of masses 1 + m1,
/// a column x = 0 of masses 1 + m2 and optional point defects. The crossing site carries
/// 1 + m1 + m2.
///
/// Note the pairing: the column x = 0 (mass m2) produces the <.>_1 term, the row y = 0
/// (mass m1) the <.>_2 term.
struct LatticeModel {
  double m1 = 0.0;
  double m2 = 0.0;
  std::vector<PointDefect> point_defects;

  [[nodiscard]] double site_mass(int x, int y) const;
  /// Throws std::invalid_argument unless 1 + m1 > 0, 1 + m2 > 0 and every site mass is
  /// non-negative. A massless site is accepted (it appears when 1 + m1 + m2 = 0).
  void validate() const;
};

/// 4 - 2 cos 2 pi k1 - 2 cos 2 pi k2
MatrixFunction lattice_symbol();

/// The operator whose kernel is the equation of motion at energy omega2:
/// A0 = symbol - omega2, A1 = -omega2 m2, B1 = 1, A2 = -omega2 m1, B2 = 1, and per point
/// defect the separable kernel (-omega2 dm e^{2 pi i n.k}) e^{-2 pi i n.k'}.
DefectOperator build_operator(const LatticeModel& model, double omega2);

/// Extended problem lambda = omega2 with shift base = lattice_symbol().
SpectralProblem spectral_problem(const LatticeModel& model);

/// E1(k2) of the single column defect in closed form; nullopt inside the closed fibre band
/// [2 - 2 cos 2 pi k2, 6 - 2 cos 2 pi k2].
std::optional<double> closed_form_E1(double m2, double omega2, double k2);

/// Guided band of a line defect with mass increment m, from the roots of
/// (1 - m^2) w^2 - 2 c w + c^2 - 4 = 0, c = 4 - 2 cos 2 pi k, that solve E = 0 outside the
/// fibre band. Requires -1 < m < 1 and m != 0.
Interval guided_band(double m);

/// The endpoints as printed in the reference formula, both branches, without checks.
std::pair<double, double> printed_guided_band(double m);

struct BandDiscrepancy {
  bool flagged = false;
  std::pair<double, double> printed;
  Interval derived;
  std::string message;
};

/// Compares the printed formula with guided_band(m).
BandDiscrepancy check_printed_band(double m, double tolerance = 1e-9);

}  // namespace crossdefect
