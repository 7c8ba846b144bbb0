#pragma once

#include <string>
#include <vector>

#include "crossdefect/lattice_model.hpp"
#include "crossdefect/spectrum.hpp"

namespace crossdefect {

enum class Boundary { periodic, fixed };

/// Finite block of sites -N..N per axis, flat index (x + N) * (2N + 1) + (y + N).
struct SupercellProblem {
  int half_width = 0;
  Boundary boundary = Boundary::periodic;
  RealMatrix stiffness;  // -Laplacian, symmetric
  RealVector mass;

  [[nodiscard]] int side() const { return 2 * half_width + 1; }
};

SupercellProblem assemble_supercell(const LatticeModel& model, int half_width,
                                    Boundary boundary = Boundary::periodic);

/// All omega^2 with -Laplacian u = omega^2 mass u, ascending. Massless sites are condensed
/// out first (their rows are constraints), so the count is the number of massive sites.
std::vector<double> supercell_eigenvalues(const SupercellProblem& problem);
std::vector<double> supercell_eigenvalues(const LatticeModel& model, int half_width,
                                          Boundary boundary = Boundary::periodic);

struct OracleTolerances {
  double band = 0.05;        // distance of a supercell eigenvalue to the predicted spectrum
  double eigenvalue = 5e-3;  // distance of a sigma3 entry to the nearest supercell eigenvalue
};

struct OracleVerdict {
  bool passed = false;
  std::vector<double> unexplained;  // supercell eigenvalues far from every component
  std::vector<std::pair<double, double>> sigma3_matches;  // (sigma3 entry, nearest eigenvalue)
  std::vector<double> unmatched_sigma3;
  std::vector<std::string> diagnostics;
};

OracleVerdict oracle_compare(const SpectrumReport& report, const std::vector<double>& eigenvalues,
                             const OracleTolerances& tolerances = {});

}  // namespace crossdefect
