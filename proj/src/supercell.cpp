#include "crossdefect/supercell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <lapacke.h>

namespace crossdefect {

SupercellProblem assemble_supercell(const LatticeModel& model, int half_width, Boundary boundary) {
  if (half_width < 0) throw std::invalid_argument("supercell half-width must be non-negative");
  model.validate();
  SupercellProblem p;
  p.half_width = half_width;
  p.boundary = boundary;
  const int side = p.side();
  const Index size = static_cast<Index>(side) * side;
  for (const PointDefect& d : model.point_defects) {
    if (std::abs(d.x) > half_width || std::abs(d.y) > half_width) {
      throw std::invalid_argument("point defect lies outside the supercell");
    }
  }
  p.stiffness = RealMatrix::Zero(size, size);
  p.mass.resize(size);
  const auto index = [side](int i, int j) { return static_cast<Index>(i) * side + j; };
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const Index n = index(i, j);
      p.mass(n) = model.site_mass(i - half_width, j - half_width);
      p.stiffness(n, n) += 4.0;
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int e = 0; e < 4; ++e) {
        int a = i + di[e];
        int b = j + dj[e];
        if (boundary == Boundary::periodic) {
          a = (a + side) % side;
          b = (b + side) % side;
        } else if (a < 0 || a >= side || b < 0 || b >= side) {
          continue;
        }
        p.stiffness(n, index(a, b)) -= 1.0;
      }
    }
  }
  return p;
}

std::vector<double> supercell_eigenvalues(const SupercellProblem& problem) {
  const Index size = problem.mass.size();
  std::vector<Index> massive;
  std::vector<Index> massless;
  for (Index n = 0; n < size; ++n) {
    if (problem.mass(n) < 0.0) throw std::invalid_argument("supercell has a negative mass");
    (problem.mass(n) > 0.0 ? massive : massless).push_back(n);
  }
  const Index np = static_cast<Index>(massive.size());
  const Index nz = static_cast<Index>(massless.size());
  RealMatrix s(np, np);
  for (Index a = 0; a < np; ++a) {
    for (Index b = 0; b < np; ++b) s(a, b) = problem.stiffness(massive[a], massive[b]);
  }
  if (nz > 0) {
    // static condensation: S = Kpp - Kpz Kzz^{-1} Kzp
    RealMatrix kzz(nz, nz);
    RealMatrix kzp(nz, np);
    for (Index a = 0; a < nz; ++a) {
      for (Index b = 0; b < nz; ++b) kzz(a, b) = problem.stiffness(massless[a], massless[b]);
      for (Index b = 0; b < np; ++b) kzp(a, b) = problem.stiffness(massless[a], massive[b]);
    }
    Eigen::LDLT<RealMatrix> ldlt(kzz);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, kzz.norm())) {
      throw std::invalid_argument("massless sites are not constrained by their springs");
    }
    s -= kzp.transpose() * ldlt.solve(kzp);
  }
  RealVector inv_sqrt(np);
  for (Index a = 0; a < np; ++a) inv_sqrt(a) = 1.0 / std::sqrt(problem.mass(massive[a]));
  for (Index b = 0; b < np; ++b) {
    for (Index a = 0; a < np; ++a) s(a, b) *= inv_sqrt(a) * inv_sqrt(b);
  }
  std::vector<double> w(static_cast<std::size_t>(np));
  if (np == 0) return w;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(np),
                                         s.data(), static_cast<lapack_int>(np), w.data());
  if (info != 0) throw NumericalError("dsyevd failed with info " + std::to_string(info));
  return w;
}

std::vector<double> supercell_eigenvalues(const LatticeModel& model, int half_width, Boundary boundary) {
  return supercell_eigenvalues(assemble_supercell(model, half_width, boundary));
}

OracleVerdict oracle_compare(const SpectrumReport& report, const std::vector<double>& eigenvalues,
                             const OracleTolerances& tolerances) {
  OracleVerdict v;
  IntervalSet predicted = report.continuous();
  for (const DiscreteEigenvalue& e : report.sigma3) predicted.add({e.lambda, e.lambda});
  for (double w : eigenvalues) {
    if (predicted.distance(w) > tolerances.band) v.unexplained.push_back(w);
  }
  for (const DiscreteEigenvalue& e : report.sigma3) {
    double nearest = std::numeric_limits<double>::quiet_NaN();
    for (double w : eigenvalues) {
      if (std::isnan(nearest) || std::abs(w - e.lambda) < std::abs(nearest - e.lambda)) nearest = w;
    }
    if (!std::isnan(nearest) && std::abs(nearest - e.lambda) <= tolerances.eigenvalue) {
      v.sigma3_matches.emplace_back(e.lambda, nearest);
    } else {
      v.unmatched_sigma3.push_back(e.lambda);
    }
  }
  std::ostringstream os;
  os.precision(12);
  for (double w : v.unexplained) {
    os.str("");
    os << "supercell eigenvalue " << w << " is " << predicted.distance(w)
       << " away from the predicted spectrum (tolerance " << tolerances.band << ")";
    v.diagnostics.push_back(os.str());
  }
  for (double l : v.unmatched_sigma3) {
    os.str("");
    os << "sigma3 entry " << l << " has no supercell eigenvalue within " << tolerances.eigenvalue;
    v.diagnostics.push_back(os.str());
  }
  v.passed = v.unexplained.empty() && v.unmatched_sigma3.empty();
  return v;
}

}  // namespace crossdefect
