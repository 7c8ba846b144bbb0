#include "crossdefect/lattice_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace crossdefect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex phase(double s) { return {std::cos(kTwoPi * s), std::sin(kTwoPi * s)}; }

}  // namespace

double LatticeModel::site_mass(int x, int y) const {
  double mass = 1.0;
  if (y == 0) mass += m1;
  if (x == 0) mass += m2;
  for (const PointDefect& d : point_defects) {
    if (d.x == x && d.y == y) mass += d.delta_mass;
  }
  return mass;
}

void LatticeModel::validate() const {
  if (!(1.0 + m1 > 0.0)) throw std::invalid_argument("line defect mass 1 + M1 must be positive");
  if (!(1.0 + m2 > 0.0)) throw std::invalid_argument("line defect mass 1 + M2 must be positive");
  if (site_mass(0, 0) < 0.0) throw std::invalid_argument("crossing site mass 1 + M1 + M2 is negative");
  for (const PointDefect& d : point_defects) {
    if (!std::isfinite(d.delta_mass)) throw std::invalid_argument("point defect mass is not finite");
    if (site_mass(d.x, d.y) < 0.0) {
      std::ostringstream msg;
      msg << "site (" << d.x << ", " << d.y << ") has negative total mass";
      throw std::invalid_argument(msg.str());
    }
  }
}

MatrixFunction lattice_symbol() {
  return MatrixFunction::scalar(1, [](double k1, double k2) -> Complex {
    return 4.0 - 2.0 * std::cos(kTwoPi * k1) - 2.0 * std::cos(kTwoPi * k2);
  });
}

DefectOperator build_operator(const LatticeModel& model, double omega2) {
  model.validate();
  const MatrixFunction a0 = lattice_symbol() - Complex(omega2) * MatrixFunction::identity(1);
  const auto line = [omega2](double m) {
    return m == 0.0 ? MatrixFunction::zero(1, 0) : MatrixFunction::constant(Matrix::Constant(1, 1, -omega2 * m));
  };
  const auto trace = [](double m) {
    return m == 0.0 ? MatrixFunction::zero(0, 1) : MatrixFunction::identity(1);
  };
  CompactKernel kernel = CompactKernel::zero(1, 1);
  for (const PointDefect& d : model.point_defects) {
    const double nx = d.x;
    const double ny = d.y;
    const Complex c = -omega2 * d.delta_mass;
    if (c == Complex(0.0)) continue;
    MatrixFunction f = MatrixFunction::scalar(1, [c, nx, ny](double k1, double k2) {
      return c * phase(nx * k1 + ny * k2);
    });
    MatrixFunction g = MatrixFunction::scalar(1, [nx, ny](double k1, double k2) {
      return phase(-(nx * k1 + ny * k2));
    });
    kernel.add_rank_one({std::move(f), std::move(g)});
  }
  return {a0, line(model.m2), trace(model.m2), line(model.m1), trace(model.m1), std::move(kernel)};
}

SpectralProblem spectral_problem(const LatticeModel& model) {
  model.validate();
  return SpectralProblem::extended([model](double lambda) { return build_operator(model, lambda); },
                                   lattice_symbol());
}

std::optional<double> closed_form_E1(double m2, double omega2, double k2) {
  const double c = 4.0 - 2.0 * std::cos(kTwoPi * k2);
  if (omega2 >= c - 2.0 && omega2 <= c + 2.0) return std::nullopt;
  const double root = std::sqrt((2.0 * std::cos(kTwoPi * k2) - 4.0 + omega2) *
                                    (2.0 * std::cos(kTwoPi * k2) - 4.0 + omega2) -
                                4.0);
  const double branch = omega2 < c - 2.0 ? -1.0 : 1.0;
  return 1.0 + omega2 * m2 * branch / root;
}

Interval guided_band(double m) {
  if (!(m > -1.0 && m < 1.0) || m == 0.0) {
    throw std::invalid_argument("guided_band needs -1 < M < 1 and M != 0");
  }
  const double a = 1.0 - m * m;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  // k = 0 and k = 1/2 are the extremes of c; keep them exactly on the sample set
  constexpr int samples = 2000;
  for (int s = 0; s <= samples; ++s) {
    const double k = 0.5 * s / samples;
    const double c = 4.0 - 2.0 * std::cos(kTwoPi * k);
    // (1 - m^2) w^2 - 2 c w + c^2 - 4 = 0
    const double disc = std::sqrt(c * c - a * (c * c - 4.0));
    for (double w : {(c - disc) / a, (c + disc) / a}) {
      const bool below = w < c - 2.0;
      const bool above = w > c + 2.0;
      // E = 0 needs w m > 0 below the fibre band and w m < 0 above it; w = 0 closes the band
      const bool solves = (below && w * m > 0.0) || (above && w * m < 0.0) ||
                          (w == 0.0 && c == 2.0 && m > 0.0);
      if (!solves) continue;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
  }
  if (!(lo <= hi)) throw std::runtime_error("guided_band: no root outside the fibre band");
  return {lo, hi};
}

std::pair<double, double> printed_guided_band(double m) {
  const double a = 1.0 - m * m;
  const double r = std::sqrt(8.0 * m * m + 1.0);
  if (m < 0.0) return {4.0 / a, (6.0 + 2.0 * r) / a};
  return {0.0, (-6.0 + 2.0 * r) / a};
}

BandDiscrepancy check_printed_band(double m, double tolerance) {
  BandDiscrepancy d;
  d.printed = printed_guided_band(m);
  d.derived = guided_band(m);
  const bool ordered = d.printed.first <= d.printed.second;
  const bool close = std::abs(d.printed.first - d.derived.lo) <= tolerance &&
                     std::abs(d.printed.second - d.derived.hi) <= tolerance;
  d.flagged = !ordered || !close;
  std::ostringstream msg;
  msg.precision(10);
  if (d.flagged) {
    msg << "printed guided band for M = " << m << " is [" << d.printed.first << ", "
        << d.printed.second << "] but E = 0 gives [" << d.derived.lo << ", " << d.derived.hi << "]";
    if (!ordered) msg << "; the printed upper end is below the lower end";
  } else {
    msg << "printed guided band for M = " << m << " agrees with the root of E = 0";
  }
  d.message = msg.str();
  return d;
}

}  // namespace crossdefect
