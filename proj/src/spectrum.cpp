#include "crossdefect/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "crossdefect/fredholm.hpp"
#include "crossdefect/spectral_engine.hpp"
#include "parallel.hpp"

namespace crossdefect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEdgeTolerance = 1e-3;
constexpr double kEdgeNoise = 1e3 * std::numeric_limits<double>::epsilon();

bool is_hermitian(const Matrix& a) {
  return (a - a.adjoint()).norm() <= 1e-13 * std::max(1.0, a.norm());
}

RealVector hermitian_eigenvalues(const Matrix& a) {
  if (a.rows() == 1) return RealVector::Constant(1, a(0, 0).real());
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double smallest_sv(const Matrix& a) {
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double wrap(double t) { return t - std::floor(t); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> x(static_cast<std::size_t>(std::max(n, 1)));
  if (n <= 1) {
    x[0] = lo;
    return x;
  }
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  x.back() = hi;
  return x;
}

template <typename F>
std::pair<double, double> minimise(F f, double lo, double hi) {
  return boost::math::tools::brent_find_minima(f, lo, hi, 40);
}

// Brent on each of the four grid cells around `centre`. A single bracket over the two
// cells next to a hump of |s - lambda| can settle on the hump instead of either zero.
template <class F>
std::pair<double, double> minimise_cells(F f, double centre, double h) {
  std::pair<double, double> best{centre, f(centre)};
  for (int c = -2; c < 2; ++c) {
    const double lo = std::clamp(centre + c * h, 0.0, 1.0);
    const double hi = std::clamp(centre + (c + 1) * h, 0.0, 1.0);
    if (!(hi > lo)) continue;
    const auto r = minimise(f, lo, hi);
    if (r.second < best.second) best = r;
  }
  return best;
}

// --- sigma0 -----------------------------------------------------------------------------

struct BandExtremum {
  double value;
  Point at;
};

BandExtremum refine_band(const MatrixFunction& base, Index band, Point p, double h, bool maximum) {
  const double sign = maximum ? -1.0 : 1.0;
  const auto value = [&](double x, double y) {
    return sign * hermitian_eigenvalues(base(x, y))(band);
  };
  double best = value(p.k1, p.k2);
  for (int sweep = 0; sweep < 4; ++sweep) {
    auto r1 = minimise([&](double x) { return value(x, p.k2); }, std::max(0.0, p.k1 - h),
                       std::min(1.0, p.k1 + h));
    if (r1.second < best) {
      best = r1.second;
      p.k1 = r1.first;
    }
    auto r2 = minimise([&](double y) { return value(p.k1, y); }, std::max(0.0, p.k2 - h),
                       std::min(1.0, p.k2 + h));
    if (r2.second < best) {
      best = r2.second;
      p.k2 = r2.first;
    }
  }
  return {sign * best, p};
}

std::optional<IntervalSet> hermitian_bands(const MatrixFunction& base, int k_points) {
  const int n = std::max(k_points, 2);
  const double h = 1.0 / (n - 1);
  const Index m = base.rows();
  std::vector<BandExtremum> lo(m, {kInf, {}});
  std::vector<BandExtremum> hi(m, {-kInf, {}});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Matrix b = base(i * h, j * h);
      if (!is_hermitian(b)) return std::nullopt;
      const RealVector e = hermitian_eigenvalues(b);
      for (Index band = 0; band < m; ++band) {
        if (e(band) < lo[band].value) lo[band] = {e(band), {i * h, j * h}};
        if (e(band) > hi[band].value) hi[band] = {e(band), {i * h, j * h}};
      }
    }
  }
  std::vector<Interval> bands;
  for (Index band = 0; band < m; ++band) {
    const double a = refine_band(base, band, lo[band].at, h, false).value;
    const double b = refine_band(base, band, hi[band].at, h, true).value;
    bands.push_back({std::min(a, lo[band].value), std::max(b, hi[band].value)});
  }
  return IntervalSet(std::move(bands));
}

// min over k of the smallest singular value of A0(lambda)(k), coarse grid plus refinement.
double a0_statistic(const MatrixFunction& a0, int n) {
  const double h = 1.0 / (n - 1);
  double best = kInf;
  Point at{};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = smallest_sv(a0(i * h, j * h));
      if (s < best) {
        best = s;
        at = {i * h, j * h};
      }
    }
  }
  for (int sweep = 0; sweep < 3; ++sweep) {
    const auto r1 = minimise_cells([&](double x) { return smallest_sv(a0(x, at.k2)); }, at.k1, h);
    if (r1.second < best) {
      best = r1.second;
      at.k1 = r1.first;
    }
    const auto r2 = minimise_cells([&](double y) { return smallest_sv(a0(at.k1, y)); }, at.k2, h);
    if (r2.second < best) {
      best = r2.second;
      at.k2 = r2.first;
    }
  }
  return best;
}

// --- sigma1, sigma2 -----------------------------------------------------------------------

struct FibreSample {
  double lambda;
  std::optional<Complex> det;
};

int real_sign(const std::optional<Complex>& d) {
  if (!d) return 0;
  if (std::abs(d->imag()) > 1e-8 * std::max(1.0, std::abs(*d))) return 0;
  return d->real() > 0.0 ? 1 : (d->real() < 0.0 ? -1 : 0);
}

class FibreScanner {
 public:
  FibreScanner(const SpectralProblem& problem, Axis axis, const Sigma12Options& options)
      : problem_(problem), axis_(axis), options_(options) {
    if (problem.shift_base) {
      // band masks need a Hermitian base along every fibre; probe once
      banded_ = true;
      for (double x : linspace(0.0, 1.0, 17)) {
        for (double y : linspace(0.0, 1.0, 17)) {
          if (!is_hermitian((*problem.shift_base)(x, y))) banded_ = false;
        }
      }
    }
  }

  [[nodiscard]] bool banded() const { return banded_; }

  [[nodiscard]] IntervalSet bands(double t) const {
    if (!banded_) return {};
    return fibre_bands(*problem_.shift_base, axis_, wrap(t));
  }

  [[nodiscard]] double offset(double x) const {
    return options_.edge_offset * std::max(1.0, std::abs(x));
  }

  [[nodiscard]] std::optional<Complex> det(double lambda, double t, const IntervalSet& bands) const {
    if (banded_ && bands.contains(lambda, 0.5 * offset(lambda))) return std::nullopt;
    AdaptiveOptions quadrature = options_.quadrature;
    if (banded_) {
      // A0 - lambda is formed with cancellation near the edge; the integrand carries
      // relative noise of order eps / distance, so the tolerance must follow it.
      const double noise = kEdgeNoise * std::max(1.0, std::abs(lambda)) / bands.distance(lambda);
      quadrature.rel_tol = std::max(quadrature.rel_tol, std::min(noise, kEdgeTolerance));
    }
    const auto e = fibre_matrix_adaptive(problem_.at(lambda), axis_, wrap(t), quadrature, !banded_);
    if (!e) return std::nullopt;
    return e->determinant();
  }

  // Samples at `grid` plus the points just outside every band edge inside [lo, hi].
  [[nodiscard]] std::vector<FibreSample> samples(const std::vector<double>& grid, double t,
                                                 const IntervalSet& bands) const {
    std::vector<double> lambdas = grid;
    if (!grid.empty()) {
      const double lo = grid.front();
      const double hi = grid.back();
      for (const Interval& b : bands.intervals()) {
        const double left = b.lo - offset(b.lo);
        const double right = b.hi + offset(b.hi);
        if (left > lo && left < hi) lambdas.push_back(left);
        if (right > lo && right < hi) lambdas.push_back(right);
      }
    }
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<FibreSample> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) out.push_back({l, det(l, t, bands)});
    return out;
  }

  // Roots of the real determinant between consecutive valid samples of equal fibre validity.
  [[nodiscard]] std::vector<double> roots(const std::vector<FibreSample>& s, double t,
                                          const IntervalSet& bands) const {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const int sa = real_sign(s[k].det);
      const int sb = real_sign(s[k + 1].det);
      if (sa == 0 && s[k].det && std::abs(*s[k].det) == 0.0) out.push_back(s[k].lambda);
      if (sa == 0 || sb == 0 || sa == sb) continue;
      const double a = s[k].lambda;
      const double b = s[k + 1].lambda;
      bool crosses_band = false;
      for (const Interval& band : bands.intervals()) {
        if (band.hi >= a && band.lo <= b) crosses_band = true;
      }
      if (crosses_band) continue;
      try {
        const auto f = [&](double l) {
          const auto d = det(l, t, bands);
          if (!d) throw NumericalError("fibre left its valid region");
          return d->real();
        };
        std::uintmax_t iterations = 200;
        const auto r = boost::math::tools::toms748_solve(
            f, a, b, s[k].det->real(), s[k + 1].det->real(),
            boost::math::tools::eps_tolerance<double>(50), iterations);
        out.push_back(0.5 * (r.first + r.second));
      } catch (const NumericalError&) {
      }
    }
    return out;
  }

  [[nodiscard]] std::vector<double> roots_in(double t, double lo, double hi, int points) const {
    const IntervalSet b = bands(t);
    return roots(samples(linspace(lo, hi, points), t, b), t, b);
  }

 private:
  const SpectralProblem& problem_;
  Axis axis_;
  const Sigma12Options& options_;
  bool banded_ = false;
};

struct FibreResult {
  double t = 0.0;
  std::vector<std::optional<Complex>> grid_det;  // at the lambda grid only
  std::vector<double> roots;
};

}  // namespace

SpectralProblem SpectralProblem::shifted(const DefectOperator& op) {
  SpectralProblem p;
  p.family = [op](double lambda) { return op.shifted(lambda); };
  p.shift_base = op.a0();
  return p;
}

SpectralProblem SpectralProblem::extended(std::function<DefectOperator(double)> family,
                                          std::optional<MatrixFunction> shift_base) {
  SpectralProblem p;
  p.family = std::move(family);
  p.shift_base = std::move(shift_base);
  return p;
}

IntervalSet SpectrumReport::continuous() const {
  return set_union(set_union(sigma0, sigma1), sigma2);
}

ComponentResult sigma0(const SpectralProblem& problem, const Sigma0Options& options) {
  ComponentResult result;
  result.scan.component = 0;
  const std::vector<double> grid =
      linspace(options.window.lo, options.window.hi, options.lambda_points);

  if (problem.shift_base) {
    if (auto bands = hermitian_bands(*problem.shift_base, options.k_points)) {
      result.set = *bands;
      result.hermitian_path = true;
      result.scan.statistic = "distance_to_band";
      for (double l : grid) result.scan.rows.push_back({l, result.set.distance(l), 1.0});
      return result;
    }
  }

  // generic path
  result.scan.statistic = "min_smallest_singular_value";
  const int n = std::clamp(options.k_points / 5, 9, 65);
  const auto statistic = [&](double l) {
    return a0_statistic(problem.at(l).a0(), n);
  };
  std::vector<double> stat(grid.size());
  detail::parallel_for(grid.size(), options.threads, [&](std::size_t k) { stat[k] = statistic(grid[k]); });
  std::vector<Interval> found;
  const auto inside = [&](double l) { return statistic(l) < options.threshold; };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    result.scan.rows.push_back({grid[k], stat[k], 1.0});
    if (stat[k] >= options.threshold) continue;
    std::size_t e = k;
    while (e + 1 < grid.size() && stat[e + 1] < options.threshold) ++e;
    double lo = grid[k];
    double hi = grid[e];
    if (k > 0) {
      double a = grid[k - 1];
      double b = grid[k];
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (a + b);
        (inside(mid) ? b : a) = mid;
      }
      lo = b;
    }
    if (e + 1 < grid.size()) {
      double a = grid[e];
      double b = grid[e + 1];
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (a + b);
        (inside(mid) ? a : b) = mid;
      }
      hi = a;
    }
    found.push_back({lo, hi});
    for (std::size_t j = k + 1; j <= e; ++j) result.scan.rows.push_back({grid[j], stat[j], 1.0});
    k = e;
  }
  result.set = IntervalSet(std::move(found));
  return result;
}

IntervalSet fibre_bands(const MatrixFunction& base, Axis axis, double t, int samples) {
  const Index m = base.rows();
  const auto at = [&](double s) {
    return axis == Axis::first ? base(s, t) : base(t, s);
  };
  const double h = 1.0 / samples;
  std::vector<double> lo(m, kInf), hi(m, -kInf);
  std::vector<double> lo_at(m, 0.0), hi_at(m, 0.0);
  for (int i = 0; i <= samples; ++i) {
    const RealVector e = hermitian_eigenvalues(at(i * h));
    for (Index b = 0; b < m; ++b) {
      if (e(b) < lo[b]) {
        lo[b] = e(b);
        lo_at[b] = i * h;
      }
      if (e(b) > hi[b]) {
        hi[b] = e(b);
        hi_at[b] = i * h;
      }
    }
  }
  std::vector<Interval> out;
  for (Index b = 0; b < m; ++b) {
    const auto band = [&](double s) { return hermitian_eigenvalues(at(wrap(s)))(b); };
    const auto rmin = minimise(band, lo_at[b] - h, lo_at[b] + h);
    const auto rmax = minimise([&](double s) { return -band(s); }, hi_at[b] - h, hi_at[b] + h);
    out.push_back({std::min(lo[b], rmin.second), std::max(hi[b], -rmax.second)});
  }
  return IntervalSet(std::move(out));
}

ComponentResult sigma12(const SpectralProblem& problem, Axis axis, const Sigma12Options& options) {
  ComponentResult result;
  result.scan.component = axis == Axis::first ? 1 : 2;
  result.scan.statistic = "min_abs_det";
  const std::vector<double> grid =
      linspace(options.window.lo, options.window.hi, options.lambda_points);
  const DefectOperator probe = problem.at(grid.front());
  if (probe.channels(axis) == 0 || probe.a(axis).is_zero() || probe.b(axis).is_zero()) {
    // E is the identity; keep the table shape
    for (double l : grid) result.scan.rows.push_back({l, 1.0, 1.0});
    return result;
  }

  const FibreScanner scanner(problem, axis, options);
  const int nf = std::max(options.fibres, 2);
  const double dt = 1.0 / nf;
  std::vector<FibreResult> fibres(nf);
  detail::parallel_for(static_cast<std::size_t>(nf), options.threads, [&](std::size_t f) {
    FibreResult& fr = fibres[f];
    fr.t = static_cast<double>(f) * dt;
    const IntervalSet bands = scanner.bands(fr.t);
    const std::vector<FibreSample> s = scanner.samples(grid, fr.t, bands);
    fr.roots = scanner.roots(s, fr.t, bands);
    std::size_t g = 0;
    fr.grid_det.resize(grid.size());
    for (const FibreSample& sample : s) {
      if (g < grid.size() && sample.lambda == grid[g]) fr.grid_det[g++] = sample.det;
    }
  });

  // Per-lambda statistics and the fixed-lambda cross-fibre test.
  struct Mark {
    double lambda;
    int fibre;  // fibre that produced a root, -1 for grid points
    bool member;
  };
  std::vector<Mark> marks;
  int dead_fibres = 0;
  for (const FibreResult& fr : fibres) {
    bool any = std::any_of(fr.grid_det.begin(), fr.grid_det.end(), [](const auto& d) { return d.has_value(); });
    if (!any) ++dead_fibres;
  }
  if (dead_fibres > 0) {
    result.warnings.push_back("scan coverage: " + std::to_string(dead_fibres) + " of " +
                              std::to_string(nf) + " fibres invalid for every lambda in the window");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double min_abs = kInf;
    int valid = 0;
    bool member = false;
    for (int f = 0; f < nf; ++f) {
      const auto& d = fibres[f].grid_det[k];
      if (!d) continue;
      ++valid;
      min_abs = std::min(min_abs, std::abs(*d));
      if (std::abs(*d) < options.det_threshold) member = true;
      const auto& next = fibres[(f + 1) % nf].grid_det[k];
      const int sa = real_sign(d);
      const int sb = real_sign(next);
      if (sa != 0 && sb != 0 && sa != sb) member = true;
    }
    result.scan.rows.push_back(
        {grid[k], valid > 0 ? min_abs : std::numeric_limits<double>::quiet_NaN(),
         static_cast<double>(valid) / nf});
    marks.push_back({grid[k], -1, member});
  }
  for (int f = 0; f < nf; ++f) {
    for (double r : fibres[f].roots) marks.push_back({r, f, true});
  }
  std::stable_sort(marks.begin(), marks.end(),
                   [](const Mark& a, const Mark& b) { return a.lambda < b.lambda; });

  struct Piece {
    Interval span;
    int low_fibre;
    int high_fibre;
  };
  std::vector<Piece> pieces;
  // chains of members not interrupted by a non-member grid point
  for (std::size_t k = 0; k < marks.size(); ++k) {
    if (!marks[k].member) continue;
    Piece p{{marks[k].lambda, marks[k].lambda}, marks[k].fibre, marks[k].fibre};
    while (k + 1 < marks.size() && marks[k + 1].member) {
      ++k;
      p.span.hi = marks[k].lambda;
      p.high_fibre = marks[k].fibre;
    }
    pieces.push_back(p);
  }
  // links between roots of neighbouring fibres, confirmed on the fibre halfway between
  const double step = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
  for (int f = 0; f < nf; ++f) {
    const int g = (f + 1) % nf;
    for (double r : fibres[f].roots) {
      double nearest = kInf;
      for (double q : fibres[g].roots) {
        if (std::abs(q - r) < std::abs(nearest - r)) nearest = q;
      }
      if (!std::isfinite(nearest)) continue;
      const double lo = std::min(r, nearest);
      const double hi = std::max(r, nearest);
      const double pad = 0.5 * (hi - lo) + step;
      const auto mid = scanner.roots_in(fibres[f].t + 0.5 * dt, lo - pad, hi + pad, 9);
      if (mid.empty()) continue;
      pieces.push_back({{lo, hi}, r <= nearest ? f : g, r <= nearest ? g : f});
    }
  }

  std::vector<Interval> spans;
  for (const Piece& p : pieces) spans.push_back(p.span);
  IntervalSet merged(spans);

  if (options.refine) {
    // Push each end to the extremum of the root curve near the fibre that produced it.
    std::vector<Interval> refined;
    for (const Interval& iv : merged.intervals()) {
      Interval out = iv;
      for (const Piece& p : pieces) {
        for (int side = 0; side < 2; ++side) {
          const bool lower = side == 0;
          const double end = lower ? p.span.lo : p.span.hi;
          const int f = lower ? p.low_fibre : p.high_fibre;
          if (f < 0 || end != (lower ? iv.lo : iv.hi)) continue;
          const double centre = fibres[f].t;
          const double width = 4.0 * step;
          const auto objective = [&](double t) {
            const auto r = scanner.roots_in(t, end - width, end + width, 9);
            if (r.empty()) return 1e300;
            return lower ? *std::min_element(r.begin(), r.end())
                         : -*std::max_element(r.begin(), r.end());
          };
          const auto best = minimise(objective, centre - dt, centre + dt);
          if (best.second < 1e299) {
            if (lower) out.lo = std::min(out.lo, best.second);
            else out.hi = std::max(out.hi, -best.second);
          }
        }
      }
      refined.push_back(out);
    }
    merged = IntervalSet(std::move(refined));
  }
  result.set = merged;
  return result;
}

double fredholm_statistic(const SpectralProblem& problem, double lambda, int order, bool dense,
                          int* multiplicity, double multiplicity_threshold) {
  const QuadratureGrid grid = QuadratureGrid::gauss_legendre(order);
  const NodalFactors nodal = NodalFactors::build(problem.at(lambda), grid);
  if (!nodal.complete) return std::numeric_limits<double>::quiet_NaN();
  const FredholmSystem sys = FredholmSystem::build(nodal, dense);
  if (multiplicity) *multiplicity = sys.small_singular_values(multiplicity_threshold);
  return sys.smallest_singular_value();
}

namespace {

// Golden-section search for the minimum of the Fredholm statistic on [a, b].
std::pair<double, double> golden_minimum(const std::function<double(double)>& f, double a, double b,
                                         double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    if (!(b - a > 0.0)) break;
  }
  return fc < fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

}  // namespace

Sigma3Result sigma3(const SpectralProblem& problem, const IntervalSet& continuous,
                    const Sigma3Options& options) {
  Sigma3Result result;
  result.scan.component = 3;
  result.scan.statistic = "smallest_singular_value";
  if (options.windows.empty()) {
    result.windows = continuous.complement_within(options.window.lo, options.window.hi, options.margin);
  } else {
    for (const Interval& w : options.windows) {
      for (const Interval& c : continuous.intervals()) {
        if (w.hi >= c.lo - options.margin && w.lo <= c.hi + options.margin) {
          std::ostringstream msg;
          msg << "sigma3 scan window [" << w.lo << ", " << w.hi
              << "] touches the margin around the continuous spectrum";
          throw std::invalid_argument(msg.str());
        }
      }
    }
    result.windows = IntervalSet(options.windows);
  }
  const double span = options.window.hi - options.window.lo;
  const double h = span / std::max(options.lambda_points - 1, 1);

  const auto stat = [&](double l, int order) {
    const double s = fredholm_statistic(problem, l, order, options.dense);
    return std::isnan(s) ? kInf : s;
  };

  for (const Interval& w : result.windows.intervals()) {
    const int n = std::max(5, static_cast<int>(std::ceil(w.length() / h)) + 1);
    const std::vector<double> lambdas = linspace(w.lo, w.hi, n);
    std::vector<double> values(lambdas.size());
    detail::parallel_for(lambdas.size(), options.threads, [&](std::size_t k) {
      values[k] = fredholm_statistic(problem, lambdas[k], options.nystrom_order, options.dense);
    });
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      result.scan.rows.push_back({lambdas[k], values[k], std::isnan(values[k]) ? 0.0 : 1.0});
    }
    for (std::size_t k = 1; k + 1 < lambdas.size(); ++k) {
      if (std::isnan(values[k]) || !(values[k] <= values[k - 1]) || !(values[k] <= values[k + 1])) {
        continue;
      }
      // a flat statistic (no kernel at all) has no dip to refine
      if (!(values[k] < values[k - 1]) && !(values[k] < values[k + 1])) continue;
      const auto [root, residual] = golden_minimum(
          [&](double l) { return stat(l, options.nystrom_order); }, lambdas[k - 1], lambdas[k + 1],
          options.refine_tolerance);
      if (!(residual < options.threshold)) continue;
      DiscreteEigenvalue ev;
      ev.lambda = root;
      fredholm_statistic(problem, root, options.nystrom_order, options.dense, &ev.multiplicity,
                         options.threshold);
      ev.multiplicity = std::max(ev.multiplicity, 1);
      ev.residual = residual;
      if (options.validate) {
        const double lo = std::max(w.lo, root - (lambdas[k + 1] - lambdas[k - 1]));
        const double hi = std::min(w.hi, root + (lambdas[k + 1] - lambdas[k - 1]));
        const auto fine = golden_minimum([&](double l) { return stat(l, 2 * options.nystrom_order); },
                                         lo, hi, options.refine_tolerance);
        ev.validation_shift = std::abs(fine.first - root);
        ev.validated = fine.second < options.threshold && ev.validation_shift <= options.validation_shift;
        if (!ev.validated) {
          std::ostringstream msg;
          msg.precision(12);
          msg << "sigma3 root " << root << " not confirmed at Nystrom order "
              << 2 * options.nystrom_order << " (shift " << ev.validation_shift << ")";
          result.warnings.push_back(msg.str());
        }
      }
      result.eigenvalues.push_back(ev);
    }
  }
  std::stable_sort(result.scan.rows.begin(), result.scan.rows.end(),
                   [](const ScanRow& a, const ScanRow& b) { return a.lambda < b.lambda; });
  return result;
}

SpectrumReport compute_spectrum(const SpectralProblem& problem, const SpectrumOptions& options) {
  SpectrumReport report;
  ComponentResult s0 = sigma0(problem, options.sigma0);
  ComponentResult s1 = sigma12(problem, Axis::first, options.sigma12);
  ComponentResult s2 = sigma12(problem, Axis::second, options.sigma12);
  report.sigma0 = s0.set;
  report.sigma1 = s1.set;
  report.sigma2 = s2.set;
  report.scans[0] = std::move(s0.scan);
  report.scans[1] = std::move(s1.scan);
  report.scans[2] = std::move(s2.scan);
  for (auto* w : {&s0.warnings, &s1.warnings, &s2.warnings}) {
    report.warnings.insert(report.warnings.end(), w->begin(), w->end());
  }
  report.scans[3].component = 3;
  report.scans[3].statistic = "smallest_singular_value";
  if (options.compute_sigma3) {
    Sigma3Result s3 = sigma3(problem, report.continuous(), options.sigma3);
    report.sigma3 = std::move(s3.eigenvalues);
    report.scans[3] = std::move(s3.scan);
    report.warnings.insert(report.warnings.end(), s3.warnings.begin(), s3.warnings.end());
  }
  report.metadata["sigma0_path"] = s0.hermitian_path ? "hermitian" : "generic";
  report.metadata["sigma0_k_points"] = std::to_string(options.sigma0.k_points);
  report.metadata["sigma12_lambda_points"] = std::to_string(options.sigma12.lambda_points);
  report.metadata["sigma12_fibres"] = std::to_string(options.sigma12.fibres);
  report.metadata["sigma3_lambda_points"] = std::to_string(options.sigma3.lambda_points);
  report.metadata["nystrom_order"] = std::to_string(options.sigma3.nystrom_order);
  return report;
}

}  // namespace crossdefect
