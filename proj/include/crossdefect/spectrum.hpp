#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossdefect/defect_operator.hpp"
#include "crossdefect/interval_set.hpp"
#include "crossdefect/quadrature.hpp"

namespace crossdefect {

/// A one-parameter family lambda -> operator whose spectrum is sought, i.e. the values of
/// lambda where the family member is not invertible.
struct SpectralProblem {
  std::function<DefectOperator(double lambda)> family;
  /// When set, A0 of the family member at lambda is shift_base - lambda I. Enables the
  /// band-function paths for sigma0 and the fibre-band validity masks.
  std::optional<MatrixFunction> shift_base;

  /// The plain substitution A0 -> A0 - lambda I.
  static SpectralProblem shifted(const DefectOperator& op);
  /// All blocks may depend on lambda.
  static SpectralProblem extended(std::function<DefectOperator(double)> family,
                                  std::optional<MatrixFunction> shift_base = std::nullopt);

  [[nodiscard]] DefectOperator at(double lambda) const { return family(lambda); }
};

struct ScanRow {
  double lambda = 0.0;
  double statistic = 0.0;
  double validity = 1.0;
};

/// Per-lambda detection data of one component, rows sorted by lambda.
struct ScanTable {
  int component = 0;
  std::string statistic;
  std::vector<ScanRow> rows;
};

struct ComponentResult {
  IntervalSet set;
  ScanTable scan;
  std::vector<std::string> warnings;
  bool hermitian_path = false;
};

struct Sigma0Options {
  Interval window{-1.0, 20.0};
  int k_points = 201;       // uniform points per axis, both ends included
  int lambda_points = 2000;  // scan table (and generic path) resolution
  double threshold = 1e-6;
  int threads = 1;
};

ComponentResult sigma0(const SpectralProblem& problem, const Sigma0Options& options = {});

struct Sigma12Options {
  Interval window{-1.0, 20.0};
  int lambda_points = 2000;
  int fibres = 64;
  double det_threshold = 1e-6;
  double edge_offset = 1e-12;  // relative distance from a fibre band edge
  bool refine = true;
  AdaptiveOptions quadrature{1e-10, 1e-14, 8, 4000};
  int threads = 1;
};

/// Guided component: lambda with det E_axis(t) = 0 on some valid fibre t. Reads only A0 and
/// the blocks of the requested axis.
ComponentResult sigma12(const SpectralProblem& problem, Axis axis, const Sigma12Options& options = {});

/// Band edges of the fibre at coordinate t along `axis` (Hermitian shift base only).
IntervalSet fibre_bands(const MatrixFunction& base, Axis axis, double t, int samples = 256);

struct Sigma3Options {
  Interval window{-1.0, 20.0};
  std::vector<Interval> windows;  // explicit scan windows; derived from the margin when empty
  double margin = 1e-3;
  int lambda_points = 200;
  int nystrom_order = 64;
  double threshold = 1e-6;
  double refine_tolerance = 1e-13;
  bool validate = true;
  double validation_shift = 1e-4;
  bool dense = false;
  int threads = 1;
};

struct DiscreteEigenvalue {
  double lambda = 0.0;
  double residual = 0.0;  // smallest singular value of I + K1 at lambda
  int multiplicity = 0;
  double validation_shift = 0.0;  // |root at doubled Nystrom order - root|
  bool validated = false;
};

struct Sigma3Result {
  std::vector<DiscreteEigenvalue> eigenvalues;
  IntervalSet windows;
  ScanTable scan;
  std::vector<std::string> warnings;
};

/// Smallest singular value of I + K1(lambda) on a Gauss-Legendre grid of the given order;
/// NaN where some inverse of the derivation is missing.
double fredholm_statistic(const SpectralProblem& problem, double lambda, int order, bool dense = false,
                          int* multiplicity = nullptr, double multiplicity_threshold = 1e-6);

/// Throws std::invalid_argument when an explicit window meets the margin around `continuous`.
Sigma3Result sigma3(const SpectralProblem& problem, const IntervalSet& continuous,
                    const Sigma3Options& options = {});

struct SpectrumOptions {
  Sigma0Options sigma0;
  Sigma12Options sigma12;
  Sigma3Options sigma3;
  bool compute_sigma3 = true;
};

struct SpectrumReport {
  IntervalSet sigma0;
  IntervalSet sigma1;
  IntervalSet sigma2;
  std::vector<DiscreteEigenvalue> sigma3;
  std::array<ScanTable, 4> scans;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> metadata;

  [[nodiscard]] IntervalSet continuous() const;
};

SpectrumReport compute_spectrum(const SpectralProblem& problem, const SpectrumOptions& options = {});

}  // namespace crossdefect
