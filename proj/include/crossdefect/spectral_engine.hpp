#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "crossdefect/defect_operator.hpp"
#include "crossdefect/fredholm.hpp"
#include "crossdefect/quadrature.hpp"

namespace crossdefect {

/// shift: A0 is replaced by A0 - lambda I. extended: the operator handed to the engine
/// already depends on lambda in all of its blocks and is used as is.
enum class SpectralMode { shift, extended };

struct SpectralQuery {
  Complex lambda = 0.0;
  SpectralMode mode = SpectralMode::shift;
};

DefectOperator effective_operator(const DefectOperator& op, const SpectralQuery& q);

/// Matrix function of one fibre coordinate (k2 for E1, k1 for E2). A default constructed
/// value has size zero and stands for the absent defect term.
class FibreFunction {
 public:
  using Evaluator = std::function<Matrix(double)>;

  FibreFunction() = default;
  FibreFunction(Index size, Evaluator evaluator);

  [[nodiscard]] Index size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }
  /// Throws NumericalError when the fibre is not valid at t.
  [[nodiscard]] Matrix operator()(double t) const;

 private:
  Index size_ = 0;
  std::shared_ptr<const Evaluator> evaluator_;
};

struct DeriveOptions {
  AdaptiveOptions fibre_quadrature{1e-10, 1e-14, 8, 4000};
  /// relative singular-value threshold for the pointwise inverses
  double singular_tolerance = 1e-12;
  bool assemble_fredholm = true;
  bool dense_fredholm = false;
};

/// I + <B C>_axis at fibre coordinate t by adaptive quadrature. Returns nullopt where A0
/// is singular on the fibre or the integral does not converge. With `probe_fibre` the
/// fibre is first sampled for a vanishing or sign-changing A0.
std::optional<Matrix> fibre_matrix_adaptive(const DefectOperator& op, Axis axis, double t,
                                             const AdaptiveOptions& options = {},
                                             bool probe_fibre = true);

/// Same with the fixed axis rule; this is the version consistent with apply() on a grid.
std::optional<Matrix> fibre_matrix_rule(const DefectOperator& op, Axis axis, double t,
                                        const QuadratureRule& rule);

/// Derived objects at one spectral point.
///
/// e1/e2 are computed by adaptive quadrature and approximate the exact fibre matrices;
/// e1_grid/e2_grid, the D kernels, the node data and the Fredholm system all use the
/// axis rules of `grid`, which makes the inverse exact at the nodes.
struct SpectralCache {
  SpectralCache(DefectOperator effective, QuadratureGrid g, NodalFactors n)
      : op(std::move(effective)), grid(std::move(g)), nodal(std::move(n)) {}

  DefectOperator op;  // operator after the spectral substitution
  QuadratureGrid grid;
  MatrixFunction c0, e0, c1, c2;
  FibreFunction e1, e2;
  FibreFunction e1_grid, e2_grid;
  CompactKernel d1, d2;
  NodalFactors nodal;
  std::optional<FredholmSystem> fredholm;  // present when every inverse exists
};

SpectralCache derive(const DefectOperator& op, const SpectralQuery& q, const QuadratureGrid& grid,
                     const DeriveOptions& options = {});

/// Weighted Nystrom matrix W^{1/2} K1 W^{-1/2} on the nodes (size M n1 n2).
Matrix k1_nystrom_matrix(const SpectralCache& cache);

struct InvertibilityOptions {
  double a0_tolerance = 1e-8;        // relative smallest singular value of A0 - lambda
  double fibre_tolerance = 1e-8;     // relative smallest singular value of E1, E2
  double fredholm_tolerance = 1e-8;  // smallest singular value of I + K1
  DeriveOptions derive;
};

struct InvertibilityVerdict {
  bool invertible = false;
  int failing_condition = -1;  // 0: E0, 1: E1, 2: E2, 3: I + K1
  std::string diagnostic;
  double a0_min_sv = 0.0;
  double e1_min_sv = 1.0;
  double e2_min_sv = 1.0;
  double fredholm_min_sv = 0.0;
  double fredholm_condition = 0.0;
};

InvertibilityVerdict is_invertible(const DefectOperator& op, const SpectralQuery& q,
                                   const QuadratureGrid& grid,
                                   const InvertibilityOptions& options = {});

class NotInvertible : public NumericalError {
 public:
  explicit NotInvertible(InvertibilityVerdict v);
  [[nodiscard]] const InvertibilityVerdict& verdict() const { return verdict_; }

 private:
  InvertibilityVerdict verdict_;
};

class IllConditioned : public NumericalError {
 public:
  IllConditioned(double condition, double limit);
  [[nodiscard]] double condition() const { return condition_; }

 private:
  double condition_;
};

struct InverseOptions {
  double max_condition = 1e12;
  InvertibilityOptions invertibility;
};

/// A^{-1} u = (I - K1 (I + K1)^{-1}) R u on the grid of u.
GridFunction inverse_apply(const DefectOperator& op, const SpectralQuery& q, const GridFunction& u,
                           const InverseOptions& options = {});

/// The same from an existing derivation; checks nothing beyond the conditioning.
GridFunction inverse_apply(const SpectralCache& cache, const GridFunction& u,
                           double max_condition = 1e12);

/// A = (A0 .) o (I + C1 <B1 .>_1) o (I + C2 <B2 .>_2) o (I + K1).
struct Factorization {
  DefectOperator multiplication;
  DefectOperator axis1;
  DefectOperator axis2;
  DefectOperator fredholm;
};

Factorization factorize(const DefectOperator& op, const SpectralQuery& q, const QuadratureGrid& grid,
                        const InvertibilityOptions& options = {});

/// Applies the factors right to left: fredholm first, multiplication last.
GridFunction apply_factors(const Factorization& f, const GridFunction& u);

}  // namespace crossdefect
