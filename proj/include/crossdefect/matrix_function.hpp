#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "crossdefect/quadrature.hpp"
#include "crossdefect/types.hpp"

namespace crossdefect {

/// Matrix values sampled on a tensor Gauss-Legendre grid. values[i * n2 + j] holds the
/// sample at (nodes1[i], nodes2[j]).
struct SampledValues {
  QuadratureRule axis1;
  QuadratureRule axis2;
  Index rows = 0;
  Index cols = 0;
  std::vector<Matrix> values;
};

/// A continuous rows x cols matrix-valued function on the torus [0,1]^2.
///
/// Immutable value type: copies share the underlying evaluator. Closed-form functions
/// wrap a callable; sampled functions interpolate tensor Gauss-Legendre samples.
class MatrixFunction {
 public:
  using Evaluator = std::function<Matrix(double k1, double k2)>;

  MatrixFunction() = default;
  MatrixFunction(Index rows, Index cols, Evaluator evaluator);

  static MatrixFunction constant(const Matrix& value);
  static MatrixFunction zero(Index rows, Index cols);
  static MatrixFunction identity(Index size);
  static MatrixFunction scalar(Index size, std::function<Complex(double, double)> f);
  /// Barycentric Lagrange interpolation of tensor samples, periodic across the seam.
  static MatrixFunction sampled(SampledValues samples);

  [[nodiscard]] Index rows() const { return rows_; }
  [[nodiscard]] Index cols() const { return cols_; }
  [[nodiscard]] bool empty() const { return rows_ == 0 || cols_ == 0; }
  /// True when the function is known to vanish identically (zero() or a product with it).
  [[nodiscard]] bool is_zero() const { return kind_ == Kind::zero || empty(); }
  [[nodiscard]] bool is_constant() const { return kind_ != Kind::general; }
  [[nodiscard]] bool is_sampled() const { return sampled_; }

  [[nodiscard]] Matrix operator()(double k1, double k2) const;
  [[nodiscard]] Matrix operator()(const Point& k) const { return (*this)(k.k1, k.k2); }

  [[nodiscard]] MatrixFunction adjoint() const;

  friend MatrixFunction operator*(const MatrixFunction& a, const MatrixFunction& b);
  friend MatrixFunction operator+(const MatrixFunction& a, const MatrixFunction& b);
  friend MatrixFunction operator-(const MatrixFunction& a, const MatrixFunction& b);
  friend MatrixFunction operator*(Complex s, const MatrixFunction& a);

 private:
  enum class Kind { general, constant, zero };

  Index rows_ = 0;
  Index cols_ = 0;
  Kind kind_ = Kind::zero;
  bool sampled_ = false;
  Matrix constant_value_;
  std::shared_ptr<const Evaluator> evaluator_;
};

/// [a | b]: same rows, columns concatenated.
MatrixFunction hstack(const MatrixFunction& a, const MatrixFunction& b);
/// [a ; b]: same columns, rows concatenated.
MatrixFunction vstack(const MatrixFunction& a, const MatrixFunction& b);

/// Pointwise inverse; throws NumericalError where the value is singular.
MatrixFunction pointwise_inverse(const MatrixFunction& a);

/// Largest deviation |f(0,k) - f(1,k)|, |f(k,0) - f(k,1)| over `samples` probe points.
double periodicity_defect(const MatrixFunction& f, int samples = 33);

/// Evaluate at every node of a tensor grid (node index i * n2 + j).
std::vector<Matrix> sample_on_grid(const MatrixFunction& f, const QuadratureRule& axis1,
                                   const QuadratureRule& axis2);

}  // namespace crossdefect
