#include "crossdefect/matrix_function.hpp"

#include <cmath>

namespace crossdefect {

MatrixFunction::MatrixFunction(Index rows, Index cols, Evaluator evaluator)
    : rows_(rows),
      cols_(cols),
      kind_(Kind::general),
      evaluator_(std::make_shared<const Evaluator>(std::move(evaluator))) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix function size");
}

MatrixFunction MatrixFunction::constant(const Matrix& value) {
  MatrixFunction f;
  f.rows_ = value.rows();
  f.cols_ = value.cols();
  f.kind_ = value.isZero(0.0) ? Kind::zero : Kind::constant;
  f.constant_value_ = value;
  return f;
}

MatrixFunction MatrixFunction::zero(Index rows, Index cols) {
  return constant(Matrix::Zero(rows, cols));
}

MatrixFunction MatrixFunction::identity(Index size) {
  return constant(Matrix::Identity(size, size));
}

MatrixFunction MatrixFunction::scalar(Index size, std::function<Complex(double, double)> f) {
  return MatrixFunction(size, size, [size, f = std::move(f)](double k1, double k2) -> Matrix {
    return f(k1, k2) * Matrix::Identity(size, size);
  });
}

namespace {

// Interpolation weights of one axis at coordinate t (wrapped into [0,1)).
std::vector<double> axis_weights(const QuadratureRule& rule, const std::vector<double>& bary,
                                 double t) {
  const Index n = rule.size();
  std::vector<double> out(n, 0.0);
  t -= std::floor(t);
  const double first = rule.nodes.front();
  const double last = rule.nodes.back();
  if (n == 1) {
    out[0] = 1.0;
    return out;
  }
  if (t < first || t > last) {
    // Linear bridge across the periodic seam between the last node and the first + 1.
    const double span = first + 1.0 - last;
    const double s = t > last ? t - last : t + 1.0 - last;
    const double theta = s / span;
    out[n - 1] = 1.0 - theta;
    out[0] = theta;
    return out;
  }
  double denom = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = t - rule.nodes[i];
    if (d == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      out[i] = 1.0;
      return out;
    }
    out[i] = bary[i] / d;
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

std::vector<double> barycentric_weights(const QuadratureRule& rule) {
  std::vector<double> bary(rule.size());
  for (Index i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i];
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    bary[i] = sign * std::sqrt(x * (1.0 - x) * rule.weights[i]);
  }
  return bary;
}

}  // namespace

MatrixFunction MatrixFunction::sampled(SampledValues samples) {
  const Index n1 = samples.axis1.size();
  const Index n2 = samples.axis2.size();
  if (n1 < 1 || n2 < 1) throw DimensionError("sampled function needs at least one node per axis");
  if (static_cast<Index>(samples.values.size()) != n1 * n2) {
    throw DimensionError("sampled function value count does not match the node grid");
  }
  for (const Matrix& v : samples.values) {
    if (v.rows() != samples.rows || v.cols() != samples.cols) {
      throw DimensionError("sampled function values have inconsistent shape");
    }
    if (!v.allFinite()) throw std::invalid_argument("sampled function values must be finite");
  }
  auto data = std::make_shared<const SampledValues>(std::move(samples));
  auto bary1 = std::make_shared<const std::vector<double>>(barycentric_weights(data->axis1));
  auto bary2 = std::make_shared<const std::vector<double>>(barycentric_weights(data->axis2));
  MatrixFunction f(data->rows, data->cols, [data, bary1, bary2](double k1, double k2) -> Matrix {
    const std::vector<double> w1 = axis_weights(data->axis1, *bary1, k1);
    const std::vector<double> w2 = axis_weights(data->axis2, *bary2, k2);
    const Index m2 = data->axis2.size();
    Matrix out = Matrix::Zero(data->rows, data->cols);
    for (Index i = 0; i < data->axis1.size(); ++i) {
      if (w1[i] == 0.0) continue;
      for (Index j = 0; j < m2; ++j) {
        if (w2[j] == 0.0) continue;
        out += (w1[i] * w2[j]) * data->values[i * m2 + j];
      }
    }
    return out;
  });
  f.sampled_ = true;
  return f;
}

Matrix MatrixFunction::operator()(double k1, double k2) const {
  if (kind_ != Kind::general) {
    return constant_value_.size() == rows_ * cols_ ? constant_value_ : Matrix::Zero(rows_, cols_);
  }
  return (*evaluator_)(k1, k2);
}

MatrixFunction MatrixFunction::adjoint() const {
  if (kind_ != Kind::general) return constant(constant_value_.adjoint());
  auto self = *this;
  return MatrixFunction(cols_, rows_, [self](double k1, double k2) -> Matrix {
    return self(k1, k2).adjoint();
  });
}

MatrixFunction operator*(const MatrixFunction& a, const MatrixFunction& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matrix function product: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  if (a.is_zero() || b.is_zero()) return MatrixFunction::zero(a.rows(), b.cols());
  if (a.is_constant() && b.is_constant()) return MatrixFunction::constant(a(0, 0) * b(0, 0));
  return MatrixFunction(a.rows(), b.cols(), [a, b](double k1, double k2) -> Matrix {
    return a(k1, k2) * b(k1, k2);
  });
}

MatrixFunction operator+(const MatrixFunction& a, const MatrixFunction& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("matrix function sum: shape mismatch");
  }
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_constant() && b.is_constant()) return MatrixFunction::constant(a(0, 0) + b(0, 0));
  return MatrixFunction(a.rows(), a.cols(), [a, b](double k1, double k2) -> Matrix {
    return a(k1, k2) + b(k1, k2);
  });
}

MatrixFunction operator-(const MatrixFunction& a, const MatrixFunction& b) {
  return a + Complex(-1.0) * b;
}

MatrixFunction operator*(Complex s, const MatrixFunction& a) {
  if (a.is_zero() || s == Complex(0.0)) return MatrixFunction::zero(a.rows(), a.cols());
  if (a.is_constant()) return MatrixFunction::constant(s * a(0, 0));
  return MatrixFunction(a.rows(), a.cols(), [s, a](double k1, double k2) -> Matrix {
    return s * a(k1, k2);
  });
}

MatrixFunction hstack(const MatrixFunction& a, const MatrixFunction& b) {
  if (a.rows() != b.rows()) throw DimensionError("hstack: row mismatch");
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.is_constant() && b.is_constant()) {
    Matrix m(a.rows(), a.cols() + b.cols());
    m << a(0, 0), b(0, 0);
    return MatrixFunction::constant(m);
  }
  return MatrixFunction(a.rows(), a.cols() + b.cols(), [a, b](double k1, double k2) -> Matrix {
    Matrix m(a.rows(), a.cols() + b.cols());
    m << a(k1, k2), b(k1, k2);
    return m;
  });
}

MatrixFunction vstack(const MatrixFunction& a, const MatrixFunction& b) {
  if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.is_constant() && b.is_constant()) {
    Matrix m(a.rows() + b.rows(), a.cols());
    m << a(0, 0), b(0, 0);
    return MatrixFunction::constant(m);
  }
  return MatrixFunction(a.rows() + b.rows(), a.cols(), [a, b](double k1, double k2) -> Matrix {
    Matrix m(a.rows() + b.rows(), a.cols());
    m << a(k1, k2), b(k1, k2);
    return m;
  });
}

MatrixFunction pointwise_inverse(const MatrixFunction& a) {
  if (a.rows() != a.cols()) throw DimensionError("pointwise_inverse: matrix is not square");
  return MatrixFunction(a.rows(), a.cols(), [a](double k1, double k2) -> Matrix {
    const Matrix v = a(k1, k2);
    Eigen::FullPivLU<Matrix> lu(v);
    if (!lu.isInvertible()) throw NumericalError("pointwise_inverse: singular value");
    return lu.inverse();
  });
}

double periodicity_defect(const MatrixFunction& f, int samples) {
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = (s + 0.5) / samples;
    worst = std::max(worst, (f(0.0, t) - f(1.0, t)).norm());
    worst = std::max(worst, (f(t, 0.0) - f(t, 1.0)).norm());
  }
  worst = std::max(worst, (f(0.0, 0.0) - f(1.0, 1.0)).norm());
  return worst;
}

std::vector<Matrix> sample_on_grid(const MatrixFunction& f, const QuadratureRule& axis1,
                                   const QuadratureRule& axis2) {
  std::vector<Matrix> out;
  out.reserve(axis1.size() * axis2.size());
  for (double x : axis1.nodes) {
    for (double y : axis2.nodes) out.push_back(f(x, y));
  }
  return out;
}

}  // namespace crossdefect
