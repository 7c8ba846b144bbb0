#include "crossdefect/grid_function.hpp"

#include <cmath>
#include <numeric>

namespace crossdefect {

namespace {

void validate_rule(const QuadratureRule& rule, const char* name) {
  if (rule.nodes.empty() || rule.nodes.size() != rule.weights.size()) {
    throw std::invalid_argument(std::string(name) + ": nodes and weights must be non-empty and match");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    if (!(rule.weights[i] > 0.0)) throw std::invalid_argument(std::string(name) + ": weights must be positive");
    if (rule.nodes[i] < 0.0 || rule.nodes[i] > 1.0) {
      throw std::invalid_argument(std::string(name) + ": nodes must lie in [0,1]");
    }
    sum += rule.weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument(std::string(name) + ": weights must sum to 1");
}

}  // namespace

QuadratureGrid::QuadratureGrid(QuadratureRule axis1, QuadratureRule axis2) {
  validate_rule(axis1, "axis 1");
  validate_rule(axis2, "axis 2");
  data_ = std::make_shared<const Data>(Data{std::move(axis1), std::move(axis2)});
}

QuadratureGrid QuadratureGrid::gauss_legendre(int n1, int n2) {
  return {crossdefect::gauss_legendre(n1), crossdefect::gauss_legendre(n2)};
}

bool operator==(const QuadratureGrid& a, const QuadratureGrid& b) {
  if (a.data_ == b.data_) return true;
  return a.axis1().nodes == b.axis1().nodes && a.axis1().weights == b.axis1().weights &&
         a.axis2().nodes == b.axis2().nodes && a.axis2().weights == b.axis2().weights;
}

GridFunction::GridFunction(QuadratureGrid grid, Index dim)
    : grid_(std::move(grid)), values_(Matrix::Zero(dim, grid_.size())) {}

GridFunction::GridFunction(QuadratureGrid grid, Matrix values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.cols() != grid_.size()) {
    throw DimensionError("grid function value array does not match the grid size");
  }
}

GridFunction GridFunction::from_function(const QuadratureGrid& grid, Index dim,
                                         const std::function<Vector(const Point&)>& f) {
  GridFunction u(grid, dim);
  for (Index n = 0; n < grid.size(); ++n) {
    Vector v = f(grid.node(n));
    if (v.size() != dim) throw DimensionError("from_function: value has wrong length");
    u.values_.col(n) = v;
  }
  return u;
}

GridFunction GridFunction::random(const QuadratureGrid& grid, Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  GridFunction u(grid, dim);
  for (Index n = 0; n < grid.size(); ++n) {
    for (Index r = 0; r < dim; ++r) u.values_(r, n) = Complex(normal(rng), normal(rng));
  }
  return u;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  if (!(grid_ == other.grid_) || dim() != other.dim()) throw DimensionError("grid function sum: mismatch");
  values_ += other.values_;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  if (!(grid_ == other.grid_) || dim() != other.dim()) throw DimensionError("grid function difference: mismatch");
  values_ -= other.values_;
  return *this;
}

double grid_norm(const GridFunction& u) {
  double sum = 0.0;
  for (Index n = 0; n < u.grid().size(); ++n) sum += u.grid().weight(n) * u.values().col(n).squaredNorm();
  return std::sqrt(sum);
}

GridFunction partial_average(const GridFunction& u, Axis axis) {
  const QuadratureGrid& g = u.grid();
  const Index n1 = g.n1();
  const Index n2 = g.n2();
  GridFunction out(g, u.dim());
  if (axis == Axis::first) {
    for (Index j = 0; j < n2; ++j) {
      Vector avg = Vector::Zero(u.dim());
      for (Index i = 0; i < n1; ++i) avg += g.axis1().weights[i] * u.values().col(g.flat(i, j));
      for (Index i = 0; i < n1; ++i) out.values().col(g.flat(i, j)) = avg;
    }
  } else {
    for (Index i = 0; i < n1; ++i) {
      Vector avg = Vector::Zero(u.dim());
      for (Index j = 0; j < n2; ++j) avg += g.axis2().weights[j] * u.values().col(g.flat(i, j));
      for (Index j = 0; j < n2; ++j) out.values().col(g.flat(i, j)) = avg;
    }
  }
  return out;
}

GridFunction partial_average(const GridFunction& u, int axis) {
  return partial_average(u, axis_from_int(axis));
}

}  // namespace crossdefect
