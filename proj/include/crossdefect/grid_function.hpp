#pragma once

#include <functional>
#include <memory>
#include <random>

#include "crossdefect/quadrature.hpp"
#include "crossdefect/types.hpp"

namespace crossdefect {

/// Tensor product of two rules on [0,1]. Node (i, j) has flat index i * n2 + j.
class QuadratureGrid {
 public:
  QuadratureGrid(QuadratureRule axis1, QuadratureRule axis2);

  static QuadratureGrid gauss_legendre(int n1, int n2);
  static QuadratureGrid gauss_legendre(int n) { return gauss_legendre(n, n); }

  [[nodiscard]] const QuadratureRule& axis1() const { return data_->axis1; }
  [[nodiscard]] const QuadratureRule& axis2() const { return data_->axis2; }
  [[nodiscard]] const QuadratureRule& axis(Axis a) const {
    return a == Axis::first ? axis1() : axis2();
  }
  [[nodiscard]] Index n1() const { return axis1().size(); }
  [[nodiscard]] Index n2() const { return axis2().size(); }
  [[nodiscard]] Index size() const { return n1() * n2(); }
  [[nodiscard]] Index flat(Index i, Index j) const { return i * n2() + j; }
  [[nodiscard]] Point node(Index i, Index j) const {
    return {axis1().nodes[i], axis2().nodes[j]};
  }
  [[nodiscard]] Point node(Index flat_index) const {
    return node(flat_index / n2(), flat_index % n2());
  }
  [[nodiscard]] double weight(Index flat_index) const {
    return axis1().weights[flat_index / n2()] * axis2().weights[flat_index % n2()];
  }

  friend bool operator==(const QuadratureGrid& a, const QuadratureGrid& b);

 private:
  struct Data {
    QuadratureRule axis1;
    QuadratureRule axis2;
  };
  std::shared_ptr<const Data> data_;
};

/// A C^M-valued function sampled on a quadrature grid: column n of values() is the
/// vector at flat node n.
class GridFunction {
 public:
  GridFunction(QuadratureGrid grid, Index dim);
  GridFunction(QuadratureGrid grid, Matrix values);

  static GridFunction from_function(const QuadratureGrid& grid, Index dim,
                                    const std::function<Vector(const Point&)>& f);
  /// Entries with independent standard complex normal real and imaginary parts.
  static GridFunction random(const QuadratureGrid& grid, Index dim, std::mt19937_64& rng);

  [[nodiscard]] const QuadratureGrid& grid() const { return grid_; }
  [[nodiscard]] Index dim() const { return values_.rows(); }
  [[nodiscard]] const Matrix& values() const { return values_; }
  [[nodiscard]] Matrix& values() { return values_; }
  [[nodiscard]] auto at(Index i, Index j) const { return values_.col(grid_.flat(i, j)); }

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(Complex s, GridFunction a) {
    a.values_ *= s;
    return a;
  }

 private:
  QuadratureGrid grid_;
  Matrix values_;
};

/// Quadrature L2 norm sqrt(sum_n w_n |u_n|^2).
double grid_norm(const GridFunction& u);

/// Weighted average over one axis, broadcast back along that axis.
GridFunction partial_average(const GridFunction& u, Axis axis);
GridFunction partial_average(const GridFunction& u, int axis);

}  // namespace crossdefect
