#pragma once

#include "crossdefect/compact_kernel.hpp"
#include "crossdefect/grid_function.hpp"
#include "crossdefect/matrix_function.hpp"

namespace crossdefect {

/// Canonical form  A0 u + A1 <B1 u>_1 + A2 <B2 u>_2 + K u  of an operator on L2([0,1]^2, C^M).
///
/// <.>_1 integrates out k1 and <.>_2 integrates out k2. The channel counts M1, M2 may be
/// zero, in which case the corresponding term is absent.
class DefectOperator {
 public:
  DefectOperator(MatrixFunction a0, MatrixFunction a1, MatrixFunction b1, MatrixFunction a2,
                 MatrixFunction b2, CompactKernel kernel);

  static DefectOperator multiplication(MatrixFunction a0);
  static DefectOperator identity(Index m) { return multiplication(MatrixFunction::identity(m)); }
  static DefectOperator zero(Index m) { return multiplication(MatrixFunction::zero(m, m)); }
  /// I + A <B .>_axis
  static DefectOperator identity_plus_axis(Axis axis, MatrixFunction a, MatrixFunction b);
  /// I + K
  static DefectOperator identity_plus_kernel(CompactKernel kernel);

  [[nodiscard]] Index M() const { return a0_.rows(); }
  [[nodiscard]] Index M1() const { return b1_.rows(); }
  [[nodiscard]] Index M2() const { return b2_.rows(); }
  [[nodiscard]] Index channels(Axis axis) const { return axis == Axis::first ? M1() : M2(); }

  [[nodiscard]] const MatrixFunction& a0() const { return a0_; }
  [[nodiscard]] const MatrixFunction& a1() const { return a1_; }
  [[nodiscard]] const MatrixFunction& b1() const { return b1_; }
  [[nodiscard]] const MatrixFunction& a2() const { return a2_; }
  [[nodiscard]] const MatrixFunction& b2() const { return b2_; }
  [[nodiscard]] const MatrixFunction& a(Axis axis) const { return axis == Axis::first ? a1_ : a2_; }
  [[nodiscard]] const MatrixFunction& b(Axis axis) const { return axis == Axis::first ? b1_ : b2_; }
  [[nodiscard]] const CompactKernel& kernel() const { return kernel_; }

  [[nodiscard]] DefectOperator with_a0(MatrixFunction a0) const;
  [[nodiscard]] DefectOperator with_kernel(CompactKernel kernel) const;
  /// Same operator with A0 replaced by A0 - lambda I.
  [[nodiscard]] DefectOperator shifted(Complex lambda) const;

 private:
  MatrixFunction a0_;
  MatrixFunction a1_;
  MatrixFunction b1_;
  MatrixFunction a2_;
  MatrixFunction b2_;
  CompactKernel kernel_;
};

/// A DefectOperator sampled on a fixed grid: node values of every block plus the
/// weighted Nystrom matrix of the opaque kernel terms. Build once, apply many times.
class DiscreteOperator {
 public:
  DiscreteOperator(const DefectOperator& op, QuadratureGrid grid);

  [[nodiscard]] const QuadratureGrid& grid() const { return grid_; }
  [[nodiscard]] Index M() const { return m_; }
  [[nodiscard]] GridFunction apply(const GridFunction& u) const;

 private:
  QuadratureGrid grid_;
  Index m_;
  Index m1_;
  Index m2_;
  std::vector<Matrix> a0_, a1_, b1_, a2_, b2_;
  Matrix kernel_matrix_;  // empty when there are no opaque kernel terms
  std::vector<std::pair<std::vector<Matrix>, std::vector<Matrix>>> rank_one_;
};

/// Nystrom application of K on the grid of u.
GridFunction apply_kernel(const CompactKernel& kernel, const GridFunction& u);

/// A0 u + A1 <B1 u>_1 + A2 <B2 u>_2 + K u with every integral taken by the grid rule of u.
GridFunction apply(const DefectOperator& op, const GridFunction& u);

/// Sum in canonical form; channels of `a` come first, then those of `b`.
DefectOperator add(const DefectOperator& a, const DefectOperator& b);

/// Composition a o b in canonical form. Inner one-dimensional contractions use the axis
/// rules of `grid`, kernel compositions the full tensor rule, so that
/// apply(multiply(a, b, g), u) == apply(a, apply(b, u)) at the nodes of g.
DefectOperator multiply(const DefectOperator& a, const DefectOperator& b, const QuadratureGrid& grid);

/// Kernel of the compact operator a o K.
CompactKernel compose_left(const DefectOperator& a, const CompactKernel& kernel,
                           const QuadratureGrid& grid);

/// Kernel of K o b, excluding the kernel part of b (use compose_left for that).
CompactKernel compose_right(const CompactKernel& kernel, const DefectOperator& b,
                            const QuadratureGrid& grid);

/// Fibre contraction sum_i w_i F(x_i, k2) G(x_i, k2) (axis 1) or the k2 analogue (axis 2).
MatrixFunction contract_axis(Axis axis, const MatrixFunction& f, const MatrixFunction& g,
                             const QuadratureRule& rule);

}  // namespace crossdefect
