#pragma once

#include <optional>
#include <vector>

#include "crossdefect/defect_operator.hpp"

namespace crossdefect {

/// Node values of everything the discretised inverse needs: C0, C1, C2, B1, B2 at the grid
/// nodes, the fibre matrices E1(y_j), E2(x_i) built with the grid rule, and the kernel.
///
/// Building the E matrices with the same axis rule that apply() uses makes the discrete
/// (I - C1 E1^{-1} <B1 .>_1) an exact inverse of the discrete (I + C1 <B1 .>_1) at the nodes.
struct NodalFactors {
  explicit NodalFactors(QuadratureGrid g) : grid(std::move(g)) {}

  QuadratureGrid grid;
  Index m = 0;
  Index m1 = 0;  // zero when the axis-1 term is absent
  Index m2 = 0;
  std::vector<Matrix> c0, c1, c2, b1, b2;  // per flat node
  std::vector<Matrix> e1, e2;              // E1 per axis-2 node j, E2 per axis-1 node i
  std::vector<Matrix> e1_inv, e2_inv;

  Matrix kernel_matrix;  // weighted opaque kernel terms, empty when there are none
  std::vector<Matrix> rank_f;  // M x N node values of each separable term
  std::vector<Matrix> rank_g;  // M x N, column n is g(x_n) transposed

  // smallest singular value of A0 over all nodes, of E1 over j, of E2 over i
  double a0_min_sv = 0.0;
  double e1_min_sv = 1.0;
  double e2_min_sv = 1.0;
  bool a0_valid = false;
  std::vector<bool> e1_valid;  // fibre k2 = y_j usable
  std::vector<bool> e2_valid;
  bool complete = false;  // every inverse exists, so R and K1 are defined

  /// Samples `op` (already shifted) on `grid`. Never throws on singular data; validity is
  /// recorded with relative singular-value threshold `tolerance`.
  static NodalFactors build(const DefectOperator& op, const QuadratureGrid& grid,
                            double tolerance = 1e-12);

  [[nodiscard]] bool has_axis1() const { return m1 > 0; }
  [[nodiscard]] bool has_axis2() const { return m2 > 0; }
  [[nodiscard]] bool has_opaque_kernel() const { return kernel_matrix.size() > 0; }
};

GridFunction apply_c0(const NodalFactors& f, const GridFunction& u);
/// (I + C1 <B1 .>_1) u
GridFunction apply_t1(const NodalFactors& f, const GridFunction& u);
/// (I + C2 <B2 .>_2) u
GridFunction apply_t2(const NodalFactors& f, const GridFunction& u);
/// (I - C1 E1^{-1} <B1 .>_1) u
GridFunction apply_s1(const NodalFactors& f, const GridFunction& u);
/// (I - C2 E2^{-1} <B2 .>_2) u
GridFunction apply_s2(const NodalFactors& f, const GridFunction& u);
/// R u = S2 S1 C0 u
GridFunction apply_r(const NodalFactors& f, const GridFunction& u);
/// K u on the nodes
GridFunction apply_nodal_kernel(const NodalFactors& f, const GridFunction& u);
/// int D1(k, k') u(k') dk'
GridFunction apply_d1(const NodalFactors& f, const GridFunction& u);
/// int (D2 - D1)(k, k') u(k') dk'
GridFunction apply_d_difference(const NodalFactors& f, const GridFunction& u);
/// K1 u = int (D2 - D1) u + R K u
GridFunction apply_k1(const NodalFactors& f, const GridFunction& u);

/// The Fredholm operator I + K1 on a grid.
///
/// When the kernel has only separable terms, K1 = U V factors through the traces
/// p = <B2 u>_2 at the axis-1 nodes and one scalar per separable term, and I + K1 is
/// singular exactly when the small matrix I + V U is. Otherwise the full (M n1 n2)-square
/// Nystrom matrix is assembled. Square roots of the quadrature weights are folded in
/// symmetrically in both forms.
class FredholmSystem {
 public:
  enum class Form { reduced, dense };

  /// Requires f.complete.
  static FredholmSystem build(const NodalFactors& f, bool force_dense = false);

  [[nodiscard]] Form form() const { return form_; }
  [[nodiscard]] const Matrix& matrix() const { return matrix_; }
  [[nodiscard]] const RealVector& singular_values() const { return singular_values_; }
  [[nodiscard]] double smallest_singular_value() const;
  [[nodiscard]] double condition_number() const;
  /// Number of singular values below `threshold`.
  [[nodiscard]] int small_singular_values(double threshold) const;

  /// (I + K1)^{-1} y
  [[nodiscard]] GridFunction solve(const NodalFactors& f, const GridFunction& y) const;

 private:
  [[nodiscard]] Vector reduce(const NodalFactors& f, const GridFunction& u) const;
  [[nodiscard]] GridFunction expand(const NodalFactors& f, const Vector& x) const;

  Form form_ = Form::reduced;
  Matrix matrix_;
  RealVector singular_values_;
  Index trace_size_ = 0;             // n1 * M2 when both axis terms are present
  std::vector<double> rank_scale_;   // balancing factor per separable term
  std::vector<GridFunction> r_of_f_;  // R f_r
  Eigen::PartialPivLU<Matrix> lu_;
};

}  // namespace crossdefect
