#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "crossdefect/matrix_function.hpp"

namespace crossdefect {

/// f(k) g(k'): f is rows x 1, g is 1 x cols.
struct RankOneTerm {
  MatrixFunction f;
  MatrixFunction g;
};

/// Continuous kernel of a compact integral operator (Ku)(k) = int K(k,k') u(k') dk'.
///
/// Stored as a sum of opaque kernel callables plus a list of separable rank-one terms.
/// The separable part is kept apart so that it can be applied in O(n) and so that the
/// Fredholm problems it generates stay low-dimensional.
class CompactKernel {
 public:
  using Evaluator = std::function<Matrix(const Point& k, const Point& kp)>;

  CompactKernel() = default;
  CompactKernel(Index rows, Index cols) : rows_(rows), cols_(cols) {}

  static CompactKernel zero(Index rows, Index cols) { return {rows, cols}; }
  static CompactKernel general(Index rows, Index cols, Evaluator evaluator);
  static CompactKernel rank_one(MatrixFunction f, MatrixFunction g);

  [[nodiscard]] Index rows() const { return rows_; }
  [[nodiscard]] Index cols() const { return cols_; }
  [[nodiscard]] bool is_zero() const { return general_.empty() && rank_one_.empty(); }
  [[nodiscard]] bool has_general_terms() const { return !general_.empty(); }

  [[nodiscard]] const std::vector<std::shared_ptr<const Evaluator>>& general_terms() const {
    return general_;
  }
  [[nodiscard]] const std::vector<RankOneTerm>& rank_one_terms() const { return rank_one_; }

  /// Kernel value summed over all terms.
  [[nodiscard]] Matrix operator()(const Point& k, const Point& kp) const;
  /// Value of the opaque terms only.
  [[nodiscard]] Matrix general_value(const Point& k, const Point& kp) const;

  void add_general(Evaluator evaluator);
  void add_rank_one(RankOneTerm term);

  friend CompactKernel operator+(const CompactKernel& a, const CompactKernel& b);
  friend CompactKernel operator*(Complex s, const CompactKernel& a);

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::shared_ptr<const Evaluator>> general_;
  std::vector<RankOneTerm> rank_one_;
};

}  // namespace crossdefect
