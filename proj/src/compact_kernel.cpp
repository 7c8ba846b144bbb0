#include "crossdefect/compact_kernel.hpp"

namespace crossdefect {

CompactKernel CompactKernel::general(Index rows, Index cols, Evaluator evaluator) {
  CompactKernel k(rows, cols);
  k.add_general(std::move(evaluator));
  return k;
}

CompactKernel CompactKernel::rank_one(MatrixFunction f, MatrixFunction g) {
  CompactKernel k(f.rows(), g.cols());
  k.add_rank_one({std::move(f), std::move(g)});
  return k;
}

void CompactKernel::add_general(Evaluator evaluator) {
  general_.push_back(std::make_shared<const Evaluator>(std::move(evaluator)));
}

void CompactKernel::add_rank_one(RankOneTerm term) {
  if (term.f.cols() != 1 || term.g.rows() != 1 || term.f.rows() != rows_ ||
      term.g.cols() != cols_) {
    throw DimensionError("rank-one term must be (rows x 1) * (1 x cols)");
  }
  if (term.f.is_zero() || term.g.is_zero()) return;
  rank_one_.push_back(std::move(term));
}

Matrix CompactKernel::general_value(const Point& k, const Point& kp) const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (const auto& term : general_) out += (*term)(k, kp);
  return out;
}

Matrix CompactKernel::operator()(const Point& k, const Point& kp) const {
  Matrix out = general_value(k, kp);
  for (const auto& term : rank_one_) out += term.f(k) * term.g(kp);
  return out;
}

CompactKernel operator+(const CompactKernel& a, const CompactKernel& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw DimensionError("kernel sum: shape mismatch");
  CompactKernel out = a;
  out.general_.insert(out.general_.end(), b.general_.begin(), b.general_.end());
  out.rank_one_.insert(out.rank_one_.end(), b.rank_one_.begin(), b.rank_one_.end());
  return out;
}

CompactKernel operator*(Complex s, const CompactKernel& a) {
  CompactKernel out(a.rows_, a.cols_);
  if (s == Complex(0.0)) return out;
  for (const auto& term : a.general_) {
    out.general_.push_back(std::make_shared<const CompactKernel::Evaluator>(
        [s, term](const Point& k, const Point& kp) -> Matrix { return s * (*term)(k, kp); }));
  }
  for (const auto& term : a.rank_one_) out.rank_one_.push_back({s * term.f, term.g});
  return out;
}

}  // namespace crossdefect
