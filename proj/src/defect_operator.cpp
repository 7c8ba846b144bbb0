#include "crossdefect/defect_operator.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>

namespace crossdefect {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

bool has_axis_term(const DefectOperator& op, Axis axis) {
  return op.channels(axis) > 0 && !op.a(axis).is_zero() && !op.b(axis).is_zero();
}

using KernelFn = std::shared_ptr<const CompactKernel::Evaluator>;

// Values of a kernel against every grid node with one argument held fixed, memoised per
// fixed point. Applying a composed kernel on the grid hits each fixed point many times.
class NodeSlices {
 public:
  NodeSlices(KernelFn fn, QuadratureGrid grid, bool fixed_first)
      : fn_(std::move(fn)), grid_(std::move(grid)), fixed_first_(fixed_first) {}

  std::shared_ptr<const std::vector<Matrix>> at(const Point& p) {
    const std::pair<double, double> key{p.k1, p.k2};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    auto values = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(grid_.size()));
    for (Index m = 0; m < grid_.size(); ++m) {
      (*values)[m] = fixed_first_ ? (*fn_)(p, grid_.node(m)) : (*fn_)(grid_.node(m), p);
    }
    std::lock_guard<std::mutex> lock(mutex_);
    if (cache_.size() >= kCapacity) cache_.clear();
    cache_.emplace(key, values);
    return values;
  }

 private:
  static constexpr std::size_t kCapacity = 4096;
  KernelFn fn_;
  QuadratureGrid grid_;
  bool fixed_first_;
  std::mutex mutex_;
  std::map<std::pair<double, double>, std::shared_ptr<const std::vector<Matrix>>> cache_;
};

// Wraps a kernel so repeated evaluation at the same pair of points is a lookup. Composed
// kernels evaluate their factors at the same node pairs over and over.
KernelFn memoized(const KernelFn& fn) {
  struct Key {
    double a, b, c, d;
    bool operator==(const Key& o) const { return a == o.a && b == o.b && c == o.c && d == o.d; }
  };
  struct Hash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = 0;
      for (double v : {k.a, k.b, k.c, k.d}) h = h * 1000003u ^ std::hash<double>{}(v);
      return h;
    }
  };
  struct State {
    std::mutex mutex;
    std::unordered_map<Key, Matrix, Hash> values;
  };
  constexpr std::size_t kCapacity = std::size_t{1} << 18;
  auto state = std::make_shared<State>();
  return std::make_shared<const CompactKernel::Evaluator>([fn, state](const Point& k, const Point& kp) -> Matrix {
    const Key key{k.k1, k.k2, kp.k1, kp.k2};
    {
      std::lock_guard<std::mutex> lock(state->mutex);
      auto it = state->values.find(key);
      if (it != state->values.end()) return it->second;
    }
    Matrix v = (*fn)(k, kp);
    std::lock_guard<std::mutex> lock(state->mutex);
    if (state->values.size() >= kCapacity) state->values.clear();
    state->values.emplace(key, v);
    return v;
  });
}

// Same idea for a matrix function.
MatrixFunction memoized(const MatrixFunction& f) {
  struct Hash {
    std::size_t operator()(const std::pair<double, double>& k) const {
      return std::hash<double>{}(k.first) * 1000003u ^ std::hash<double>{}(k.second);
    }
  };
  struct State {
    std::mutex mutex;
    std::unordered_map<std::pair<double, double>, Matrix, Hash> values;
  };
  constexpr std::size_t kCapacity = std::size_t{1} << 16;
  auto state = std::make_shared<State>();
  return {f.rows(), f.cols(), [f, state](double k1, double k2) -> Matrix {
            const std::pair<double, double> key{k1, k2};
            {
              std::lock_guard<std::mutex> lock(state->mutex);
              auto it = state->values.find(key);
              if (it != state->values.end()) return it->second;
            }
            Matrix v = f(k1, k2);
            std::lock_guard<std::mutex> lock(state->mutex);
            if (state->values.size() >= kCapacity) state->values.clear();
            state->values.emplace(key, v);
            return v;
          }};
}

}  // namespace

DefectOperator::DefectOperator(MatrixFunction a0, MatrixFunction a1, MatrixFunction b1,
                               MatrixFunction a2, MatrixFunction b2, CompactKernel kernel)
    : a0_(std::move(a0)),
      a1_(std::move(a1)),
      b1_(std::move(b1)),
      a2_(std::move(a2)),
      b2_(std::move(b2)),
      kernel_(std::move(kernel)) {
  const Index m = a0_.rows();
  require(m > 0 && a0_.cols() == m, "A0 must be a non-empty square M x M function");
  require(a1_.rows() == m && b1_.cols() == m && a1_.cols() == b1_.rows(),
          "axis-1 blocks must be A1: M x M1 and B1: M1 x M");
  require(a2_.rows() == m && b2_.cols() == m && a2_.cols() == b2_.rows(),
          "axis-2 blocks must be A2: M x M2 and B2: M2 x M");
  require(kernel_.rows() == m && kernel_.cols() == m, "kernel must be M x M");
}

DefectOperator DefectOperator::multiplication(MatrixFunction a0) {
  const Index m = a0.rows();
  return {std::move(a0),
          MatrixFunction::zero(m, 0),
          MatrixFunction::zero(0, m),
          MatrixFunction::zero(m, 0),
          MatrixFunction::zero(0, m),
          CompactKernel::zero(m, m)};
}

DefectOperator DefectOperator::identity_plus_axis(Axis axis, MatrixFunction a, MatrixFunction b) {
  const Index m = a.rows();
  if (axis == Axis::first) {
    return {MatrixFunction::identity(m), std::move(a), std::move(b), MatrixFunction::zero(m, 0),
            MatrixFunction::zero(0, m), CompactKernel::zero(m, m)};
  }
  return {MatrixFunction::identity(m), MatrixFunction::zero(m, 0), MatrixFunction::zero(0, m),
          std::move(a), std::move(b), CompactKernel::zero(m, m)};
}

DefectOperator DefectOperator::identity_plus_kernel(CompactKernel kernel) {
  return identity(kernel.rows()).with_kernel(std::move(kernel));
}

DefectOperator DefectOperator::with_a0(MatrixFunction a0) const {
  return {std::move(a0), a1_, b1_, a2_, b2_, kernel_};
}

DefectOperator DefectOperator::with_kernel(CompactKernel kernel) const {
  return {a0_, a1_, b1_, a2_, b2_, std::move(kernel)};
}

DefectOperator DefectOperator::shifted(Complex lambda) const {
  if (lambda == Complex(0.0)) return *this;
  return with_a0(a0_ - lambda * MatrixFunction::identity(M()));
}

GridFunction apply_kernel(const CompactKernel& kernel, const GridFunction& u) {
  require(kernel.cols() == u.dim(), "kernel columns must match the function dimension");
  const QuadratureGrid& grid = u.grid();
  const Index n = grid.size();
  GridFunction out(grid, kernel.rows());
  if (kernel.has_general_terms()) {
    Matrix weighted = u.values();
    for (Index m = 0; m < n; ++m) weighted.col(m) *= grid.weight(m);
    for (Index p = 0; p < n; ++p) {
      const Point k = grid.node(p);
      Vector acc = Vector::Zero(kernel.rows());
      for (Index m = 0; m < n; ++m) acc += kernel.general_value(k, grid.node(m)) * weighted.col(m);
      out.values().col(p) = acc;
    }
  }
  for (const RankOneTerm& term : kernel.rank_one_terms()) {
    Complex s = 0.0;
    for (Index m = 0; m < n; ++m) {
      s += grid.weight(m) * (term.g(grid.node(m)) * u.values().col(m))(0, 0);
    }
    for (Index p = 0; p < n; ++p) out.values().col(p) += term.f(grid.node(p)).col(0) * s;
  }
  return out;
}

DiscreteOperator::DiscreteOperator(const DefectOperator& op, QuadratureGrid grid)
    : grid_(std::move(grid)), m_(op.M()), m1_(op.M1()), m2_(op.M2()) {
  const auto sample = [this](const MatrixFunction& f) {
    return sample_on_grid(f, grid_.axis1(), grid_.axis2());
  };
  a0_ = sample(op.a0());
  if (has_axis_term(op, Axis::first)) {
    a1_ = sample(op.a1());
    b1_ = sample(op.b1());
  }
  if (has_axis_term(op, Axis::second)) {
    a2_ = sample(op.a2());
    b2_ = sample(op.b2());
  }
  const CompactKernel& kernel = op.kernel();
  const Index n = grid_.size();
  if (kernel.has_general_terms()) {
    kernel_matrix_.resize(n * m_, n * m_);
    for (Index q = 0; q < n; ++q) {
      const Point kq = grid_.node(q);
      const double w = grid_.weight(q);
      for (Index p = 0; p < n; ++p) {
        kernel_matrix_.block(p * m_, q * m_, m_, m_) = w * kernel.general_value(grid_.node(p), kq);
      }
    }
  }
  for (const RankOneTerm& term : kernel.rank_one_terms()) {
    rank_one_.emplace_back(sample(term.f), sample(term.g));
  }
}

GridFunction DiscreteOperator::apply(const GridFunction& u) const {
  require(u.dim() == m_, "operator size M does not match the function dimension");
  require(u.grid() == grid_, "function lives on a different grid");
  const Index n1 = grid_.n1();
  const Index n2 = grid_.n2();
  const Index n = grid_.size();
  GridFunction out(grid_, m_);
  for (Index p = 0; p < n; ++p) out.values().col(p) = a0_[p] * u.values().col(p);

  if (!a1_.empty()) {
    for (Index j = 0; j < n2; ++j) {
      Vector avg = Vector::Zero(m1_);
      for (Index i = 0; i < n1; ++i) {
        const Index p = grid_.flat(i, j);
        avg += grid_.axis1().weights[i] * (b1_[p] * u.values().col(p));
      }
      for (Index i = 0; i < n1; ++i) {
        const Index p = grid_.flat(i, j);
        out.values().col(p) += a1_[p] * avg;
      }
    }
  }
  if (!a2_.empty()) {
    for (Index i = 0; i < n1; ++i) {
      Vector avg = Vector::Zero(m2_);
      for (Index j = 0; j < n2; ++j) {
        const Index p = grid_.flat(i, j);
        avg += grid_.axis2().weights[j] * (b2_[p] * u.values().col(p));
      }
      for (Index j = 0; j < n2; ++j) {
        const Index p = grid_.flat(i, j);
        out.values().col(p) += a2_[p] * avg;
      }
    }
  }
  if (kernel_matrix_.size() > 0) {
    const Eigen::Map<const Vector> in(u.values().data(), n * m_);
    Eigen::Map<Vector> acc(out.values().data(), n * m_);
    acc += kernel_matrix_ * in;
  }
  for (const auto& [f, g] : rank_one_) {
    Complex s = 0.0;
    for (Index p = 0; p < n; ++p) s += grid_.weight(p) * (g[p] * u.values().col(p))(0, 0);
    for (Index p = 0; p < n; ++p) out.values().col(p) += f[p].col(0) * s;
  }
  return out;
}

GridFunction apply(const DefectOperator& op, const GridFunction& u) {
  return DiscreteOperator(op, u.grid()).apply(u);
}

DefectOperator add(const DefectOperator& a, const DefectOperator& b) {
  require(a.M() == b.M(), "add: operators act on different M");
  return {a.a0() + b.a0(),        hstack(a.a1(), b.a1()), vstack(a.b1(), b.b1()),
          hstack(a.a2(), b.a2()), vstack(a.b2(), b.b2()), a.kernel() + b.kernel()};
}

MatrixFunction contract_axis(Axis axis, const MatrixFunction& f, const MatrixFunction& g,
                             const QuadratureRule& rule) {
  require(f.cols() == g.rows(), "contract_axis: inner dimensions differ");
  if (f.is_zero() || g.is_zero()) return MatrixFunction::zero(f.rows(), g.cols());
  if (f.is_constant() && g.is_constant()) return MatrixFunction::constant(f(0, 0) * g(0, 0));
  auto shared_rule = std::make_shared<const QuadratureRule>(rule);
  if (axis == Axis::first) {
    return MatrixFunction(f.rows(), g.cols(), [f, g, shared_rule](double, double k2) -> Matrix {
      Matrix acc = Matrix::Zero(f.rows(), g.cols());
      for (Index i = 0; i < shared_rule->size(); ++i) {
        const double x = shared_rule->nodes[i];
        acc += shared_rule->weights[i] * (f(x, k2) * g(x, k2));
      }
      return acc;
    });
  }
  return MatrixFunction(f.rows(), g.cols(), [f, g, shared_rule](double k1, double) -> Matrix {
    Matrix acc = Matrix::Zero(f.rows(), g.cols());
    for (Index j = 0; j < shared_rule->size(); ++j) {
      const double y = shared_rule->nodes[j];
      acc += shared_rule->weights[j] * (f(k1, y) * g(k1, y));
    }
    return acc;
  });
}

CompactKernel compose_left(const DefectOperator& a, const CompactKernel& kernel,
                           const QuadratureGrid& grid) {
  require(a.M() == kernel.rows(), "compose_left: size mismatch");
  CompactKernel out(a.M(), kernel.cols());
  const Index cols = kernel.cols();

  for (const KernelFn& raw : kernel.general_terms()) {
    const KernelFn t = memoized(raw);
    if (!a.a0().is_zero()) {
      out.add_general([a0 = a.a0(), t](const Point& k, const Point& kp) -> Matrix {
        return a0(k) * (*t)(k, kp);
      });
    }
    if (has_axis_term(a, Axis::first)) {
      out.add_general([a1 = a.a1(), b1 = memoized(a.b1()), t, grid, cols](const Point& k, const Point& kp) -> Matrix {
        Matrix s = Matrix::Zero(b1.rows(), cols);
        const QuadratureRule& r = grid.axis1();
        for (Index i = 0; i < r.size(); ++i) {
          const Point q{r.nodes[i], k.k2};
          s.noalias() += r.weights[i] * (b1(q) * (*t)(q, kp));
        }
        return a1(k) * s;
      });
    }
    if (has_axis_term(a, Axis::second)) {
      out.add_general([a2 = a.a2(), b2 = memoized(a.b2()), t, grid, cols](const Point& k, const Point& kp) -> Matrix {
        Matrix s = Matrix::Zero(b2.rows(), cols);
        const QuadratureRule& r = grid.axis2();
        for (Index j = 0; j < r.size(); ++j) {
          const Point q{k.k1, r.nodes[j]};
          s.noalias() += r.weights[j] * (b2(q) * (*t)(q, kp));
        }
        return a2(k) * s;
      });
    }
  }
  for (const RankOneTerm& term : kernel.rank_one_terms()) {
    if (!a.a0().is_zero()) out.add_rank_one({a.a0() * term.f, term.g});
    if (has_axis_term(a, Axis::first)) {
      out.add_rank_one({a.a1() * contract_axis(Axis::first, a.b1(), term.f, grid.axis1()), term.g});
    }
    if (has_axis_term(a, Axis::second)) {
      out.add_rank_one({a.a2() * contract_axis(Axis::second, a.b2(), term.f, grid.axis2()), term.g});
    }
  }

  // a.K o K
  for (const KernelFn& ta : a.kernel().general_terms()) {
    for (const KernelFn& t : kernel.general_terms()) {
      auto left = std::make_shared<NodeSlices>(ta, grid, true);
      auto right = std::make_shared<NodeSlices>(t, grid, false);
      out.add_general([left, right, grid](const Point& k, const Point& kp) -> Matrix {
        const auto lk = left->at(k);
        const auto rk = right->at(kp);
        Matrix acc = Matrix::Zero((*lk)[0].rows(), (*rk)[0].cols());
        for (Index m = 0; m < grid.size(); ++m) acc.noalias() += grid.weight(m) * ((*lk)[m] * (*rk)[m]);
        return acc;
      });
    }
    for (const RankOneTerm& term : kernel.rank_one_terms()) {
      auto f_nodes = std::make_shared<const std::vector<Matrix>>(
          sample_on_grid(term.f, grid.axis1(), grid.axis2()));
      MatrixFunction f(a.M(), 1, [ta, f_nodes, grid](double k1, double k2) -> Matrix {
        Matrix acc;
        for (Index m = 0; m < grid.size(); ++m) {
          Matrix v = grid.weight(m) * ((*ta)({k1, k2}, grid.node(m)) * (*f_nodes)[m]);
          if (m == 0) acc = std::move(v); else acc += v;
        }
        return acc;
      });
      out.add_rank_one({f, term.g});
    }
  }
  for (const RankOneTerm& ra : a.kernel().rank_one_terms()) {
    auto ga_nodes = std::make_shared<const std::vector<Matrix>>(
        sample_on_grid(ra.g, grid.axis1(), grid.axis2()));
    for (const KernelFn& t : kernel.general_terms()) {
      MatrixFunction g(1, cols, [ga_nodes, t, grid](double k1, double k2) -> Matrix {
        Matrix acc;
        for (Index m = 0; m < grid.size(); ++m) {
          Matrix v = grid.weight(m) * ((*ga_nodes)[m] * (*t)(grid.node(m), {k1, k2}));
          if (m == 0) acc = std::move(v); else acc += v;
        }
        return acc;
      });
      out.add_rank_one({ra.f, g});
    }
    for (const RankOneTerm& term : kernel.rank_one_terms()) {
      Complex c = 0.0;
      for (Index m = 0; m < grid.size(); ++m) {
        c += grid.weight(m) * ((*ga_nodes)[m] * term.f(grid.node(m)))(0, 0);
      }
      out.add_rank_one({c * ra.f, term.g});
    }
  }
  return out;
}

CompactKernel compose_right(const CompactKernel& kernel, const DefectOperator& b,
                            const QuadratureGrid& grid) {
  require(kernel.cols() == b.M(), "compose_right: size mismatch");
  CompactKernel out(kernel.rows(), b.M());
  const Index rows = kernel.rows();
  for (const KernelFn& raw : kernel.general_terms()) {
    const KernelFn t = memoized(raw);
    if (!b.a0().is_zero()) {
      out.add_general([t, a0 = b.a0()](const Point& k, const Point& kp) -> Matrix {
        return (*t)(k, kp) * a0(kp);
      });
    }
    if (has_axis_term(b, Axis::first)) {
      out.add_general([t, a1 = memoized(b.a1()), b1 = b.b1(), grid, rows](const Point& k, const Point& kp) -> Matrix {
        Matrix s = Matrix::Zero(rows, a1.cols());
        const QuadratureRule& r = grid.axis1();
        for (Index i = 0; i < r.size(); ++i) {
          const Point q{r.nodes[i], kp.k2};
          s.noalias() += r.weights[i] * ((*t)(k, q) * a1(q));
        }
        return s * b1(kp);
      });
    }
    if (has_axis_term(b, Axis::second)) {
      out.add_general([t, a2 = memoized(b.a2()), b2 = b.b2(), grid, rows](const Point& k, const Point& kp) -> Matrix {
        Matrix s = Matrix::Zero(rows, a2.cols());
        const QuadratureRule& r = grid.axis2();
        for (Index j = 0; j < r.size(); ++j) {
          const Point q{kp.k1, r.nodes[j]};
          s.noalias() += r.weights[j] * ((*t)(k, q) * a2(q));
        }
        return s * b2(kp);
      });
    }
  }
  for (const RankOneTerm& term : kernel.rank_one_terms()) {
    if (!b.a0().is_zero()) out.add_rank_one({term.f, term.g * b.a0()});
    if (has_axis_term(b, Axis::first)) {
      out.add_rank_one({term.f, contract_axis(Axis::first, term.g, b.a1(), grid.axis1()) * b.b1()});
    }
    if (has_axis_term(b, Axis::second)) {
      out.add_rank_one({term.f, contract_axis(Axis::second, term.g, b.a2(), grid.axis2()) * b.b2()});
    }
  }
  return out;
}

DefectOperator multiply(const DefectOperator& a, const DefectOperator& b, const QuadratureGrid& grid) {
  require(a.M() == b.M(), "multiply: operators act on different M");

  const MatrixFunction g1 = contract_axis(Axis::first, a.b1(), b.a1(), grid.axis1());
  const MatrixFunction g2 = contract_axis(Axis::second, a.b2(), b.a2(), grid.axis2());
  MatrixFunction a1 = hstack(a.a1(), a.a0() * b.a1() + a.a1() * g1);
  MatrixFunction b1 = vstack(a.b1() * b.a0(), b.b1());
  MatrixFunction a2 = hstack(a.a2(), a.a0() * b.a2() + a.a2() * g2);
  MatrixFunction b2 = vstack(a.b2() * b.a0(), b.b2());

  CompactKernel kernel = compose_left(a, b.kernel(), grid) + compose_right(a.kernel(), b, grid);
  if (has_axis_term(a, Axis::first) && has_axis_term(b, Axis::second)) {
    // A1(k) B1(k1', k2) A2(k1', k2) B2(k')
    kernel.add_general([fa = a.a1(), fb = a.b1(), ga = b.a2(), gb = b.b2()](const Point& k, const Point& kp) -> Matrix {
      const Point mixed{kp.k1, k.k2};
      return fa(k) * fb(mixed) * ga(mixed) * gb(kp);
    });
  }
  if (has_axis_term(a, Axis::second) && has_axis_term(b, Axis::first)) {
    // A2(k) B2(k1, k2') A1(k1, k2') B1(k')
    kernel.add_general([fa = a.a2(), fb = a.b2(), ga = b.a1(), gb = b.b1()](const Point& k, const Point& kp) -> Matrix {
      const Point mixed{k.k1, kp.k2};
      return fa(k) * fb(mixed) * ga(mixed) * gb(kp);
    });
  }
  return {a.a0() * b.a0(), std::move(a1), std::move(b1), std::move(a2), std::move(b2), std::move(kernel)};
}

}  // namespace crossdefect
