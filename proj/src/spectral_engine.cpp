#include "crossdefect/spectral_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace crossdefect {

namespace {

bool axis_term(const DefectOperator& op, Axis axis) {
  return op.channels(axis) > 0 && !op.a(axis).is_zero() && !op.b(axis).is_zero();
}

Point fibre_point(Axis axis, double s, double t) {
  // axis 1 integrates over k1 at fixed k2 = t
  return axis == Axis::first ? Point{s, t} : Point{t, s};
}

double smallest_sv(const Matrix& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

bool is_hermitian(const Matrix& a, double tol = 1e-13) {
  return (a - a.adjoint()).norm() <= tol * std::max(1.0, a.norm());
}

// Number of negative eigenvalues for a Hermitian matrix, -1 otherwise.
int negative_count(const Matrix& a) {
  if (!is_hermitian(a)) return -1;
  if (a.rows() == 1) return a(0, 0).real() < 0.0 ? 1 : 0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return static_cast<int>((es.eigenvalues().array() < 0.0).count());
}

std::optional<Matrix> safe_inverse(const Matrix& a) {
  if (a.rows() == 1) {
    if (a(0, 0) == Complex(0.0)) return std::nullopt;
    return Matrix::Constant(1, 1, 1.0 / a(0, 0));
  }
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) return std::nullopt;
  return Matrix(lu.inverse());
}

bool all_finite(const Matrix& a) {
  return a.array().isFinite().all();
}

// Thread-safe memo of a function of a few doubles.
template <std::size_t N>
class Memo {
 public:
  using Key = std::array<double, N>;

  template <typename F>
  Matrix get(const Key& key, F&& compute) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = values_.find(key);
      if (it != values_.end()) return it->second;
    }
    Matrix value = compute();
    std::lock_guard<std::mutex> lock(mutex_);
    if (values_.size() > 2'000'000) values_.clear();
    values_.emplace(key, value);
    return value;
  }

 private:
  std::mutex mutex_;
  std::map<Key, Matrix> values_;
};

FibreFunction memoized_inverse(const FibreFunction& f) {
  if (f.empty()) return f;
  auto memo = std::make_shared<Memo<1>>();
  return FibreFunction(f.size(), [f, memo](double t) -> Matrix {
    return memo->get({t}, [&] {
      const auto inv = safe_inverse(f(t));
      if (!inv) throw NumericalError("fibre matrix is singular at " + std::to_string(t));
      return *inv;
    });
  });
}

// Minimum of the smallest singular value of a0 near the worst nodes, refined by
// coordinate-wise Brent searches inside the surrounding grid cell.
double a0_continuum_min(const MatrixFunction& a0, const QuadratureGrid& grid,
                        const std::vector<double>& node_sv) {
  std::vector<Index> order(node_sv.size());
  for (Index n = 0; n < static_cast<Index>(order.size()); ++n) order[n] = n;
  const std::size_t keep = std::min<std::size_t>(4, order.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](Index a, Index b) { return node_sv[a] < node_sv[b]; });
  double best = node_sv.empty() ? std::numeric_limits<double>::infinity() : node_sv[order[0]];
  const double h1 = 1.0 / static_cast<double>(grid.n1());
  const double h2 = 1.0 / static_cast<double>(grid.n2());
  for (std::size_t r = 0; r < keep; ++r) {
    Point p = grid.node(order[r]);
    for (int sweep = 0; sweep < 3; ++sweep) {
      auto along1 = [&](double x) { return smallest_sv(a0(x, p.k2)); };
      auto r1 = boost::math::tools::brent_find_minima(along1, std::max(0.0, p.k1 - 2 * h1),
                                                      std::min(1.0, p.k1 + 2 * h1), 40);
      p.k1 = r1.first;
      auto along2 = [&](double y) { return smallest_sv(a0(p.k1, y)); };
      auto r2 = boost::math::tools::brent_find_minima(along2, std::max(0.0, p.k2 - 2 * h2),
                                                      std::min(1.0, p.k2 + 2 * h2), 40);
      p.k2 = r2.first;
      best = std::min({best, r1.second, r2.second});
    }
  }
  return best;
}

// True when the real determinant of consecutive fibre matrices changes sign.
bool fibre_sign_change(const std::vector<Matrix>& e) {
  int previous = 0;
  for (const Matrix& m : e) {
    const Complex d = m.determinant();
    if (std::abs(d.imag()) > 1e-12 * std::max(1.0, std::abs(d))) return false;
    const int sign = d.real() > 0.0 ? 1 : (d.real() < 0.0 ? -1 : 0);
    if (sign == 0) return true;
    if (previous != 0 && sign != previous) return true;
    previous = sign;
  }
  return false;
}

struct Evaluation {
  InvertibilityVerdict verdict;
  std::optional<SpectralCache> cache;
};

Evaluation evaluate(const DefectOperator& op, const SpectralQuery& q, const QuadratureGrid& grid,
                    const InvertibilityOptions& options) {
  Evaluation ev;
  DeriveOptions derive_options = options.derive;
  derive_options.assemble_fredholm = false;
  ev.cache.emplace(derive(op, q, grid, derive_options));
  SpectralCache& cache = *ev.cache;
  const NodalFactors& nodal = cache.nodal;
  InvertibilityVerdict& v = ev.verdict;
  std::ostringstream msg;

  // j = 0
  std::vector<double> node_sv(grid.size());
  double scale = 0.0;
  bool hermitian = true;
  int negatives = -2;
  bool inertia_changes = false;
  for (Index n = 0; n < grid.size(); ++n) {
    const Matrix a = cache.op.a0()(grid.node(n));
    node_sv[n] = smallest_sv(a);
    scale = std::max(scale, a.norm());
    const int c = negative_count(a);
    if (c < 0) hermitian = false;
    if (hermitian) {
      if (negatives != -2 && c != negatives) inertia_changes = true;
      negatives = c;
    }
  }
  v.a0_min_sv = a0_continuum_min(cache.op.a0(), grid, node_sv);
  const double a0_threshold = options.a0_tolerance * std::max(1.0, scale);
  if (!nodal.a0_valid || v.a0_min_sv <= a0_threshold || (hermitian && inertia_changes)) {
    v.failing_condition = 0;
    msg << "det E0 vanishes on the torus (smallest singular value " << v.a0_min_sv
        << (hermitian && inertia_changes ? ", eigenvalue crosses zero between nodes" : "") << ")";
    v.diagnostic = msg.str();
    return ev;
  }

  // j = 1, 2
  const auto fibre_check = [&](int j, const std::vector<Matrix>& e, const std::vector<bool>& valid,
                               double min_sv) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < e.size(); ++t) {
      worst = std::min(worst, smallest_sv(e[t]) / std::max(1.0, e[t].norm()));
    }
    const bool bad = !std::all_of(valid.begin(), valid.end(), [](bool b) { return b; }) ||
                     worst <= options.fibre_tolerance || fibre_sign_change(e);
    if (bad) {
      v.failing_condition = j;
      msg << "det E" << j << " vanishes on a fibre (smallest singular value " << min_sv << ")";
      v.diagnostic = msg.str();
    }
    return !bad;
  };
  v.e1_min_sv = nodal.e1_min_sv;
  v.e2_min_sv = nodal.e2_min_sv;
  if (nodal.has_axis1() && !fibre_check(1, nodal.e1, nodal.e1_valid, nodal.e1_min_sv)) return ev;
  if (nodal.has_axis2() && !fibre_check(2, nodal.e2, nodal.e2_valid, nodal.e2_min_sv)) return ev;

  // j = 3
  cache.fredholm.emplace(FredholmSystem::build(nodal, options.derive.dense_fredholm));
  v.fredholm_min_sv = cache.fredholm->smallest_singular_value();
  v.fredholm_condition = cache.fredholm->condition_number();
  if (v.fredholm_min_sv <= options.fredholm_tolerance) {
    v.failing_condition = 3;
    msg << "I + K1 is singular (smallest singular value " << v.fredholm_min_sv << ")";
    v.diagnostic = msg.str();
    return ev;
  }
  v.invertible = true;
  v.diagnostic = "invertible";
  return ev;
}

// R applied to a function v at the point k, with the inner averages taken by the grid rules.
Matrix semi_discrete_r(const SpectralCache& c, const FibreFunction& e1_inv,
                       const FibreFunction& e2_inv,
                       const std::function<Matrix(const Point&)>& v, const Point& k) {
  const QuadratureRule& r1 = c.grid.axis1();
  const QuadratureRule& r2 = c.grid.axis2();
  const bool has1 = axis_term(c.op, Axis::first);
  const bool has2 = axis_term(c.op, Axis::second);
  const auto s1 = [&](const Point& p) -> Matrix {
    Matrix w = c.c0(p) * v(p);
    if (!has1) return w;
    Matrix acc = Matrix::Zero(c.op.M1(), w.cols());
    for (Index i = 0; i < r1.size(); ++i) {
      const Point q{r1.nodes[i], p.k2};
      acc += r1.weights[i] * (c.op.b1()(q) * (c.c0(q) * v(q)));
    }
    return w - c.c1(p) * (e1_inv(p.k2) * acc);
  };
  Matrix out = s1(k);
  if (!has2) return out;
  Matrix acc = Matrix::Zero(c.op.M2(), out.cols());
  for (Index j = 0; j < r2.size(); ++j) {
    const Point q{k.k1, r2.nodes[j]};
    acc += r2.weights[j] * (c.op.b2()(q) * s1(q));
  }
  return out - c.c2(k) * (e2_inv(k.k1) * acc);
}

}  // namespace

DefectOperator effective_operator(const DefectOperator& op, const SpectralQuery& q) {
  return q.mode == SpectralMode::shift ? op.shifted(q.lambda) : op;
}

FibreFunction::FibreFunction(Index size, Evaluator evaluator)
    : size_(size), evaluator_(std::make_shared<const Evaluator>(std::move(evaluator))) {}

Matrix FibreFunction::operator()(double t) const {
  if (size_ == 0) return Matrix(0, 0);
  return (*evaluator_)(t);
}

std::optional<Matrix> fibre_matrix_adaptive(const DefectOperator& op, Axis axis, double t,
                                             const AdaptiveOptions& options, bool probe_fibre) {
  const Index m = op.channels(axis);
  Matrix identity = Matrix::Identity(m, m);
  if (!axis_term(op, axis)) return identity;
  const MatrixFunction& a0 = op.a0();
  const MatrixFunction& a = op.a(axis);
  const MatrixFunction& b = op.b(axis);
  if (probe_fibre) {
    constexpr int probes = 128;
    int negatives = -2;
    double scale = 0.0;
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= probes; ++s) {
      const Matrix v = a0(fibre_point(axis, static_cast<double>(s) / probes, t));
      scale = std::max(scale, v.norm());
      worst = std::min(worst, smallest_sv(v));
      const int c = negative_count(v);
      if (c >= 0) {
        if (negatives >= 0 && c != negatives) return std::nullopt;
        negatives = c;
      }
    }
    if (worst <= 1e-12 * std::max(1.0, scale)) return std::nullopt;
  }
  bool finite = true;
  const auto integrand = [&](double s) -> Matrix {
    const Point p = fibre_point(axis, s, t);
    const auto inv = safe_inverse(a0(p));
    if (!inv) {
      finite = false;
      return Matrix::Zero(m, m);
    }
    return b(p) * (*inv) * a(p);
  };
  const AdaptiveResult r = integrate_adaptive(integrand, 0.0, 1.0, options);
  if (!finite || !r.converged || !all_finite(r.value)) return std::nullopt;
  return identity + r.value;
}

std::optional<Matrix> fibre_matrix_rule(const DefectOperator& op, Axis axis, double t,
                                        const QuadratureRule& rule) {
  const Index m = op.channels(axis);
  Matrix e = Matrix::Identity(m, m);
  if (!axis_term(op, axis)) return e;
  for (Index i = 0; i < rule.size(); ++i) {
    const Point p = fibre_point(axis, rule.nodes[i], t);
    const auto inv = safe_inverse(op.a0()(p));
    if (!inv) return std::nullopt;
    e += rule.weights[i] * (op.b(axis)(p) * (*inv) * op.a(axis)(p));
  }
  if (!all_finite(e)) return std::nullopt;
  return e;
}

SpectralCache derive(const DefectOperator& op, const SpectralQuery& q, const QuadratureGrid& grid,
                     const DeriveOptions& options) {
  DefectOperator eff = effective_operator(op, q);
  SpectralCache cache(eff, grid, NodalFactors::build(eff, grid, options.singular_tolerance));
  cache.e0 = eff.a0();
  cache.c0 = pointwise_inverse(eff.a0());
  cache.c1 = cache.c0 * eff.a1();
  cache.c2 = cache.c0 * eff.a2();

  const auto fibre = [&](Axis axis, bool adaptive) -> FibreFunction {
    if (eff.channels(axis) == 0) return {};
    const AdaptiveOptions ao = options.fibre_quadrature;
    const QuadratureRule rule = grid.axis(axis);
    return FibreFunction(eff.channels(axis), [eff, axis, adaptive, ao, rule](double t) -> Matrix {
      const auto e = adaptive ? fibre_matrix_adaptive(eff, axis, t, ao)
                              : fibre_matrix_rule(eff, axis, t, rule);
      if (!e) throw NumericalError("fibre matrix undefined: A0 singular on the fibre at " +
                                   std::to_string(t));
      return *e;
    });
  };
  cache.e1 = fibre(Axis::first, true);
  cache.e2 = fibre(Axis::second, true);
  cache.e1_grid = fibre(Axis::first, false);
  cache.e2_grid = fibre(Axis::second, false);

  const Index m = eff.M();
  cache.d1 = CompactKernel::zero(m, m);
  cache.d2 = CompactKernel::zero(m, m);
  if (axis_term(eff, Axis::first) && axis_term(eff, Axis::second)) {
    const FibreFunction e1_inv = memoized_inverse(cache.e1_grid);
    const FibreFunction e2_inv = memoized_inverse(cache.e2_grid);
    const MatrixFunction c1 = cache.c1;
    const MatrixFunction c2 = cache.c2;
    const MatrixFunction b1 = eff.b1();
    const MatrixFunction b2 = eff.b2();
    // C1(k) E1^{-1}(k2) B1(k1', k2) C2(k1', k2) B2(k')
    auto d1 = [c1, c2, b1, b2, e1_inv](const Point& k, const Point& kp) -> Matrix {
      const Point mixed{kp.k1, k.k2};
      return c1(k) * (e1_inv(k.k2) * (b1(mixed) * (c2(mixed) * b2(kp))));
    };
    cache.d1 = CompactKernel::general(m, m, d1);
    // C2(k) E2^{-1}(k1) int B2(k1, k2'') D1((k1, k2''), k') dk2''
    auto inner = std::make_shared<Memo<3>>();
    const QuadratureRule rule2 = grid.axis2();
    cache.d2 = CompactKernel::general(
        m, m, [c2, b2, e2_inv, d1, inner, rule2, m](const Point& k, const Point& kp) -> Matrix {
          const Matrix h = inner->get({k.k1, kp.k1, kp.k2}, [&] {
            Matrix acc = Matrix::Zero(b2.rows(), m);
            for (Index j = 0; j < rule2.size(); ++j) {
              const Point q{k.k1, rule2.nodes[j]};
              acc += rule2.weights[j] * (b2(q) * d1(q, kp));
            }
            return acc;
          });
          return c2(k) * (e2_inv(k.k1) * h);
        });
  }
  if (options.assemble_fredholm && cache.nodal.complete) {
    cache.fredholm.emplace(FredholmSystem::build(cache.nodal, options.dense_fredholm));
  }
  return cache;
}

Matrix k1_nystrom_matrix(const SpectralCache& cache) {
  const FredholmSystem dense = FredholmSystem::build(cache.nodal, true);
  return dense.matrix() - Matrix::Identity(dense.matrix().rows(), dense.matrix().cols());
}

InvertibilityVerdict is_invertible(const DefectOperator& op, const SpectralQuery& q,
                                   const QuadratureGrid& grid, const InvertibilityOptions& options) {
  return evaluate(op, q, grid, options).verdict;
}

NotInvertible::NotInvertible(InvertibilityVerdict v)
    : NumericalError("operator is not invertible: condition " +
                     std::to_string(v.failing_condition) + ": " + v.diagnostic),
      verdict_(std::move(v)) {}

IllConditioned::IllConditioned(double condition, double limit)
    : NumericalError("Fredholm system is ill-conditioned: condition estimate " +
                     std::to_string(condition) + " exceeds " + std::to_string(limit)),
      condition_(condition) {}

GridFunction inverse_apply(const SpectralCache& cache, const GridFunction& u, double max_condition) {
  if (!(u.grid() == cache.grid)) throw DimensionError("inverse_apply: function lives on another grid");
  if (u.dim() != cache.op.M()) throw DimensionError("inverse_apply: dimension mismatch");
  if (!cache.fredholm) throw NumericalError("inverse_apply: derivation is incomplete");
  const double condition = cache.fredholm->condition_number();
  if (!(condition <= max_condition)) throw IllConditioned(condition, max_condition);
  const GridFunction ru = apply_r(cache.nodal, u);
  const GridFunction z = cache.fredholm->solve(cache.nodal, ru);
  return ru - apply_k1(cache.nodal, z);
}

GridFunction inverse_apply(const DefectOperator& op, const SpectralQuery& q, const GridFunction& u,
                           const InverseOptions& options) {
  Evaluation ev = evaluate(op, q, u.grid(), options.invertibility);
  if (!ev.verdict.invertible) throw NotInvertible(ev.verdict);
  return inverse_apply(*ev.cache, u, options.max_condition);
}

Factorization factorize(const DefectOperator& op, const SpectralQuery& q, const QuadratureGrid& grid,
                        const InvertibilityOptions& options) {
  Evaluation ev = evaluate(op, q, grid, options);
  if (!ev.verdict.invertible) throw NotInvertible(ev.verdict);
  const SpectralCache& c = *ev.cache;
  const DefectOperator& eff = c.op;
  const Index m = eff.M();

  DefectOperator axis1 = axis_term(eff, Axis::first)
                             ? DefectOperator::identity_plus_axis(Axis::first, c.c1, eff.b1())
                             : DefectOperator::identity(m);
  DefectOperator axis2 = axis_term(eff, Axis::second)
                             ? DefectOperator::identity_plus_axis(Axis::second, c.c2, eff.b2())
                             : DefectOperator::identity(m);

  CompactKernel k1 = c.d2 + Complex(-1.0) * c.d1;
  const FibreFunction e1_inv = memoized_inverse(c.e1_grid);
  const FibreFunction e2_inv = memoized_inverse(c.e2_grid);
  auto shared = std::make_shared<const SpectralCache>(c);
  for (const RankOneTerm& term : eff.kernel().rank_one_terms()) {
    const MatrixFunction f = term.f;
    MatrixFunction rf(m, 1, [shared, e1_inv, e2_inv, f](double k1v, double k2v) -> Matrix {
      return semi_discrete_r(*shared, e1_inv, e2_inv, [&f](const Point& p) { return f(p); },
                             {k1v, k2v});
    });
    k1.add_rank_one({rf, term.g});
  }
  for (const auto& term : eff.kernel().general_terms()) {
    k1.add_general([shared, e1_inv, e2_inv, term](const Point& k, const Point& kp) -> Matrix {
      return semi_discrete_r(*shared, e1_inv, e2_inv,
                             [&](const Point& p) { return (*term)(p, kp); }, k);
    });
  }
  return {DefectOperator::multiplication(eff.a0()), std::move(axis1), std::move(axis2),
          DefectOperator::identity_plus_kernel(std::move(k1))};
}

GridFunction apply_factors(const Factorization& f, const GridFunction& u) {
  return apply(f.multiplication, apply(f.axis1, apply(f.axis2, apply(f.fredholm, u))));
}

}  // namespace crossdefect
