#include "crossdefect/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crossdefect {

namespace {

double smallest_sv(const Matrix& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

bool axis_term(const DefectOperator& op, Axis axis) {
  return op.channels(axis) > 0 && !op.a(axis).is_zero() && !op.b(axis).is_zero();
}

// <B2 u>_2 at every axis-1 node: column i is the M2-vector for x_i.
Matrix trace2(const NodalFactors& f, const GridFunction& u) {
  const QuadratureGrid& g = f.grid;
  const auto& w2 = g.axis2().weights;
  Matrix t = Matrix::Zero(f.m2, g.n1());
  for (Index i = 0; i < g.n1(); ++i) {
    for (Index j = 0; j < g.n2(); ++j) {
      const Index n = g.flat(i, j);
      t.col(i) += w2[j] * (f.b2[n] * u.values().col(n));
    }
  }
  return t;
}

// <B1 u>_1 at every axis-2 node: column j is the M1-vector for y_j.
Matrix trace1(const NodalFactors& f, const GridFunction& u) {
  const QuadratureGrid& g = f.grid;
  const auto& w1 = g.axis1().weights;
  Matrix t = Matrix::Zero(f.m1, g.n2());
  for (Index i = 0; i < g.n1(); ++i) {
    for (Index j = 0; j < g.n2(); ++j) {
      const Index n = g.flat(i, j);
      t.col(j) += w1[i] * (f.b1[n] * u.values().col(n));
    }
  }
  return t;
}

// C1(x_i, y_j) E1^{-1}(y_j) <B1 C2 t>_1 where t(i) is an M2-vector per axis-1 node.
GridFunction d1_from_trace(const NodalFactors& f, const Matrix& t) {
  const QuadratureGrid& g = f.grid;
  const auto& w1 = g.axis1().weights;
  Matrix s = Matrix::Zero(f.m1, g.n2());
  for (Index i = 0; i < g.n1(); ++i) {
    for (Index j = 0; j < g.n2(); ++j) {
      const Index n = g.flat(i, j);
      s.col(j) += w1[i] * (f.b1[n] * (f.c2[n] * t.col(i)));
    }
  }
  GridFunction out(g, f.m);
  for (Index j = 0; j < g.n2(); ++j) {
    const Vector sj = f.e1_inv[j] * s.col(j);
    for (Index i = 0; i < g.n1(); ++i) {
      const Index n = g.flat(i, j);
      out.values().col(n) = f.c1[n] * sj;
    }
  }
  return out;
}

Complex functional(const NodalFactors& f, const Matrix& g_values, const GridFunction& u) {
  Complex s = 0.0;
  for (Index n = 0; n < f.grid.size(); ++n) {
    s += f.grid.weight(n) * g_values.col(n).cwiseProduct(u.values().col(n)).sum();
  }
  return s;
}

}  // namespace

NodalFactors NodalFactors::build(const DefectOperator& op, const QuadratureGrid& grid,
                                 double tolerance) {
  NodalFactors f(grid);
  f.m = op.M();
  f.m1 = axis_term(op, Axis::first) ? op.M1() : 0;
  f.m2 = axis_term(op, Axis::second) ? op.M2() : 0;
  const Index n1 = grid.n1();
  const Index n2 = grid.n2();
  const Index size = grid.size();
  const auto sample = [&grid](const MatrixFunction& fn) {
    return sample_on_grid(fn, grid.axis1(), grid.axis2());
  };

  const std::vector<Matrix> a0 = sample(op.a0());
  double scale = 0.0;
  for (const Matrix& a : a0) scale = std::max(scale, a.norm());
  const double threshold = tolerance * std::max(1.0, scale);
  std::vector<bool> node_valid(size);
  f.c0.resize(size);
  f.a0_min_sv = std::numeric_limits<double>::infinity();
  for (Index n = 0; n < size; ++n) {
    const double s = smallest_sv(a0[n]);
    f.a0_min_sv = std::min(f.a0_min_sv, s);
    node_valid[n] = s > threshold;
    f.c0[n] = node_valid[n] ? Matrix(a0[n].inverse()) : Matrix::Zero(f.m, f.m);
  }
  f.a0_valid = std::all_of(node_valid.begin(), node_valid.end(), [](bool v) { return v; });

  if (f.m1 > 0) {
    const std::vector<Matrix> a1 = sample(op.a1());
    f.b1 = sample(op.b1());
    f.c1.resize(size);
    for (Index n = 0; n < size; ++n) f.c1[n] = f.c0[n] * a1[n];
    f.e1.assign(n2, Matrix::Identity(f.m1, f.m1));
    f.e1_inv.assign(n2, Matrix::Zero(f.m1, f.m1));
    f.e1_valid.assign(n2, false);
    f.e1_min_sv = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n2; ++j) {
      bool fibre = true;
      for (Index i = 0; i < n1; ++i) {
        const Index n = grid.flat(i, j);
        fibre = fibre && node_valid[n];
        f.e1[j] += grid.axis1().weights[i] * (f.b1[n] * f.c1[n]);
      }
      const double s = fibre ? smallest_sv(f.e1[j]) : 0.0;
      f.e1_min_sv = std::min(f.e1_min_sv, s);
      f.e1_valid[j] = fibre && s > tolerance * std::max(1.0, f.e1[j].norm());
      if (f.e1_valid[j]) f.e1_inv[j] = f.e1[j].inverse();
    }
  }
  if (f.m2 > 0) {
    const std::vector<Matrix> a2 = sample(op.a2());
    f.b2 = sample(op.b2());
    f.c2.resize(size);
    for (Index n = 0; n < size; ++n) f.c2[n] = f.c0[n] * a2[n];
    f.e2.assign(n1, Matrix::Identity(f.m2, f.m2));
    f.e2_inv.assign(n1, Matrix::Zero(f.m2, f.m2));
    f.e2_valid.assign(n1, false);
    f.e2_min_sv = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n1; ++i) {
      bool fibre = true;
      for (Index j = 0; j < n2; ++j) {
        const Index n = grid.flat(i, j);
        fibre = fibre && node_valid[n];
        f.e2[i] += grid.axis2().weights[j] * (f.b2[n] * f.c2[n]);
      }
      const double s = fibre ? smallest_sv(f.e2[i]) : 0.0;
      f.e2_min_sv = std::min(f.e2_min_sv, s);
      f.e2_valid[i] = fibre && s > tolerance * std::max(1.0, f.e2[i].norm());
      if (f.e2_valid[i]) f.e2_inv[i] = f.e2[i].inverse();
    }
  }

  const CompactKernel& kernel = op.kernel();
  if (kernel.has_general_terms()) {
    const Index m = f.m;
    f.kernel_matrix.resize(size * m, size * m);
    for (Index q = 0; q < size; ++q) {
      const Point kq = grid.node(q);
      const double w = grid.weight(q);
      for (Index p = 0; p < size; ++p) {
        f.kernel_matrix.block(p * m, q * m, m, m) = w * kernel.general_value(grid.node(p), kq);
      }
    }
  }
  for (const RankOneTerm& term : kernel.rank_one_terms()) {
    Matrix fv(f.m, size);
    Matrix gv(f.m, size);
    for (Index n = 0; n < size; ++n) {
      const Point k = grid.node(n);
      fv.col(n) = term.f(k).col(0);
      gv.col(n) = term.g(k).row(0).transpose();
    }
    f.rank_f.push_back(std::move(fv));
    f.rank_g.push_back(std::move(gv));
  }

  const auto all = [](const std::vector<bool>& v) {
    return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
  };
  f.complete = f.a0_valid && all(f.e1_valid) && all(f.e2_valid);
  return f;
}

GridFunction apply_c0(const NodalFactors& f, const GridFunction& u) {
  GridFunction out(f.grid, f.m);
  for (Index n = 0; n < f.grid.size(); ++n) out.values().col(n) = f.c0[n] * u.values().col(n);
  return out;
}

GridFunction apply_t1(const NodalFactors& f, const GridFunction& u) {
  if (!f.has_axis1()) return u;
  const Matrix s = trace1(f, u);
  GridFunction out = u;
  for (Index n = 0; n < f.grid.size(); ++n) {
    out.values().col(n) += f.c1[n] * s.col(n % f.grid.n2());
  }
  return out;
}

GridFunction apply_t2(const NodalFactors& f, const GridFunction& u) {
  if (!f.has_axis2()) return u;
  const Matrix t = trace2(f, u);
  GridFunction out = u;
  for (Index n = 0; n < f.grid.size(); ++n) {
    out.values().col(n) += f.c2[n] * t.col(n / f.grid.n2());
  }
  return out;
}

GridFunction apply_s1(const NodalFactors& f, const GridFunction& u) {
  if (!f.has_axis1()) return u;
  Matrix s = trace1(f, u);
  for (Index j = 0; j < s.cols(); ++j) s.col(j) = f.e1_inv[j] * s.col(j);
  GridFunction out = u;
  for (Index n = 0; n < f.grid.size(); ++n) {
    out.values().col(n) -= f.c1[n] * s.col(n % f.grid.n2());
  }
  return out;
}

GridFunction apply_s2(const NodalFactors& f, const GridFunction& u) {
  if (!f.has_axis2()) return u;
  Matrix t = trace2(f, u);
  for (Index i = 0; i < t.cols(); ++i) t.col(i) = f.e2_inv[i] * t.col(i);
  GridFunction out = u;
  for (Index n = 0; n < f.grid.size(); ++n) {
    out.values().col(n) -= f.c2[n] * t.col(n / f.grid.n2());
  }
  return out;
}

GridFunction apply_r(const NodalFactors& f, const GridFunction& u) {
  return apply_s2(f, apply_s1(f, apply_c0(f, u)));
}

GridFunction apply_nodal_kernel(const NodalFactors& f, const GridFunction& u) {
  GridFunction out(f.grid, f.m);
  if (f.has_opaque_kernel()) {
    const Eigen::Map<const Vector> in(u.values().data(), u.values().size());
    Eigen::Map<Vector>(out.values().data(), out.values().size()) = f.kernel_matrix * in;
  }
  for (std::size_t r = 0; r < f.rank_f.size(); ++r) {
    out.values() += f.rank_f[r] * functional(f, f.rank_g[r], u);
  }
  return out;
}

GridFunction apply_d1(const NodalFactors& f, const GridFunction& u) {
  if (!f.has_axis1() || !f.has_axis2()) return GridFunction(f.grid, f.m);
  return d1_from_trace(f, trace2(f, u));
}

GridFunction apply_d_difference(const NodalFactors& f, const GridFunction& u) {
  return Complex(-1.0) * apply_s2(f, apply_d1(f, u));
}

GridFunction apply_k1(const NodalFactors& f, const GridFunction& u) {
  GridFunction out = apply_d_difference(f, u);
  if (f.has_opaque_kernel() || !f.rank_f.empty()) out += apply_r(f, apply_nodal_kernel(f, u));
  return out;
}

FredholmSystem FredholmSystem::build(const NodalFactors& f, bool force_dense) {
  if (!f.complete) throw NumericalError("Fredholm system needs every inverse of the derivation");
  FredholmSystem sys;
  const QuadratureGrid& g = f.grid;
  if (force_dense || f.has_opaque_kernel()) {
    sys.form_ = Form::dense;
    const Index dim = f.m * g.size();
    Vector sqrt_w(dim);
    for (Index n = 0; n < g.size(); ++n) {
      sqrt_w.segment(n * f.m, f.m).setConstant(std::sqrt(g.weight(n)));
    }
    sys.matrix_ = Matrix::Identity(dim, dim);
    for (Index col = 0; col < dim; ++col) {
      GridFunction e(g, f.m);
      e.values().data()[col] = 1.0 / sqrt_w(col);
      const GridFunction k1e = apply_k1(f, e);
      const Eigen::Map<const Vector> v(k1e.values().data(), dim);
      sys.matrix_.col(col) += sqrt_w.cwiseProduct(v);
    }
  } else {
    sys.form_ = Form::reduced;
    sys.trace_size_ = (f.has_axis1() && f.has_axis2()) ? g.n1() * f.m2 : 0;
    const Index rank = static_cast<Index>(f.rank_f.size());
    for (Index r = 0; r < rank; ++r) {
      GridFunction fr(g, f.rank_f[r]);
      sys.r_of_f_.push_back(apply_r(f, fr));
      double gnorm = 0.0;
      for (Index n = 0; n < g.size(); ++n) gnorm += g.weight(n) * f.rank_g[r].col(n).squaredNorm();
      gnorm = std::sqrt(gnorm);
      const double rnorm = grid_norm(sys.r_of_f_.back());
      sys.rank_scale_.push_back(gnorm > 0.0 && rnorm > 0.0 ? std::sqrt(rnorm / gnorm) : 1.0);
    }
    const Index dim = sys.trace_size_ + rank;
    sys.matrix_ = Matrix::Identity(dim, dim);
    for (Index col = 0; col < dim; ++col) {
      Vector x = Vector::Zero(dim);
      x(col) = 1.0;
      sys.matrix_.col(col) += sys.reduce(f, sys.expand(f, x));
    }
  }
  if (sys.matrix_.size() > 0) {
    Eigen::JacobiSVD<Matrix> svd(sys.matrix_);
    sys.singular_values_ = svd.singularValues();
    sys.lu_.compute(sys.matrix_);
  }
  return sys;
}

Vector FredholmSystem::reduce(const NodalFactors& f, const GridFunction& u) const {
  const Index rank = static_cast<Index>(rank_scale_.size());
  Vector x(trace_size_ + rank);
  if (trace_size_ > 0) {
    const Matrix t = trace2(f, u);
    const auto& w1 = f.grid.axis1().weights;
    for (Index i = 0; i < t.cols(); ++i) x.segment(i * f.m2, f.m2) = std::sqrt(w1[i]) * t.col(i);
  }
  for (Index r = 0; r < rank; ++r) {
    x(trace_size_ + r) = rank_scale_[r] * functional(f, f.rank_g[r], u);
  }
  return x;
}

GridFunction FredholmSystem::expand(const NodalFactors& f, const Vector& x) const {
  GridFunction out(f.grid, f.m);
  if (trace_size_ > 0) {
    const auto& w1 = f.grid.axis1().weights;
    Matrix t(f.m2, f.grid.n1());
    for (Index i = 0; i < t.cols(); ++i) t.col(i) = x.segment(i * f.m2, f.m2) / std::sqrt(w1[i]);
    out = Complex(-1.0) * apply_s2(f, d1_from_trace(f, t));
  }
  for (std::size_t r = 0; r < rank_scale_.size(); ++r) {
    out.values() += r_of_f_[r].values() * (x(trace_size_ + static_cast<Index>(r)) / rank_scale_[r]);
  }
  return out;
}

double FredholmSystem::smallest_singular_value() const {
  if (singular_values_.size() == 0) return 1.0;
  return singular_values_(singular_values_.size() - 1);
}

double FredholmSystem::condition_number() const {
  if (singular_values_.size() == 0) return 1.0;
  const double smin = smallest_singular_value();
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return singular_values_(0) / smin;
}

int FredholmSystem::small_singular_values(double threshold) const {
  int count = 0;
  for (Index i = 0; i < singular_values_.size(); ++i) count += singular_values_(i) < threshold;
  return count;
}

GridFunction FredholmSystem::solve(const NodalFactors& f, const GridFunction& y) const {
  if (matrix_.size() == 0) return y;
  if (form_ == Form::dense) {
    const QuadratureGrid& g = f.grid;
    const Index dim = f.m * g.size();
    Vector rhs(dim);
    const Eigen::Map<const Vector> yv(y.values().data(), dim);
    for (Index k = 0; k < dim; ++k) rhs(k) = std::sqrt(g.weight(k / f.m)) * yv(k);
    const Vector z = lu_.solve(rhs);
    GridFunction out(g, f.m);
    for (Index k = 0; k < dim; ++k) out.values().data()[k] = z(k) / std::sqrt(g.weight(k / f.m));
    return out;
  }
  // Woodbury: (I + U V)^{-1} y = y - U (I + V U)^{-1} V y
  const Vector z = lu_.solve(reduce(f, y));
  return y - expand(f, z);
}

}  // namespace crossdefect
