#include "crossdefect/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace crossdefect {

Axis axis_from_int(int axis) {
  if (axis == 1) return Axis::first;
  if (axis == 2) return Axis::second;
  throw std::invalid_argument("axis must be 1 or 2, got " + std::to_string(axis));
}

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be positive");
  // legendre_p_zeros returns the non-negative zeros in increasing order.
  const std::vector<double> half = boost::math::legendre_p_zeros<double>(order);
  std::vector<double> x;
  x.reserve(order);
  for (auto it = half.rbegin(); it != half.rend(); ++it) {
    if (*it != 0.0) x.push_back(-*it);
  }
  for (double z : half) x.push_back(z);

  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  double sum = 0.0;
  for (int i = 0; i < order; ++i) {
    const double dp = boost::math::legendre_p_prime(order, x[i]);
    const double w = 2.0 / ((1.0 - x[i] * x[i]) * dp * dp);
    rule.nodes[i] = 0.5 * (x[i] + 1.0);
    rule.weights[i] = 0.5 * w;
    sum += rule.weights[i];
  }
  // Renormalise away the last ulp so the weights sum to one.
  for (double& w : rule.weights) w /= sum;
  return rule;
}

namespace {

struct Panel {
  double a;
  double b;
  Matrix value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod_panel(const std::function<Matrix(double)>& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  const Matrix center = f(mid);
  Matrix kronrod = wk[0] * center;
  Matrix gauss = wg[0] * center;
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const Matrix sum = f(mid - half * xk[i]) + f(mid + half * xk[i]);
    kronrod += wk[i] * sum;
    // Even Kronrod indices coincide with the 7-point Gauss nodes.
    if (i % 2 == 0) gauss += wg[i / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, (kronrod - gauss).norm()};
}

}  // namespace

AdaptiveResult integrate_adaptive(const std::function<Matrix(double)>& integrand, double a,
                                  double b, const AdaptiveOptions& options) {
  std::priority_queue<Panel> queue;
  const int initial = std::max(1, options.initial_panels);
  Matrix total;
  double error = 0.0;
  for (int p = 0; p < initial; ++p) {
    const double lo = a + (b - a) * p / initial;
    const double hi = a + (b - a) * (p + 1) / initial;
    Panel panel = gauss_kronrod_panel(integrand, lo, hi);
    total = p == 0 ? panel.value : Matrix(total + panel.value);
    error += panel.error;
    queue.push(std::move(panel));
  }

  int panels = initial;
  auto target = [&] { return std::max(options.abs_tol, options.rel_tol * total.norm()); };
  while (error > target() && panels < options.max_panels) {
    Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    // Below this width the Kronrod nodes start to round onto the panel ends.
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max({1.0, std::abs(worst.a), std::abs(worst.b)});
    if (!(worst.b - worst.a > floor)) {
      queue.push(std::move(worst));
      break;
    }
    Panel left = gauss_kronrod_panel(integrand, worst.a, mid);
    Panel right = gauss_kronrod_panel(integrand, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    queue.push(std::move(left));
    queue.push(std::move(right));
    ++panels;
  }

  // Re-sum to shed the drift of the incremental updates.
  Matrix resummed = Matrix::Zero(total.rows(), total.cols());
  double resummed_error = 0.0;
  while (!queue.empty()) {
    resummed += queue.top().value;
    resummed_error += queue.top().error;
    queue.pop();
  }
  AdaptiveResult result;
  result.value = std::move(resummed);
  result.error_estimate = resummed_error;
  result.panels = panels;
  result.converged = resummed_error <= std::max(options.abs_tol, options.rel_tol * result.value.norm());
  return result;
}

}  // namespace crossdefect
