#pragma once

#include <functional>
#include <vector>

#include "crossdefect/types.hpp"

namespace crossdefect {

/// Nodes and weights of a one-dimensional rule on [0,1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] Index size() const { return static_cast<Index>(nodes.size()); }
};

/// Gauss-Legendre rule with `order` nodes mapped to [0,1]; weights sum to one.
QuadratureRule gauss_legendre(int order);

struct AdaptiveOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int initial_panels = 8;
  int max_panels = 4000;
};

struct AdaptiveResult {
  Matrix value;
  double error_estimate = 0.0;
  int panels = 0;
  bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration of a matrix-valued integrand
/// over [a,b]. The panel with the largest error estimate is bisected until the total
/// estimate drops below max(abs_tol, rel_tol * |value|) in the Frobenius norm.
AdaptiveResult integrate_adaptive(const std::function<Matrix(double)>& integrand, double a,
                                  double b, const AdaptiveOptions& options = {});

}  // namespace crossdefect
