#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "crossdefect/defect_operator.hpp"

namespace crossdefect::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Complex normal_complex(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return {n(rng), n(rng)};
}

// Random trigonometric polynomial with frequencies in {-1, 0, 1}^2.
inline MatrixFunction random_function(Index rows, Index cols, std::mt19937_64& rng) {
  std::vector<Matrix> coef;
  for (int c = 0; c < 9; ++c) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = 0.5 * normal_complex(rng);
    coef.push_back(m);
  }
  return MatrixFunction(rows, cols, [coef, rows, cols](double k1, double k2) {
    Matrix v = Matrix::Zero(rows, cols);
    int c = 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) v += std::polar(1.0, kTwoPi * (a * k1 + b * k2)) * coef[c++];
    return v;
  });
}

inline CompactKernel random_kernel(Index m, std::mt19937_64& rng) {
  const MatrixFunction p = random_function(m, m, rng);
  const MatrixFunction q = random_function(m, m, rng);
  CompactKernel k = CompactKernel::general(m, m, [p, q](const Point& x, const Point& y) -> Matrix {
    return p(x) * q(y) * std::cos(kTwoPi * (x.k1 - y.k2));
  });
  k.add_rank_one({random_function(m, 1, rng), random_function(1, m, rng)});
  return k;
}

inline DefectOperator random_operator(Index m, Index m1, Index m2, std::mt19937_64& rng,
                                      bool with_kernel = true) {
  return {random_function(m, m, rng),  random_function(m, m1, rng), random_function(m1, m, rng),
          random_function(m, m2, rng), random_function(m2, m, rng),
          with_kernel ? random_kernel(m, rng) : CompactKernel::zero(m, m)};
}

// sqrt(sum w |u|^2) of u - v relative to u.
inline double relative_difference(const GridFunction& a, const GridFunction& b) {
  return grid_norm(a - b) / grid_norm(b);
}

}  // namespace crossdefect::testing
