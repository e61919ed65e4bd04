#pragma once

#include "cate/common.hpp"

namespace cate {

struct CoordinateDescentOptions {
  double tolerance = 1e-12;
  int max_sweeps = 100000;
};

double soft_threshold(double z, double lambda);

// Minimises 0.5 * ||y - X b||^2 + lambda * ||b||_1 (no intercept, columns as
// given) by cyclic coordinate descent. The solution satisfies
//   |x_j'(y - X b)| <= lambda          for b_j == 0
//   x_j'(y - X b)  == sign(b_j) lambda for b_j != 0.
// Zero columns get coefficient 0.
Vector l1_coordinate_descent(const Matrix& x, const Vector& y, double lambda,
                             const CoordinateDescentOptions& opts = {});

// Same problem expressed through the Gram matrix G = X'X and c = X'y.
// `beta` is used as a warm start and overwritten. Returns the sweep count.
int l1_coordinate_descent_gram(const Matrix& gram, const Vector& xty, double lambda, Vector& beta,
                               const CoordinateDescentOptions& opts = {});

// Largest violation of the stationarity conditions above.
double l1_kkt_violation(const Matrix& x, const Vector& y, const Vector& beta, double lambda);

}  // namespace cate
