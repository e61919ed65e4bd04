#include "cate/lasso.hpp"

#include <algorithm>
#include <cmath>

namespace cate {

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

int l1_coordinate_descent_gram(const Matrix& gram, const Vector& xty, double lambda, Vector& beta,
                               const CoordinateDescentOptions& opts) {
  const Index p = gram.rows();
  if (gram.cols() != p || xty.size() != p) throw DimensionError("gram/xty dimension mismatch");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and >= 0");
  if (!gram.allFinite() || !xty.allFinite()) throw InvalidArgument("non-finite input to coordinate descent");
  if (beta.size() != p) beta = Vector::Zero(p);

  // fitted = G beta, kept in sync after every coordinate update.
  Vector fitted = gram * beta;
  const double scale = std::max(1.0, xty.cwiseAbs().maxCoeff());
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) {
        if (beta(j) != 0.0) {
          fitted -= gram.col(j) * beta(j);
          beta(j) = 0.0;
        }
        continue;
      }
      const double old = beta(j);
      const double z = xty(j) - fitted(j) + gjj * old;
      const double updated = soft_threshold(z, lambda) / gjj;
      const double delta = updated - old;
      if (delta != 0.0) {
        fitted += gram.col(j) * delta;
        beta(j) = updated;
        max_change = std::max(max_change, gjj * std::abs(delta));
      }
    }
    if (max_change <= opts.tolerance * scale) break;
  }
  return sweep + 1;
}

Vector l1_coordinate_descent(const Matrix& x, const Vector& y, double lambda, const CoordinateDescentOptions& opts) {
  if (x.rows() != y.size()) throw DimensionError("x rows and y length differ");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("non-finite input to coordinate descent");
  const Matrix gram = x.transpose() * x;
  const Vector xty = x.transpose() * y;
  Vector beta = Vector::Zero(x.cols());
  l1_coordinate_descent_gram(gram, xty, lambda, beta, opts);
  return beta;
}

double l1_kkt_violation(const Matrix& x, const Vector& y, const Vector& beta, double lambda) {
  const Vector grad = x.transpose() * (y - x * beta);
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (x.col(j).squaredNorm() == 0.0) continue;
    const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - lambda)
                                    : std::abs(grad(j) - (beta(j) > 0 ? lambda : -lambda));
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace cate
