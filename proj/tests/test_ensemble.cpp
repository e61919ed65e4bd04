#include <gtest/gtest.h>

#include <cmath>

#include "cate/ensemble.hpp"

using namespace cate;

namespace {

Matrix gaussian(Index n, Index p, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix m(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = z(rng);
  return m;
}

LearnerSpec small(LearnerKind kind) {
  LearnerSpec s;
  s.kind = kind;
  s.forest.trees = 20;
  s.boosting.rounds = 40;
  s.lasso.n_lambda = 15;
  return s;
}

std::vector<LearnerSpec> library() {
  return {small(LearnerKind::Mean), small(LearnerKind::Linear), small(LearnerKind::L1Linear),
          small(LearnerKind::RandomForest), small(LearnerKind::BoostedTrees)};
}

// Brute-force check on a grid over the 2-simplex.
double grid_min(const Matrix& z, const Vector& y) {
  double best = std::numeric_limits<double>::infinity();
  const int steps = 400;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; a + b <= steps; ++b) {
      Vector w(3);
      w << a, b, steps - a - b;
      w /= steps;
      best = std::min(best, (z * w - y).squaredNorm());
    }
  return best;
}

}  // namespace

TEST(SimplexLeastSquares, FeasibleAndNoWorseThanGrid) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Matrix z = gaussian(30, 3, rng);
    const Vector y = gaussian(30, 1, rng).col(0);
    const Vector w = simplex_least_squares(z, y);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    EXPECT_GE(w.minCoeff(), 0.0);
    EXPECT_LE((z * w - y).squaredNorm(), grid_min(z, y) + 1e-12);
  }
}

TEST(SimplexLeastSquares, VertexWhenOneColumnIsExact) {
  Rng rng(2);
  Matrix z = gaussian(25, 4, rng);
  const Vector y = z.col(2);
  const Vector w = simplex_least_squares(z, y);
  EXPECT_NEAR(w(2), 1.0, 1e-10);
}

TEST(SimplexLeastSquares, IdenticalConstantColumnsGiveUniformWeights) {
  const Matrix z = Matrix::Constant(12, 3, 2.0);
  const Vector y = Vector::LinSpaced(12, 0, 4);
  const Vector w = simplex_least_squares(z, y);
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(w(j), 1.0 / 3.0, 1e-12);
}

TEST(SimplexLeastSquares, RowWeightsMatter) {
  Matrix z(2, 2);
  z << 0, 1, 1, 0;
  Vector y(2);
  y << 0, 1;  // column 0 fits exactly
  Vector rw(2);
  rw << 1, 1;
  EXPECT_NEAR(simplex_least_squares(z, y, &rw)(0), 1.0, 1e-12);
}

TEST(Stack, SingleMemberGetsFullWeight) {
  Rng rng(3);
  const Matrix x = gaussian(40, 2, rng);
  const Vector y = gaussian(40, 1, rng).col(0);
  const auto m = fit_stack({small(LearnerKind::RandomForest)}, x, y, Task::Regression, 5);
  ASSERT_EQ(m.weights.size(), 1);
  EXPECT_EQ(m.weights(0), 1.0);
}

TEST(Stack, LinearDominatesOnNoiselessLinearData) {
  Rng rng(4);
  const Matrix x = gaussian(60, 3, rng);
  const Vector y = 2.0 * x.col(0) - x.col(2);
  const auto m = fit_stack({small(LearnerKind::Mean), small(LearnerKind::Linear)}, x, y, Task::Regression, 6);
  EXPECT_GE(m.weights(1), 0.99);
}

TEST(Stack, SimplexAndDominanceOnRandomData) {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const Matrix x = gaussian(80, 4, rng);
    const Vector y = x.col(0).array().sin() + 0.5 * gaussian(80, 1, rng).col(0).array();
    const auto m = fit_stack(library(), x, y, Task::Regression, static_cast<std::uint64_t>(t));
    EXPECT_NEAR(m.weights.sum(), 1.0, 1e-9);
    EXPECT_GE(m.weights.minCoeff(), 0.0);
    EXPECT_LE(m.stack_cv_risk, m.cv_risks.minCoeff() + 1e-9);
  }
}

TEST(Stack, PredictionIsConvexCombination) {
  Rng rng(6);
  const Matrix x = gaussian(80, 3, rng);
  const Vector y = x.col(0) + gaussian(80, 1, rng).col(0);
  const auto m = fit_stack(library(), x, y, Task::Regression, 11);
  const Matrix probe = gaussian(30, 3, rng);
  const Matrix members = member_predictions(m, probe);
  const Vector pred = predict_stack(m, probe);
  EXPECT_LT((pred - members * m.weights).cwiseAbs().maxCoeff(), 1e-12);
  for (Index i = 0; i < probe.rows(); ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Index j = 0; j < members.cols(); ++j) {
      if (m.weights(j) <= 0.0) continue;
      lo = std::min(lo, members(i, j));
      hi = std::max(hi, members(i, j));
    }
    EXPECT_GE(pred(i), lo - 1e-12);
    EXPECT_LE(pred(i), hi + 1e-12);
  }
}

TEST(Stack, HandSetWeights) {
  Rng rng(7);
  const Matrix x = gaussian(20, 1, rng);
  Vector y1 = Vector::Constant(20, 1.0), y3 = Vector::Constant(20, 3.0);
  StackedModel m;
  m.specs = {small(LearnerKind::Mean), small(LearnerKind::Mean)};
  m.members = {fit(m.specs[0], x, y1), fit(m.specs[1], x, y3)};
  m.weights = Vector::Constant(2, 0.5);
  m.num_features = 1;
  EXPECT_DOUBLE_EQ(predict_stack(m, x)(0), 2.0);
  m.weights << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(predict_stack(m, x)(0), 3.0);
}

TEST(Stack, DeterministicAndPermutationEquivariant) {
  Rng rng(8);
  const Matrix x = gaussian(70, 3, rng);
  const Vector y = x.col(1).array().square() + gaussian(70, 1, rng).col(0).array();
  const auto specs = library();
  const auto a = fit_stack(specs, x, y, Task::Regression, 21);
  const auto b = fit_stack(specs, x, y, Task::Regression, 21);
  EXPECT_EQ(a.weights, b.weights);
  const std::vector<LearnerSpec> reversed(specs.rbegin(), specs.rend());
  const auto c = fit_stack(reversed, x, y, Task::Regression, 21);
  for (Index j = 0; j < 5; ++j) EXPECT_NEAR(a.weights(j), c.weights(4 - j), 1e-9);
  EXPECT_LT((predict_stack(a, x) - predict_stack(c, x)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Stack, ProbabilityOutputClipped) {
  Rng rng(9);
  const Matrix x = gaussian(100, 2, rng);
  Vector d(100);
  for (Index i = 0; i < 100; ++i) d(i) = x(i, 0) > 0.0 ? 1.0 : 0.0;
  const auto m = fit_stack(library(), x, d, Task::Probability, 3);
  const Vector e = predict_stack(m, 10.0 * gaussian(50, 2, rng));
  EXPECT_GE(e.minCoeff(), 0.01);
  EXPECT_LE(e.maxCoeff(), 0.99);
}

TEST(Stack, UnitRowWeightsMatchUnweighted) {
  Rng rng(10);
  const Matrix x = gaussian(50, 2, rng);
  const Vector y = x.col(0) + gaussian(50, 1, rng).col(0);
  const Vector ones = Vector::Ones(50);
  const auto a = fit_stack(library(), x, y, Task::Regression, 4);
  const auto b = fit_stack(library(), x, y, Task::Regression, 4, &ones);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(predict_stack(a, x), predict_stack(b, x));
}

TEST(Stack, Errors) {
  const Matrix x = Matrix::Random(9, 2);
  const Vector y = Vector::Random(9);
  EXPECT_THROW(fit_stack({small(LearnerKind::Mean)}, x, y, Task::Regression, 1), InvalidArgument);
  EXPECT_THROW(fit_stack({}, Matrix::Random(20, 2), Vector::Random(20), Task::Regression, 1), InvalidArgument);
  const auto m = fit_stack({small(LearnerKind::Mean)}, Matrix::Random(20, 2), Vector::Random(20), Task::Regression, 1);
  EXPECT_THROW(predict_stack(m, Matrix::Random(3, 4)), DimensionError);
}
