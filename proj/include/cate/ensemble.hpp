#pragma once

// Super-learner stacking: out-of-fold predictions of every candidate are
// combined with simplex weights chosen by constrained least squares.

#include <optional>
#include <vector>

#include "cate/learners.hpp"

namespace cate {

struct StackOptions {
  int folds = 5;
  ClipBounds clip;
};

struct StackedModel {
  std::vector<LearnerSpec> specs;
  // Refit on the full data. Members with zero weight are not refit and stay empty.
  std::vector<std::optional<FittedLearner>> members;
  Vector weights;
  Vector cv_risks;         // per-member weighted CV mean squared error
  double stack_cv_risk = 0.0;
  Task task = Task::Regression;
  ClipBounds clip;
  Index num_features = 0;
};

// Minimises sum_i w_i (Z_i a - y_i)^2 over the probability simplex. Exact for
// up to 16 columns (support enumeration). Ties between equally good supports
// resolve to the largest support, so identical columns share weight equally.
Vector simplex_least_squares(const Matrix& z, const Vector& y, const Vector* row_weights = nullptr);

// Throws InvalidArgument for an empty spec list or fewer than 10 rows.
StackedModel fit_stack(const std::vector<LearnerSpec>& specs, const Matrix& x, const Vector& y, Task task,
                       std::uint64_t seed, const Vector* row_weights = nullptr, const StackOptions& opts = {});

Vector predict_stack(const StackedModel& m, const Matrix& x);

// Column j holds member j's predictions; only non-zero weights are evaluated.
Matrix member_predictions(const StackedModel& m, const Matrix& x);

// Adapts a stacked model to the Model interface.
ModelPtr as_model(StackedModel m);

}  // namespace cate
