#pragma once

// Base regression learners: mean, linear model, L1-penalised linear model,
// random forest and gradient-boosted trees. Every learner accepts optional
// positive row weights and minimises a weighted squared loss.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cate/common.hpp"

namespace cate {

// Anything fitted that maps covariate rows to predictions.
class Model {
 public:
  virtual ~Model() = default;
  virtual Vector predict(const Matrix& x) const = 0;
  virtual Index num_features() const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

enum class LearnerKind { Mean, Linear, L1Linear, RandomForest, BoostedTrees };
enum class Task { Regression, Probability };

std::string to_string(LearnerKind k);
std::optional<LearnerKind> parse_learner_kind(const std::string& s);

struct ForestParams {
  int trees = 200;
  int mtry = 0;  // 0: ceil(p / 3)
  int min_leaf = 5;
  int max_depth = -1;  // -1: unbounded
  bool bootstrap = true;
  int max_bins = 256;
};

struct BoostingParams {
  int rounds = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 5;
  double holdout_fraction = 0.2;  // 0 disables early stopping
  int patience = 10;
  int max_bins = 256;
};

struct LassoParams {
  int n_lambda = 50;
  double lambda_min_ratio = 0.0;  // 0: 1e-4 if n > p else 1e-2
  std::vector<double> lambda_grid;  // explicit, strictly decreasing; overrides n_lambda
  int cv_folds = 5;
  double tolerance = 1e-9;
  int max_sweeps = 10000;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Mean;
  ForestParams forest;
  BoostingParams boosting;
  LassoParams lasso;
  std::uint64_t seed = 0;
};

// Throws InvalidArgument when a hyperparameter is out of range.
void validate(const LearnerSpec& spec);

struct ClipBounds {
  double lo = 0.01;
  double hi = 0.99;
};

class FittedLearner {
 public:
  FittedLearner(LearnerSpec spec, Task task, ClipBounds clip, ModelPtr model);

  const LearnerSpec& spec() const { return spec_; }
  Task task() const { return task_; }
  const ClipBounds& clip() const { return clip_; }
  Index num_features() const { return model_->num_features(); }
  const Model& model() const { return *model_; }
  ModelPtr model_ptr() const { return model_; }

 private:
  LearnerSpec spec_;
  Task task_;
  ClipBounds clip_;
  ModelPtr model_;
};

// Fits one learner. weights, when given, must be positive and have one entry
// per row. Probability-task targets must be 0/1.
FittedLearner fit(const LearnerSpec& spec, const Matrix& x, const Vector& y, Task task = Task::Regression,
                  const Vector* weights = nullptr, ClipBounds clip = {});

// Probability-task predictions are clipped into [clip.lo, clip.hi].
Vector predict(const FittedLearner& m, const Matrix& x);

void check_columns(const Model& m, const Matrix& x);
Vector clip(Vector v, ClipBounds bounds);

// Fitted state exposed for inspection in tests.
struct LinearState {
  double intercept = 0.0;
  Vector coefficients;
  double lambda = 0.0;  // selected penalty, 0 for OLS
};
const LinearState* linear_state(const FittedLearner& m);

// Per-round weighted training loss on the fitting rows of a boosted model.
const std::vector<double>* boosting_loss_history(const FittedLearner& m);

// Assigns rows to k folds from a hash of their contents, so the layout does
// not depend on row order. Fold sizes differ by at most one.
std::vector<int> content_folds(const Matrix& x, const Vector& y, int k, std::uint64_t seed);

}  // namespace cate
