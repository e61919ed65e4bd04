#pragma once

// Estimation strategies: nuisances are trained on their role folds, the
// pseudo-outcome is built and regressed on the estimation fold, and fold
// models are combined by cross-fit mean, by concatenating out-of-fold
// pseudo-outcomes (combined), or by the element-wise median over repeated
// partitions.

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "cate/metalearners.hpp"
#include "cate/splitter.hpp"

namespace cate {

struct DataView {
  const Matrix& x;
  const Vector& d;
  const Vector& y;

  Index size() const { return x.rows(); }
};

enum class NuisanceKind { Mu0, Mu1, Mu, Propensity };
std::string to_string(NuisanceKind k);

// Produces fitted nuisance functions from training rows.
class NuisanceSource {
 public:
  virtual ~NuisanceSource() = default;
  virtual ModelPtr fit(NuisanceKind kind, const Matrix& x, const Vector& target, std::uint64_t seed) const = 0;
};

// Default source: the stacked ensemble over the configured candidates.
class StackedNuisances final : public NuisanceSource {
 public:
  explicit StackedNuisances(LearnerConfig config) : config_(std::move(config)) {}
  ModelPtr fit(NuisanceKind kind, const Matrix& x, const Vector& target, std::uint64_t seed) const override;

 private:
  LearnerConfig config_;
};

// Ignores the training data and returns fixed functions, e.g. the true
// nuisances of a simulated design.
class FixedNuisances final : public NuisanceSource {
 public:
  using Function = std::function<Vector(const Matrix&)>;
  FixedNuisances(Index p, Function mu0, Function mu1, Function mu, Function propensity);
  ModelPtr fit(NuisanceKind kind, const Matrix& x, const Vector& target, std::uint64_t seed) const override;

 private:
  Index p_;
  Function mu0_, mu1_, mu_, propensity_;
};

ModelPtr function_model(Index p, std::function<Vector(const Matrix&)> f);

struct EngineConfig {
  LearnerConfig learners;
  std::shared_ptr<const NuisanceSource> nuisances;  // null: StackedNuisances(learners)
  int b_iterations = 20;
  int min_group_rows = 10;  // per treatment group, for mu0/mu1 and X-learner psi regressions
};

// Row-level bookkeeping of one rotation.
struct NuisanceAudit {
  NuisanceKind kind;
  RowIds training_rows;
};

struct RotationAudit {
  RowIds estimation_rows;
  std::vector<NuisanceAudit> nuisances;
  bool naive = false;
};

struct StackLog {
  std::string label;
  std::vector<std::string> members;
  std::vector<double> weights;
};

struct PsiSummary {
  std::string label;
  Index n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct FitDiagnostics {
  std::vector<RotationAudit> rotations;
  std::vector<std::uint64_t> fold_seeds;
  std::vector<StackLog> stacks;
  std::vector<PsiSummary> psi;
  int aborted_iterations = 0;
};

// Nuisance training rows that intersect their rotation's estimation rows.
std::size_t count_leakage(const FitDiagnostics& diag);

// A fitted CATE function from one rotation (or one combined fit).
class FoldModel {
 public:
  static FoldModel direct(ModelPtr tau);
  static FoldModel blended(ModelPtr tau0, ModelPtr tau1, ModelPtr propensity);

  Vector predict(const Matrix& x) const;

 private:
  ModelPtr tau_;
  ModelPtr tau0_;
  ModelPtr tau1_;
  ModelPtr propensity_;
};

class CateModel {
 public:
  struct Single {
    FoldModel model;
  };
  struct CrossFitMean {
    std::vector<FoldModel> folds;
  };
  struct MedianOf {
    std::vector<CateModel> members;
  };
  struct Metadata {
    MetaLearner learner = MetaLearner::DR;
    Strategy strategy = Strategy::Naive;
    std::uint64_t seed = 0;
  };

  CateModel(Single s, Metadata meta) : variant_(std::move(s)), meta_(meta) {}
  CateModel(CrossFitMean s, Metadata meta) : variant_(std::move(s)), meta_(meta) {}
  CateModel(MedianOf s, Metadata meta) : variant_(std::move(s)), meta_(meta) {}

  const std::variant<Single, CrossFitMean, MedianOf>& variant() const { return variant_; }
  const Metadata& metadata() const { return meta_; }

 private:
  std::variant<Single, CrossFitMean, MedianOf> variant_;
  Metadata meta_;
};

Vector predict(const CateModel& model, const Matrix& x);

// Predictions of each member of a MedianOf model, one column per member.
Matrix median_member_predictions(const CateModel& model, const Matrix& x);

// Column-wise mean (cross-fit) and element-wise median of a prediction matrix.
Vector row_means(const Matrix& columns);
Vector row_medians(const Matrix& columns);

// T-learner has no propensity and so no double split or combined strategy.
bool supports(MetaLearner learner, Strategy strategy);

// One rotation: nuisances on their role folds, pseudo-outcome and final stage on
// the estimation folds.
FoldModel fit_single(DataView data, MetaLearner learner, const FoldPlan& plan, const RoleAssignment& roles,
                     const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag = nullptr);

// Cross-fit average over every rotation of a CF strategy.
CateModel fit_crossfit(DataView data, MetaLearner learner, Strategy strategy, const EngineConfig& config,
                       std::uint64_t seed, FitDiagnostics* diag = nullptr);
CateModel fit_crossfit(DataView data, MetaLearner learner, Strategy strategy, const FoldPlan& plan,
                       const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag = nullptr);

// 5-fold out-of-fold pseudo-outcomes, concatenated and regressed once.
CateModel fit_combined(DataView data, MetaLearner learner, const EngineConfig& config, std::uint64_t seed,
                       FitDiagnostics* diag = nullptr);
CateModel fit_combined(DataView data, MetaLearner learner, const FoldPlan& plan, const EngineConfig& config,
                       std::uint64_t seed, FitDiagnostics* diag = nullptr);

// Median over b_iterations repartitions of a cross-fit or combined strategy.
CateModel fit_median(DataView data, MetaLearner learner, Strategy strategy, int b_iterations,
                     const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag = nullptr);

// Dispatches any of the twelve strategies.
CateModel fit_estimator(DataView data, MetaLearner learner, Strategy strategy, const EngineConfig& config,
                        std::uint64_t seed, FitDiagnostics* diag = nullptr);

}  // namespace cate
