#pragma once

// Pseudo-outcomes and weights of the T-, DR-, R- and X-learner, and the
// final weighted regression of a pseudo-outcome on the covariates.
//
//   T : psi = mu1 - mu0
//   DR: psi = mu1 - mu0 + d (y - mu1) / e - (1 - d) (y - mu0) / (1 - e)
//   R : psi = (y - mu) / (d - e),  weight (d - e)^2
//   X : psi1 = y - mu0 on treated rows, psi0 = mu1 - y on control rows,
//       tau = e * tau0 + (1 - e) * tau1

#include <optional>
#include <string>
#include <vector>

#include "cate/ensemble.hpp"

namespace cate {

enum class MetaLearner { T, DR, R, X };

std::string to_string(MetaLearner m);
std::optional<MetaLearner> parse_metalearner(const std::string& s);

enum class TreatmentGroup { Control, Treated };

struct NuisancePredictions {
  Vector mu0;
  Vector mu1;
  Vector mu;
  Vector e;
};

struct PseudoOutcome {
  Vector psi;
  Vector weights;
  std::optional<TreatmentGroup> group;
};

struct XPseudoOutcomes {
  PseudoOutcome treated;
  RowIds treated_rows;  // positions in the input vectors
  PseudoOutcome control;
  RowIds control_rows;
};

PseudoOutcome pseudo_T(const Vector& mu0, const Vector& mu1);
PseudoOutcome pseudo_DR(const Vector& y, const Vector& d, const Vector& mu0, const Vector& mu1, const Vector& e);
PseudoOutcome pseudo_R(const Vector& y, const Vector& d, const Vector& mu, const Vector& e);
// Throws DegenerateFoldError if either group is empty.
XPseudoOutcomes pseudo_X(const Vector& y, const Vector& d, const Vector& mu0, const Vector& mu1);
Vector blend_X(const Vector& tau0, const Vector& tau1, const Vector& g);

// Candidate learners and numerical guards shared by every fit in a run.
struct LearnerConfig {
  std::vector<LearnerSpec> candidates;
  ClipBounds clip;
  int stack_folds = 5;

  StackOptions stack_options() const { return {stack_folds, clip}; }
};

struct LearnerProfile {
  ForestParams forest;
  BoostingParams boosting;
  LassoParams lasso;
};

// Mean, linear, lasso, forest and boosting; the linear pair is dropped when
// exclude_linear is set.
LearnerConfig default_learner_config(bool exclude_linear = false, const LearnerProfile& profile = {});

// Reduced tree and path sizes for quick runs.
LearnerProfile desk_profile();

// Fits the stacked ensemble to (x, psi) with row weights psi.weights.
StackedModel final_stage(const PseudoOutcome& psi, const Matrix& x, const LearnerConfig& config,
                         std::uint64_t seed);

}  // namespace cate
