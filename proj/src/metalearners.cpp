#include "cate/metalearners.hpp"

#include <cmath>

namespace cate {

namespace {

void same_length(std::initializer_list<const Vector*> vs) {
  const Index n = (*vs.begin())->size();
  for (const Vector* v : vs)
    if (v->size() != n) throw DimensionError("pseudo-outcome inputs have different lengths");
}

void check_probabilities(const Vector& e) {
  for (Index i = 0; i < e.size(); ++i) {
    if (!(e(i) > 0.0 && e(i) < 1.0)) throw InvalidArgument("propensity estimate outside (0, 1); clipping was bypassed");
  }
}

}  // namespace

std::string to_string(MetaLearner m) {
  switch (m) {
    case MetaLearner::T: return "t";
    case MetaLearner::DR: return "dr";
    case MetaLearner::R: return "r";
    case MetaLearner::X: return "x";
  }
  return "?";
}

std::optional<MetaLearner> parse_metalearner(const std::string& s) {
  for (auto m : {MetaLearner::T, MetaLearner::DR, MetaLearner::R, MetaLearner::X})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

PseudoOutcome pseudo_T(const Vector& mu0, const Vector& mu1) {
  same_length({&mu0, &mu1});
  return {mu1 - mu0, Vector::Ones(mu0.size()), std::nullopt};
}

PseudoOutcome pseudo_DR(const Vector& y, const Vector& d, const Vector& mu0, const Vector& mu1, const Vector& e) {
  same_length({&y, &d, &mu0, &mu1, &e});
  check_probabilities(e);
  const auto dd = d.array();
  Vector psi = (mu1 - mu0).array() + dd * (y - mu1).array() / e.array() -
               (1.0 - dd) * (y - mu0).array() / (1.0 - e.array());
  return {std::move(psi), Vector::Ones(y.size()), std::nullopt};
}

PseudoOutcome pseudo_R(const Vector& y, const Vector& d, const Vector& mu, const Vector& e) {
  same_length({&y, &d, &mu, &e});
  check_probabilities(e);
  const Vector resid_d = d - e;
  Vector psi = (y - mu).array() / resid_d.array();
  return {std::move(psi), resid_d.cwiseAbs2(), std::nullopt};
}

XPseudoOutcomes pseudo_X(const Vector& y, const Vector& d, const Vector& mu0, const Vector& mu1) {
  same_length({&y, &d, &mu0, &mu1});
  XPseudoOutcomes out;
  for (Index i = 0; i < y.size(); ++i) (d(i) == 1.0 ? out.treated_rows : out.control_rows).push_back(i);
  if (out.treated_rows.empty() || out.control_rows.empty()) {
    throw DegenerateFoldError("X-learner needs both treated and control rows");
  }
  const auto nt = static_cast<Index>(out.treated_rows.size());
  const auto nc = static_cast<Index>(out.control_rows.size());
  out.treated = {Vector(nt), Vector::Ones(nt), TreatmentGroup::Treated};
  out.control = {Vector(nc), Vector::Ones(nc), TreatmentGroup::Control};
  for (Index k = 0; k < nt; ++k) {
    const Index i = out.treated_rows[static_cast<std::size_t>(k)];
    out.treated.psi(k) = y(i) - mu0(i);
  }
  for (Index k = 0; k < nc; ++k) {
    const Index i = out.control_rows[static_cast<std::size_t>(k)];
    out.control.psi(k) = mu1(i) - y(i);
  }
  return out;
}

Vector blend_X(const Vector& tau0, const Vector& tau1, const Vector& g) {
  same_length({&tau0, &tau1, &g});
  for (Index i = 0; i < g.size(); ++i)
    if (!(g(i) >= 0.0 && g(i) <= 1.0)) throw InvalidArgument("blend weight outside [0, 1]");
  return (g.array() * tau0.array() + (1.0 - g.array()) * tau1.array()).matrix();
}

LearnerConfig default_learner_config(bool exclude_linear, const LearnerProfile& profile) {
  LearnerConfig config;
  auto add = [&](LearnerKind kind) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.forest = profile.forest;
    spec.boosting = profile.boosting;
    spec.lasso = profile.lasso;
    config.candidates.push_back(spec);
  };
  add(LearnerKind::Mean);
  if (!exclude_linear) {
    add(LearnerKind::Linear);
    add(LearnerKind::L1Linear);
  }
  add(LearnerKind::RandomForest);
  add(LearnerKind::BoostedTrees);
  return config;
}

LearnerProfile desk_profile() {
  LearnerProfile p;
  p.forest.trees = 50;
  p.boosting.rounds = 100;
  p.lasso.n_lambda = 20;
  return p;
}

StackedModel final_stage(const PseudoOutcome& psi, const Matrix& x, const LearnerConfig& config,
                         std::uint64_t seed) {
  if (psi.psi.size() == 0) throw InvalidArgument("final stage on an empty pseudo-outcome");
  if (psi.psi.size() != x.rows() || psi.weights.size() != x.rows()) throw DimensionError("pseudo-outcome rows differ from x");
  if (!psi.psi.allFinite()) throw InvalidArgument("non-finite pseudo-outcome");
  return fit_stack(config.candidates, x, psi.psi, Task::Regression, seed, &psi.weights, config.stack_options());
}

}  // namespace cate
