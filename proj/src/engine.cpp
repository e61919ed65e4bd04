#include "cate/engine.hpp"

#include <algorithm>
#include <cmath>

#include "cate/seeding.hpp"

namespace cate {

namespace {

class FunctionModel final : public Model {
 public:
  FunctionModel(Index p, std::function<Vector(const Matrix&)> f) : p_(p), f_(std::move(f)) {}
  Vector predict(const Matrix& x) const override {
    check_columns(*this, x);
    return f_(x);
  }
  Index num_features() const override { return p_; }

 private:
  Index p_;
  std::function<Vector(const Matrix&)> f_;
};

class AverageModel final : public Model {
 public:
  explicit AverageModel(std::vector<ModelPtr> parts) : parts_(std::move(parts)) {}
  Vector predict(const Matrix& x) const override {
    Vector out = Vector::Zero(x.rows());
    for (const auto& m : parts_) out += m->predict(x);
    return out / static_cast<double>(parts_.size());
  }
  Index num_features() const override { return parts_.front()->num_features(); }

 private:
  std::vector<ModelPtr> parts_;
};

bool needs_propensity(MetaLearner m) { return m != MetaLearner::T; }
bool needs_group_means(MetaLearner m) { return m != MetaLearner::R; }

std::uint64_t nuisance_key(NuisanceKind k) { return 100 + static_cast<std::uint64_t>(k); }

struct Nuisances {
  ModelPtr mu0, mu1, mu, e;
};

// Everything a rotation needs besides the plan: data, config and logging.
struct RotationContext {
  DataView data;
  MetaLearner learner;
  const EngineConfig& config;
  FitDiagnostics* diag;
  std::string label;
};

ModelPtr fit_nuisance(const RotationContext& ctx, NuisanceKind kind, const RowIds& rows, std::uint64_t seed,
                      RotationAudit& audit) {
  const Matrix x = take_rows(ctx.data.x, rows);
  const Vector target = kind == NuisanceKind::Propensity ? take_rows(ctx.data.d, rows) : take_rows(ctx.data.y, rows);
  audit.nuisances.push_back({kind, rows});
  if (ctx.config.nuisances) return ctx.config.nuisances->fit(kind, x, target, seed);
  const Task task = kind == NuisanceKind::Propensity ? Task::Probability : Task::Regression;
  StackedModel stack =
      fit_stack(ctx.config.learners.candidates, x, target, task, seed, nullptr, ctx.config.learners.stack_options());
  if (ctx.diag != nullptr) {
    StackLog log{ctx.label + ":" + to_string(kind), {}, {}};
    for (std::size_t j = 0; j < stack.specs.size(); ++j) {
      log.members.push_back(to_string(stack.specs[j].kind));
      log.weights.push_back(stack.weights(static_cast<Index>(j)));
    }
    ctx.diag->stacks.push_back(std::move(log));
  }
  return as_model(std::move(stack));
}

ModelPtr fit_final(const RotationContext& ctx, const std::string& what, const PseudoOutcome& psi, const Matrix& x,
                   std::uint64_t seed) {
  StackedModel stack = final_stage(psi, x, ctx.config.learners, seed);
  if (ctx.diag != nullptr) {
    StackLog log{ctx.label + ":" + what, {}, {}};
    for (std::size_t j = 0; j < stack.specs.size(); ++j) {
      log.members.push_back(to_string(stack.specs[j].kind));
      log.weights.push_back(stack.weights(static_cast<Index>(j)));
    }
    ctx.diag->stacks.push_back(std::move(log));
  }
  return as_model(std::move(stack));
}

void summarize_psi(const RotationContext& ctx, const std::string& what, const Vector& psi) {
  if (ctx.diag == nullptr || psi.size() == 0) return;
  PsiSummary s;
  s.label = ctx.label + ":" + what;
  s.n = psi.size();
  s.mean = psi.mean();
  s.sd = std::sqrt((psi.array() - s.mean).square().sum() / static_cast<double>(psi.size()));
  s.min = psi.minCoeff();
  s.max = psi.maxCoeff();
  ctx.diag->psi.push_back(s);
}

std::pair<RowIds, RowIds> split_by_treatment(const Vector& d, const RowIds& rows) {
  RowIds control, treated;
  for (Index i : rows) (d(i) == 1.0 ? treated : control).push_back(i);
  return {control, treated};
}

void require_rows(std::size_t count, std::size_t needed, const std::string& what) {
  if (count < needed) {
    throw DegenerateFoldError(what + ": " + std::to_string(count) + " rows, need at least " + std::to_string(needed));
  }
}

Nuisances fit_nuisances(const RotationContext& ctx, const FoldPlan& plan, const RoleAssignment& roles,
                        std::uint64_t seed, RotationAudit& audit) {
  const auto min_group = static_cast<std::size_t>(ctx.config.min_group_rows);
  Nuisances out;
  const RowIds outcome_rows = plan.rows_in(roles.outcome_folds);
  if (needs_group_means(ctx.learner)) {
    const auto [control, treated] = split_by_treatment(ctx.data.d, outcome_rows);
    require_rows(control.size(), std::max<std::size_t>(min_group, 10), "control rows in outcome fold");
    require_rows(treated.size(), std::max<std::size_t>(min_group, 10), "treated rows in outcome fold");
    out.mu0 = fit_nuisance(ctx, NuisanceKind::Mu0, control, derive_seed(seed, {nuisance_key(NuisanceKind::Mu0)}), audit);
    out.mu1 = fit_nuisance(ctx, NuisanceKind::Mu1, treated, derive_seed(seed, {nuisance_key(NuisanceKind::Mu1)}), audit);
  } else {
    require_rows(outcome_rows.size(), 10, "rows in outcome fold");
    out.mu = fit_nuisance(ctx, NuisanceKind::Mu, outcome_rows, derive_seed(seed, {nuisance_key(NuisanceKind::Mu)}), audit);
  }
  if (needs_propensity(ctx.learner)) {
    const RowIds prop_rows = plan.rows_in(roles.propensity_folds);
    const auto [control, treated] = split_by_treatment(ctx.data.d, prop_rows);
    require_rows(prop_rows.size(), 10, "rows in propensity fold");
    require_rows(std::min(control.size(), treated.size()), 1, "treatment classes in propensity fold");
    out.e = fit_nuisance(ctx, NuisanceKind::Propensity, prop_rows,
                         derive_seed(seed, {nuisance_key(NuisanceKind::Propensity)}), audit);
  }
  return out;
}

Vector clipped_propensity(const RotationContext& ctx, const Nuisances& nu, const Matrix& x) {
  return clip(nu.e->predict(x), ctx.config.learners.clip);
}

// Pseudo-outcome of a T/DR/R learner on the given rows.
PseudoOutcome pseudo_outcome(const RotationContext& ctx, const Nuisances& nu, const RowIds& rows) {
  const Matrix x = take_rows(ctx.data.x, rows);
  const Vector y = take_rows(ctx.data.y, rows);
  const Vector d = take_rows(ctx.data.d, rows);
  switch (ctx.learner) {
    case MetaLearner::T:
      return pseudo_T(nu.mu0->predict(x), nu.mu1->predict(x));
    case MetaLearner::DR:
      return pseudo_DR(y, d, nu.mu0->predict(x), nu.mu1->predict(x), clipped_propensity(ctx, nu, x));
    case MetaLearner::R:
      return pseudo_R(y, d, nu.mu->predict(x), clipped_propensity(ctx, nu, x));
    case MetaLearner::X:
      break;
  }
  throw InvalidArgument("X-learner pseudo-outcomes are built per treatment group");
}

void check_leakage(RotationAudit& audit, Index n) {
  if (audit.naive) return;
  std::vector<char> estimation(static_cast<std::size_t>(n), 0);
  for (Index i : audit.estimation_rows) estimation[static_cast<std::size_t>(i)] = 1;
  for (const auto& nu : audit.nuisances) {
    for (Index i : nu.training_rows) {
      if (estimation[static_cast<std::size_t>(i)]) {
        throw LeakageError(to_string(nu.kind) + " nuisance trained on estimation row " + std::to_string(i));
      }
    }
  }
}

std::uint64_t rotation_seed(std::uint64_t seed, const RowIds& estimation_rows) {
  // Keyed by fold content rather than fold label, so relabelling folds of the
  // same partition reproduces every fold model.
  return derive_seed(seed, {static_cast<std::uint64_t>(estimation_rows.front())});
}

std::string rotation_label(MetaLearner learner, std::size_t index) {
  return to_string(learner) + ":rot" + std::to_string(index);
}

void record(FitDiagnostics* diag, RotationAudit audit) {
  if (diag != nullptr) diag->rotations.push_back(std::move(audit));
}

FoldModel fit_rotation(DataView data, MetaLearner learner, const FoldPlan& plan, const RoleAssignment& roles,
                       const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag, std::size_t index) {
  if (plan.size() != data.size()) throw DimensionError("fold plan size differs from data");
  const RotationContext ctx{data, learner, config, diag, rotation_label(learner, index)};
  RotationAudit audit;
  audit.naive = plan.k == 1;
  audit.estimation_rows = plan.rows_in(roles.estimation_folds);
  require_rows(audit.estimation_rows.size(), 10, "rows in estimation fold");
  const std::uint64_t rseed = rotation_seed(seed, audit.estimation_rows);
  const Nuisances nu = fit_nuisances(ctx, plan, roles, rseed, audit);
  check_leakage(audit, data.size());

  const RowIds& est = audit.estimation_rows;
  FoldModel model;
  if (learner == MetaLearner::X) {
    const auto [control, treated] = split_by_treatment(data.d, est);
    const auto min_group = static_cast<std::size_t>(std::max(config.min_group_rows, 10));
    require_rows(control.size(), min_group, "control rows in estimation fold");
    require_rows(treated.size(), min_group, "treated rows in estimation fold");
    const Matrix xe = take_rows(data.x, est);
    const XPseudoOutcomes px =
        pseudo_X(take_rows(data.y, est), take_rows(data.d, est), nu.mu0->predict(xe), nu.mu1->predict(xe));
    summarize_psi(ctx, "psi1", px.treated.psi);
    summarize_psi(ctx, "psi0", px.control.psi);
    ModelPtr tau1 = fit_final(ctx, "tau1", px.treated, take_rows(xe, px.treated_rows), derive_seed(rseed, {201}));
    ModelPtr tau0 = fit_final(ctx, "tau0", px.control, take_rows(xe, px.control_rows), derive_seed(rseed, {200}));
    model = FoldModel::blended(std::move(tau0), std::move(tau1), nu.e);
  } else {
    const PseudoOutcome psi = pseudo_outcome(ctx, nu, est);
    summarize_psi(ctx, "psi", psi.psi);
    model = FoldModel::direct(fit_final(ctx, "tau", psi, take_rows(data.x, est), derive_seed(rseed, {202})));
  }
  record(diag, std::move(audit));
  return model;
}

FoldPlan plan_for(DataView data, Strategy strategy, std::uint64_t seed) {
  return make_folds(data.size(), fold_count(strategy), derive_seed(seed, {7, 0}));
}

}  // namespace

std::string to_string(NuisanceKind k) {
  switch (k) {
    case NuisanceKind::Mu0: return "mu0";
    case NuisanceKind::Mu1: return "mu1";
    case NuisanceKind::Mu: return "mu";
    case NuisanceKind::Propensity: return "e";
  }
  return "?";
}

ModelPtr StackedNuisances::fit(NuisanceKind kind, const Matrix& x, const Vector& target, std::uint64_t seed) const {
  const Task task = kind == NuisanceKind::Propensity ? Task::Probability : Task::Regression;
  return as_model(fit_stack(config_.candidates, x, target, task, seed, nullptr, config_.stack_options()));
}

FixedNuisances::FixedNuisances(Index p, Function mu0, Function mu1, Function mu, Function propensity)
    : p_(p), mu0_(std::move(mu0)), mu1_(std::move(mu1)), mu_(std::move(mu)), propensity_(std::move(propensity)) {}

ModelPtr FixedNuisances::fit(NuisanceKind kind, const Matrix&, const Vector&, std::uint64_t) const {
  const Function* f = nullptr;
  switch (kind) {
    case NuisanceKind::Mu0: f = &mu0_; break;
    case NuisanceKind::Mu1: f = &mu1_; break;
    case NuisanceKind::Mu: f = &mu_; break;
    case NuisanceKind::Propensity: f = &propensity_; break;
  }
  if (!*f) throw InvalidArgument("no fixed function for nuisance " + to_string(kind));
  return function_model(p_, *f);
}

ModelPtr function_model(Index p, std::function<Vector(const Matrix&)> f) {
  return std::make_shared<FunctionModel>(p, std::move(f));
}

std::size_t count_leakage(const FitDiagnostics& diag) {
  std::size_t violations = 0;
  for (const auto& rot : diag.rotations) {
    if (rot.naive) continue;
    RowIds est = rot.estimation_rows;
    std::sort(est.begin(), est.end());
    for (const auto& nu : rot.nuisances)
      for (Index i : nu.training_rows)
        if (std::binary_search(est.begin(), est.end(), i)) ++violations;
  }
  return violations;
}

FoldModel FoldModel::direct(ModelPtr tau) {
  FoldModel m;
  m.tau_ = std::move(tau);
  return m;
}

FoldModel FoldModel::blended(ModelPtr tau0, ModelPtr tau1, ModelPtr propensity) {
  FoldModel m;
  m.tau0_ = std::move(tau0);
  m.tau1_ = std::move(tau1);
  m.propensity_ = std::move(propensity);
  return m;
}

Vector FoldModel::predict(const Matrix& x) const {
  if (tau_) {
    check_columns(*tau_, x);
    return tau_->predict(x);
  }
  if (!tau0_ || !tau1_ || !propensity_) throw InvalidArgument("empty fold model");
  check_columns(*tau0_, x);
  const Vector g = propensity_->predict(x).cwiseMax(0.0).cwiseMin(1.0);
  return blend_X(tau0_->predict(x), tau1_->predict(x), g);
}

Vector row_means(const Matrix& columns) { return columns.rowwise().mean(); }

Vector row_medians(const Matrix& columns) {
  Vector out(columns.rows());
  std::vector<double> buf(static_cast<std::size_t>(columns.cols()));
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index b = 0; b < columns.cols(); ++b) buf[static_cast<std::size_t>(b)] = columns(i, b);
    out(i) = median(buf);
  }
  return out;
}

Matrix median_member_predictions(const CateModel& model, const Matrix& x) {
  const auto* med = std::get_if<CateModel::MedianOf>(&model.variant());
  if (med == nullptr) throw InvalidArgument("not a median model");
  Matrix out(x.rows(), static_cast<Index>(med->members.size()));
  for (std::size_t b = 0; b < med->members.size(); ++b) out.col(static_cast<Index>(b)) = predict(med->members[b], x);
  return out;
}

Vector predict(const CateModel& model, const Matrix& x) {
  return std::visit(
      [&](const auto& v) -> Vector {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CateModel::Single>) {
          return v.model.predict(x);
        } else if constexpr (std::is_same_v<T, CateModel::CrossFitMean>) {
          Matrix cols(x.rows(), static_cast<Index>(v.folds.size()));
          for (std::size_t k = 0; k < v.folds.size(); ++k) cols.col(static_cast<Index>(k)) = v.folds[k].predict(x);
          return row_means(cols);
        } else {
          return row_medians(median_member_predictions(model, x));
        }
      },
      model.variant());
}

bool supports(MetaLearner learner, Strategy strategy) {
  if (learner != MetaLearner::T) return true;
  return !is_double_split(strategy) && !is_combined(strategy);
}

FoldModel fit_single(DataView data, MetaLearner learner, const FoldPlan& plan, const RoleAssignment& roles,
                     const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag) {
  return fit_rotation(data, learner, plan, roles, config, seed, diag, 0);
}

CateModel fit_crossfit(DataView data, MetaLearner learner, Strategy strategy, const FoldPlan& plan,
                       const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag) {
  if (is_median(strategy) || !is_cross_fit(strategy)) {
    throw InvalidArgument(to_string(strategy) + " is not a cross-fit strategy");
  }
  if (!supports(learner, strategy)) throw InvalidArgument(to_string(learner) + " does not support " + to_string(strategy));
  if (diag != nullptr) diag->fold_seeds.push_back(seed);
  const auto rots = rotations(plan, strategy);
  CateModel::CrossFitMean cf;
  for (std::size_t r = 0; r < rots.size(); ++r) {
    cf.folds.push_back(fit_rotation(data, learner, plan, rots[r], config, seed, diag, r));
  }
  return CateModel(std::move(cf), {learner, strategy, seed});
}

CateModel fit_crossfit(DataView data, MetaLearner learner, Strategy strategy, const EngineConfig& config,
                       std::uint64_t seed, FitDiagnostics* diag) {
  return fit_crossfit(data, learner, strategy, plan_for(data, strategy, seed), config, seed, diag);
}

CateModel fit_combined(DataView data, MetaLearner learner, const FoldPlan& plan, const EngineConfig& config,
                       std::uint64_t seed, FitDiagnostics* diag) {
  if (learner == MetaLearner::T) throw InvalidArgument("the combined strategy needs a pseudo-outcome learner");
  if (plan.size() != data.size()) throw DimensionError("fold plan size differs from data");
  if (diag != nullptr) diag->fold_seeds.push_back(seed);
  const Index n = data.size();
  const auto rots = rotations(plan, Strategy::Fold5Combined);

  PseudoOutcome all{Vector::Zero(n), Vector::Ones(n), std::nullopt};
  Vector mu0_all = Vector::Zero(n), mu1_all = Vector::Zero(n);
  std::vector<ModelPtr> propensities;
  for (std::size_t r = 0; r < rots.size(); ++r) {
    const RotationContext ctx{data, learner, config, diag, rotation_label(learner, r)};
    RotationAudit audit;
    audit.estimation_rows = plan.rows_in(rots[r].estimation_folds);
    const std::uint64_t rseed = rotation_seed(seed, audit.estimation_rows);
    const Nuisances nu = fit_nuisances(ctx, plan, rots[r], rseed, audit);
    check_leakage(audit, n);
    const RowIds& rows = audit.estimation_rows;
    if (learner == MetaLearner::X) {
      const Matrix xf = take_rows(data.x, rows);
      const Vector m0 = nu.mu0->predict(xf);
      const Vector m1 = nu.mu1->predict(xf);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        mu0_all(rows[k]) = m0(static_cast<Index>(k));
        mu1_all(rows[k]) = m1(static_cast<Index>(k));
      }
      propensities.push_back(nu.e);
    } else {
      const PseudoOutcome psi = pseudo_outcome(ctx, nu, rows);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        all.psi(rows[k]) = psi.psi(static_cast<Index>(k));
        all.weights(rows[k]) = psi.weights(static_cast<Index>(k));
      }
    }
    record(diag, std::move(audit));
  }

  const RotationContext ctx{data, learner, config, diag, to_string(learner) + ":combined"};
  const std::uint64_t fseed = derive_seed(seed, {300});
  FoldModel model;
  if (learner == MetaLearner::X) {
    const XPseudoOutcomes px = pseudo_X(data.y, data.d, mu0_all, mu1_all);
    const auto min_group = static_cast<std::size_t>(std::max(config.min_group_rows, 10));
    require_rows(px.control_rows.size(), min_group, "control rows");
    require_rows(px.treated_rows.size(), min_group, "treated rows");
    summarize_psi(ctx, "psi1", px.treated.psi);
    summarize_psi(ctx, "psi0", px.control.psi);
    ModelPtr tau1 = fit_final(ctx, "tau1", px.treated, take_rows(data.x, px.treated_rows), derive_seed(fseed, {201}));
    ModelPtr tau0 = fit_final(ctx, "tau0", px.control, take_rows(data.x, px.control_rows), derive_seed(fseed, {200}));
    model = FoldModel::blended(std::move(tau0), std::move(tau1), std::make_shared<AverageModel>(std::move(propensities)));
  } else {
    summarize_psi(ctx, "psi", all.psi);
    model = FoldModel::direct(fit_final(ctx, "tau", all, data.x, derive_seed(fseed, {202})));
  }
  return CateModel(CateModel::Single{std::move(model)}, {learner, Strategy::Fold5Combined, seed});
}

CateModel fit_combined(DataView data, MetaLearner learner, const EngineConfig& config, std::uint64_t seed,
                       FitDiagnostics* diag) {
  return fit_combined(data, learner, plan_for(data, Strategy::Fold5Combined, seed), config, seed, diag);
}

CateModel fit_median(DataView data, MetaLearner learner, Strategy strategy, int b_iterations,
                     const EngineConfig& config, std::uint64_t seed, FitDiagnostics* diag) {
  if (b_iterations < 1) throw InvalidArgument("median needs at least one iteration");
  const Strategy inner = inner_strategy(strategy);
  if (!is_cross_fit(inner) && !is_combined(inner)) {
    throw InvalidArgument("median applies only to cross-fit or combined strategies");
  }
  if (!supports(learner, inner)) throw InvalidArgument(to_string(learner) + " does not support " + to_string(strategy));
  CateModel::MedianOf med;
  int aborted = 0;
  std::string last_error;
  for (int b = 0; b < b_iterations; ++b) {
    const auto bkey = static_cast<std::uint64_t>(b);
    const FoldPlan plan = make_folds(data.size(), fold_count(inner), derive_seed(seed, {9, bkey}));
    const std::uint64_t fit_seed = derive_seed(seed, {10, bkey});
    try {
      med.members.push_back(is_combined(inner) ? fit_combined(data, learner, plan, config, fit_seed, diag)
                                               : fit_crossfit(data, learner, inner, plan, config, fit_seed, diag));
    } catch (const DegenerateFoldError& e) {
      ++aborted;
      last_error = e.what();
    }
  }
  if (diag != nullptr) diag->aborted_iterations += aborted;
  if (med.members.empty()) throw DegenerateFoldError("every median iteration aborted: " + last_error);
  return CateModel(std::move(med), {learner, strategy, seed});
}

CateModel fit_estimator(DataView data, MetaLearner learner, Strategy strategy, const EngineConfig& config,
                        std::uint64_t seed, FitDiagnostics* diag) {
  if (!supports(learner, strategy)) throw InvalidArgument(to_string(learner) + " does not support " + to_string(strategy));
  if (is_median(strategy)) return fit_median(data, learner, strategy, config.b_iterations, config, seed, diag);
  if (is_combined(strategy)) return fit_combined(data, learner, config, seed, diag);
  if (is_cross_fit(strategy)) return fit_crossfit(data, learner, strategy, config, seed, diag);
  const FoldPlan plan = plan_for(data, strategy, seed);
  if (diag != nullptr) diag->fold_seeds.push_back(seed);
  FoldModel model = fit_rotation(data, learner, plan, rotations(plan, strategy).front(), config, seed, diag, 0);
  return CateModel(CateModel::Single{std::move(model)}, {learner, strategy, seed});
}

}  // namespace cate
