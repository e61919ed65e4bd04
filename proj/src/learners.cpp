#include "cate/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "cate/lasso.hpp"
#include "cate/seeding.hpp"
#include "cate/tree.hpp"

namespace cate {

namespace {

class MeanModel final : public Model {
 public:
  MeanModel(double value, Index p) : value_(value), p_(p) {}
  Vector predict(const Matrix& x) const override { return Vector::Constant(x.rows(), value_); }
  Index num_features() const override { return p_; }

 private:
  double value_;
  Index p_;
};

class LinearModel final : public Model {
 public:
  explicit LinearModel(LinearState state) : state_(std::move(state)) {}
  Vector predict(const Matrix& x) const override {
    return (x * state_.coefficients).array() + state_.intercept;
  }
  Index num_features() const override { return state_.coefficients.size(); }
  const LinearState& state() const { return state_; }

 private:
  LinearState state_;
};

class ForestModel final : public Model {
 public:
  ForestModel(std::vector<tree::RegressionTree> trees, Index p) : trees_(std::move(trees)), p_(p) {}
  Vector predict(const Matrix& x) const override {
    Vector out = Vector::Zero(x.rows());
    const double scale = 1.0 / static_cast<double>(trees_.size());
    for (const auto& t : trees_) t.predict_add(x, scale, out);
    return out;
  }
  Index num_features() const override { return p_; }

 private:
  std::vector<tree::RegressionTree> trees_;
  Index p_;
};

class BoostedModel final : public Model {
 public:
  BoostedModel(double init, double rate, std::vector<tree::RegressionTree> trees, std::vector<double> loss, Index p)
      : init_(init), rate_(rate), trees_(std::move(trees)), loss_(std::move(loss)), p_(p) {}
  Vector predict(const Matrix& x) const override {
    Vector out = Vector::Constant(x.rows(), init_);
    for (const auto& t : trees_) t.predict_add(x, rate_, out);
    return out;
  }
  Index num_features() const override { return p_; }
  const std::vector<double>& loss_history() const { return loss_; }

 private:
  double init_;
  double rate_;
  std::vector<tree::RegressionTree> trees_;
  std::vector<double> loss_;
  Index p_;
};

Vector resolve_weights(const Vector* weights, Index n) {
  if (weights == nullptr) return Vector::Ones(n);
  if (weights->size() != n) throw DimensionError("weights length differs from row count");
  for (Index i = 0; i < n; ++i) {
    if (!((*weights)(i) > 0.0) || !std::isfinite((*weights)(i))) throw InvalidArgument("weights must be positive");
  }
  return *weights;
}

double weighted_mean(const Vector& v, const Vector& w) { return w.dot(v) / w.sum(); }

// Weighted centring and scaling shared by the linear learners. Columns with
// no spread are dropped and later receive coefficient 0.
struct Standardized {
  Vector x_mean;
  Vector x_scale;
  std::vector<Index> kept;
  double y_mean = 0.0;
  Matrix z;  // kept columns, centred, scaled, rows multiplied by sqrt(w / sum w)
  Vector yc; // centred y, rows multiplied by sqrt(w / sum w)
};

Standardized standardize(const Matrix& x, const Vector& y, const Vector& w, bool scale_columns) {
  Standardized s;
  const Index n = x.rows();
  const Vector wn = w / w.sum();
  s.x_mean = x.transpose() * wn;
  s.x_scale = Vector::Ones(x.cols());
  s.y_mean = wn.dot(y);
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (wn.array() * (x.col(j).array() - s.x_mean(j)).square()).sum();
    const double magnitude = std::max(1.0, x.col(j).cwiseAbs().maxCoeff());
    const double sd = std::sqrt(var);
    if (sd > 1e-10 * magnitude) {
      s.kept.push_back(j);
      if (scale_columns) s.x_scale(j) = sd;
    }
  }
  const Vector root = wn.cwiseSqrt();
  s.z.resize(n, static_cast<Index>(s.kept.size()));
  for (std::size_t k = 0; k < s.kept.size(); ++k) {
    const Index j = s.kept[k];
    s.z.col(static_cast<Index>(k)) =
        root.cwiseProduct(((x.col(j).array() - s.x_mean(j)) / s.x_scale(j)).matrix());
  }
  s.yc = root.cwiseProduct((y.array() - s.y_mean).matrix());
  return s;
}

LinearState unscale(const Standardized& s, const Vector& beta_kept, Index p, double lambda) {
  LinearState st;
  st.coefficients = Vector::Zero(p);
  for (std::size_t k = 0; k < s.kept.size(); ++k) {
    const Index j = s.kept[k];
    st.coefficients(j) = beta_kept(static_cast<Index>(k)) / s.x_scale(j);
  }
  st.intercept = s.y_mean - s.x_mean.dot(st.coefficients);
  st.lambda = lambda;
  return st;
}

LinearState fit_ols(const Matrix& x, const Vector& y, const Vector& w) {
  const Standardized s = standardize(x, y, w, false);
  Vector beta = Vector::Zero(static_cast<Index>(s.kept.size()));
  if (!s.kept.empty()) beta = Eigen::CompleteOrthogonalDecomposition<Matrix>(s.z).solve(s.yc);
  return unscale(s, beta, x.cols(), 0.0);
}

std::vector<double> lambda_path(const LassoParams& params, double lambda_max, Index n, Index p) {
  if (!params.lambda_grid.empty()) return params.lambda_grid;
  const int count = params.n_lambda;
  std::vector<double> out;
  if (lambda_max <= 0.0) return {0.0};
  const double ratio = params.lambda_min_ratio > 0.0 ? params.lambda_min_ratio : (n > p ? 1e-4 : 1e-2);
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    out.push_back(lambda_max * std::pow(ratio, t));
  }
  return out;
}

// Solutions along the penalty path, in original units. Stops after `last`.
std::vector<LinearState> lasso_path(const Matrix& x, const Vector& y, const Vector& w,
                                    const std::vector<double>& lambdas, std::size_t last,
                                    const LassoParams& params) {
  const Standardized s = standardize(x, y, w, true);
  const Matrix gram = s.z.transpose() * s.z;
  const Vector xty = s.z.transpose() * s.yc;
  Vector beta = Vector::Zero(static_cast<Index>(s.kept.size()));
  const CoordinateDescentOptions opts{params.tolerance, params.max_sweeps};
  std::vector<LinearState> out;
  for (std::size_t k = 0; k <= last && k < lambdas.size(); ++k) {
    if (!s.kept.empty()) l1_coordinate_descent_gram(gram, xty, lambdas[k], beta, opts);
    out.push_back(unscale(s, beta, x.cols(), lambdas[k]));
  }
  return out;
}

LinearState fit_lasso(const Matrix& x, const Vector& y, const Vector& w, const LassoParams& params,
                      std::uint64_t seed) {
  const Index n = x.rows();
  std::vector<double> lambdas;
  {
    const Standardized s = standardize(x, y, w, true);
    const double lambda_max = s.kept.empty() ? 0.0 : (s.z.transpose() * s.yc).cwiseAbs().maxCoeff();
    lambdas = lambda_path(params, lambda_max, n, x.cols());
  }
  std::size_t chosen = lambdas.size() - 1;
  const int k = params.cv_folds;
  if (lambdas.size() > 1 && n >= 2 * static_cast<Index>(k)) {
    const std::vector<int> fold = content_folds(x, y, k, seed);
    std::vector<double> cv_error(lambdas.size(), 0.0);
    for (int f = 0; f < k; ++f) {
      RowIds train, held;
      for (Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
      const Matrix xt = take_rows(x, train);
      const Vector yt = take_rows(y, train);
      const Vector wt = take_rows(w, train);
      const Matrix xh = take_rows(x, held);
      const Vector yh = take_rows(y, held);
      const Vector wh = take_rows(w, held);
      const auto path = lasso_path(xt, yt, wt, lambdas, lambdas.size() - 1, params);
      for (std::size_t l = 0; l < path.size(); ++l) {
        const Vector r = yh - ((xh * path[l].coefficients).array() + path[l].intercept).matrix();
        cv_error[l] += wh.dot(r.cwiseAbs2());
      }
    }
    chosen = static_cast<std::size_t>(std::min_element(cv_error.begin(), cv_error.end()) - cv_error.begin());
  }
  auto path = lasso_path(x, y, w, lambdas, chosen, params);
  return path.back();
}

ModelPtr fit_forest(const Matrix& x, const Vector& y, const Vector& w, const ForestParams& params,
                    std::uint64_t seed) {
  const Index n = x.rows();
  const Index p = x.cols();
  const tree::BinnedFeatures bins(x, params.max_bins);
  tree::GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = params.min_leaf;
  grow.mtry = params.mtry > 0 ? params.mtry : static_cast<int>((p + 2) / 3);
  Rng rng(seed);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<tree::RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.trees));
  for (int t = 0; t < params.trees; ++t) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    if (params.bootstrap) {
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    trees.push_back(tree::RegressionTree::grow(bins, {y.data(), static_cast<std::size_t>(n)},
                                               {w.data(), static_cast<std::size_t>(n)}, std::move(rows), grow,
                                               rng));
  }
  return std::make_shared<ForestModel>(std::move(trees), p);
}

ModelPtr fit_boosting(const Matrix& x, const Vector& y, const Vector& w, const BoostingParams& params,
                      std::uint64_t seed) {
  const Index n = x.rows();
  const Index p = x.cols();
  const double init = weighted_mean(y, w);
  Rng rng(seed);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto holdout_count = static_cast<Index>(std::floor(params.holdout_fraction * static_cast<double>(n)));
  if (n < 10 || holdout_count < 1) holdout_count = 0;
  if (holdout_count > 0) std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> holdout(order.begin(), order.begin() + holdout_count);
  std::vector<Index> fitting(order.begin() + holdout_count, order.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(fitting.begin(), fitting.end());

  const tree::BinnedFeatures bins(x, params.max_bins);
  tree::GrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = params.min_leaf;

  auto loss_on = [&](const std::vector<Index>& rows, const Vector& f) {
    double num = 0.0, den = 0.0;
    for (Index i : rows) {
      const double r = y(i) - f(i);
      num += w(i) * r * r;
      den += w(i);
    }
    return den > 0.0 ? num / den : 0.0;
  };

  Vector current = Vector::Constant(n, init);
  Vector residual(n);
  std::vector<tree::RegressionTree> trees;
  std::vector<double> loss{loss_on(fitting, current)};
  double best_holdout = holdout.empty() ? 0.0 : loss_on(holdout, current);
  std::size_t best_rounds = 0;
  for (int round = 0; round < params.rounds; ++round) {
    residual = y - current;
    trees.push_back(tree::RegressionTree::grow(bins, {residual.data(), static_cast<std::size_t>(n)},
                                               {w.data(), static_cast<std::size_t>(n)}, fitting, grow, rng));
    trees.back().predict_add(x, params.learning_rate, current);
    loss.push_back(loss_on(fitting, current));
    if (holdout.empty()) {
      best_rounds = trees.size();
      continue;
    }
    const double h = loss_on(holdout, current);
    if (h < best_holdout) {
      best_holdout = h;
      best_rounds = trees.size();
    } else if (static_cast<int>(trees.size() - best_rounds) >= params.patience) {
      break;
    }
  }
  trees.resize(best_rounds);
  loss.resize(best_rounds + 1);
  return std::make_shared<BoostedModel>(init, params.learning_rate, std::move(trees), std::move(loss), p);
}

}  // namespace

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Mean: return "mean";
    case LearnerKind::Linear: return "linear";
    case LearnerKind::L1Linear: return "lasso";
    case LearnerKind::RandomForest: return "forest";
    case LearnerKind::BoostedTrees: return "boosting";
  }
  return "?";
}

std::optional<LearnerKind> parse_learner_kind(const std::string& s) {
  for (auto k : {LearnerKind::Mean, LearnerKind::Linear, LearnerKind::L1Linear, LearnerKind::RandomForest,
                 LearnerKind::BoostedTrees}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void validate(const LearnerSpec& spec) {
  switch (spec.kind) {
    case LearnerKind::Mean:
    case LearnerKind::Linear:
      return;
    case LearnerKind::L1Linear: {
      const auto& l = spec.lasso;
      if (l.lambda_grid.empty() && l.n_lambda < 1) throw InvalidArgument("lasso: n_lambda must be >= 1");
      if (l.lambda_min_ratio < 0.0 || l.lambda_min_ratio >= 1.0) throw InvalidArgument("lasso: bad lambda_min_ratio");
      if (l.cv_folds < 2) throw InvalidArgument("lasso: cv_folds must be >= 2");
      if (!(l.tolerance > 0.0) || l.max_sweeps < 1) throw InvalidArgument("lasso: bad solver settings");
      for (std::size_t k = 0; k < l.lambda_grid.size(); ++k) {
        if (!(l.lambda_grid[k] >= 0.0) || !std::isfinite(l.lambda_grid[k]))
          throw InvalidArgument("lasso: lambda grid entries must be finite and >= 0");
        if (k > 0 && !(l.lambda_grid[k] < l.lambda_grid[k - 1]))
          throw InvalidArgument("lasso: lambda grid must be strictly decreasing");
      }
      return;
    }
    case LearnerKind::RandomForest: {
      const auto& f = spec.forest;
      if (f.trees < 1 || f.min_leaf < 1 || f.mtry < 0 || f.max_depth < -1 || f.max_bins < 2 || f.max_bins > 256)
        throw InvalidArgument("forest: hyperparameters out of range");
      return;
    }
    case LearnerKind::BoostedTrees: {
      const auto& b = spec.boosting;
      if (b.rounds < 0 || b.max_depth < 0 || b.min_leaf < 1 || b.patience < 1 || b.max_bins < 2 ||
          b.max_bins > 256)
        throw InvalidArgument("boosting: hyperparameters out of range");
      if (!(b.learning_rate >= 0.0 && b.learning_rate <= 1.0)) throw InvalidArgument("boosting: learning rate in [0, 1]");
      if (!(b.holdout_fraction >= 0.0 && b.holdout_fraction < 1.0)) throw InvalidArgument("boosting: bad holdout fraction");
      return;
    }
  }
}

FittedLearner::FittedLearner(LearnerSpec spec, Task task, ClipBounds clip, ModelPtr model)
    : spec_(std::move(spec)), task_(task), clip_(clip), model_(std::move(model)) {}

FittedLearner fit(const LearnerSpec& spec, const Matrix& x, const Vector& y, Task task, const Vector* weights,
                  ClipBounds clip) {
  validate(spec);
  const Index n = x.rows();
  if (n < 1) throw InvalidArgument("cannot fit on empty data");
  if (y.size() != n) throw DimensionError("x rows and y length differ");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("non-finite training data");
  if (task == Task::Probability) {
    if (!(clip.lo > 0.0 && clip.lo < clip.hi && clip.hi < 1.0)) throw InvalidArgument("clip bounds must satisfy 0 < lo < hi < 1");
    for (Index i = 0; i < n; ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) throw InvalidArgument("probability targets must be 0 or 1");
    }
  }
  const Vector w = resolve_weights(weights, n);
  ModelPtr model;
  switch (spec.kind) {
    case LearnerKind::Mean:
      model = std::make_shared<MeanModel>(weighted_mean(y, w), x.cols());
      break;
    case LearnerKind::Linear:
      model = std::make_shared<LinearModel>(fit_ols(x, y, w));
      break;
    case LearnerKind::L1Linear:
      model = std::make_shared<LinearModel>(fit_lasso(x, y, w, spec.lasso, spec.seed));
      break;
    case LearnerKind::RandomForest:
      model = fit_forest(x, y, w, spec.forest, spec.seed);
      break;
    case LearnerKind::BoostedTrees:
      model = fit_boosting(x, y, w, spec.boosting, spec.seed);
      break;
  }
  return FittedLearner(spec, task, clip, std::move(model));
}

void check_columns(const Model& m, const Matrix& x) {
  if (x.cols() != m.num_features()) {
    throw DimensionError("expected " + std::to_string(m.num_features()) + " columns, got " + std::to_string(x.cols()));
  }
}

Vector clip(Vector v, ClipBounds bounds) { return v.cwiseMax(bounds.lo).cwiseMin(bounds.hi); }

Vector predict(const FittedLearner& m, const Matrix& x) {
  check_columns(m.model(), x);
  Vector out = m.model().predict(x);
  if (m.task() == Task::Probability) out = clip(std::move(out), m.clip());
  return out;
}

const LinearState* linear_state(const FittedLearner& m) {
  const auto* lm = dynamic_cast<const LinearModel*>(&m.model());
  return lm != nullptr ? &lm->state() : nullptr;
}

const std::vector<double>* boosting_loss_history(const FittedLearner& m) {
  const auto* bm = dynamic_cast<const BoostedModel*>(&m.model());
  return bm != nullptr ? &bm->loss_history() : nullptr;
}

std::vector<int> content_folds(const Matrix& x, const Vector& y, int k, std::uint64_t seed) {
  const Index n = x.rows();
  std::vector<std::pair<std::uint64_t, Index>> keyed(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::uint64_t h = mix64(seed);
    auto absorb = [&h](double v) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    };
    for (Index j = 0; j < x.cols(); ++j) absorb(x(i, j));
    absorb(y(i));
    keyed[static_cast<std::size_t>(i)] = {h, i};
  }
  // Identical rows hash identically; their relative order cannot change any fit.
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < keyed.size(); ++r) fold[static_cast<std::size_t>(keyed[r].second)] = static_cast<int>(r % static_cast<std::size_t>(k));
  return fold;
}

}  // namespace cate
