#include "cate/ensemble.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "cate/seeding.hpp"
#include "cate/splitter.hpp"

namespace cate {

Vector simplex_least_squares(const Matrix& z, const Vector& y, const Vector* row_weights) {
  const Index n = z.rows();
  const Index m = z.cols();
  if (m < 1) throw InvalidArgument("simplex least squares needs at least one column");
  if (m > 16) throw InvalidArgument("simplex least squares supports at most 16 columns");
  if (y.size() != n) throw DimensionError("z rows and y length differ");
  const Vector w = row_weights != nullptr ? *row_weights : Vector::Ones(n);
  if (w.size() != n) throw DimensionError("row weights length differs");

  const Matrix gram = z.transpose() * w.asDiagonal() * z;
  const Vector zty = z.transpose() * w.asDiagonal() * y;
  const double yty = w.dot(y.cwiseAbs2());
  auto objective = [&](const Vector& a) { return a.dot(gram * a) - 2.0 * a.dot(zty) + yty; };
  const double tie = 1e-14 * std::max(yty, 1e-300) + 1e-300;

  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  int best_size = 0;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<Index> cols;
    for (Index j = 0; j < m; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    const auto k = static_cast<Index>(cols.size());
    Matrix kkt = Matrix::Zero(k + 1, k + 1);
    Vector rhs(k + 1);
    for (Index a = 0; a < k; ++a) {
      for (Index b = 0; b < k; ++b) kkt(a, b) = gram(cols[a], cols[b]);
      kkt(a, k) = 1.0;
      kkt(k, a) = 1.0;
      rhs(a) = zty(cols[a]);
    }
    rhs(k) = 1.0;
    const Vector sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(kkt).solve(rhs);
    Vector a = Vector::Zero(m);
    bool feasible = true;
    for (Index t = 0; t < k; ++t) {
      if (!std::isfinite(sol(t)) || sol(t) < -1e-12) {
        feasible = false;
        break;
      }
      a(cols[t]) = std::max(0.0, sol(t));
    }
    if (!feasible) continue;
    const double total = a.sum();
    if (!(total > 0.0)) continue;
    a /= total;
    const double obj = objective(a);
    const int size = std::popcount(mask);
    if (obj < best_obj - tie || (obj <= best_obj + tie && size > best_size)) {
      best = a;
      best_obj = std::min(obj, best_obj);
      best_size = size;
    }
  }
  if (best.size() == 0) best = Vector::Constant(m, 1.0 / static_cast<double>(m));
  return best;
}

StackedModel fit_stack(const std::vector<LearnerSpec>& specs, const Matrix& x, const Vector& y, Task task,
                       std::uint64_t seed, const Vector* row_weights, const StackOptions& opts) {
  const Index n = x.rows();
  const auto m = static_cast<Index>(specs.size());
  if (m < 1) throw InvalidArgument("stack needs at least one candidate learner");
  if (n < 10) throw InvalidArgument("stack needs at least 10 rows, got " + std::to_string(n));
  if (y.size() != n) throw DimensionError("x rows and y length differ");
  const Vector w = row_weights != nullptr ? *row_weights : Vector::Ones(n);
  if (w.size() != n) throw DimensionError("row weights length differs");

  // Member seeds are keyed by learner kind (and repeat count), not list
  // position, so reordering the candidate list only reorders the weights.
  std::vector<std::uint64_t> member_key(static_cast<std::size_t>(m));
  for (std::size_t j = 0; j < specs.size(); ++j) {
    std::uint64_t repeat = 0;
    for (std::size_t i = 0; i < j; ++i) repeat += specs[i].kind == specs[j].kind ? 1 : 0;
    member_key[j] = derive_seed(hash_label(to_string(specs[j].kind)), {repeat});
  }

  const FoldPlan plan = make_folds(n, opts.folds, derive_seed(seed, {0}));
  Matrix z(n, m);
  for (int f = 0; f < plan.k; ++f) {
    const RowIds held = plan.fold_rows(f);
    const RowIds train = plan.complement_rows(f);
    const Matrix xt = take_rows(x, train);
    const Vector yt = take_rows(y, train);
    const Vector wt = take_rows(w, train);
    const Matrix xh = take_rows(x, held);
    for (Index j = 0; j < m; ++j) {
      LearnerSpec spec = specs[static_cast<std::size_t>(j)];
      spec.seed = derive_seed(seed, {1, member_key[static_cast<std::size_t>(j)], static_cast<std::uint64_t>(f)});
      const FittedLearner member = fit(spec, xt, yt, task, &wt, opts.clip);
      const Vector pred = predict(member, xh);
      for (std::size_t r = 0; r < held.size(); ++r) z(held[r], j) = pred(static_cast<Index>(r));
    }
  }

  StackedModel out;
  out.specs = specs;
  out.task = task;
  out.clip = opts.clip;
  out.num_features = x.cols();
  out.cv_risks.resize(m);
  const double wsum = w.sum();
  for (Index j = 0; j < m; ++j) out.cv_risks(j) = w.dot((z.col(j) - y).cwiseAbs2()) / wsum;
  out.weights = simplex_least_squares(z, y, &w);
  out.stack_cv_risk = w.dot((z * out.weights - y).cwiseAbs2()) / wsum;

  out.members.resize(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) {
    if (out.weights(j) <= 0.0) continue;
    LearnerSpec spec = specs[static_cast<std::size_t>(j)];
    spec.seed = derive_seed(seed, {2, member_key[static_cast<std::size_t>(j)]});
    out.members[static_cast<std::size_t>(j)] = fit(spec, x, y, task, &w, opts.clip);
  }
  return out;
}

Matrix member_predictions(const StackedModel& m, const Matrix& x) {
  if (x.cols() != m.num_features) throw DimensionError("stack: column count differs from training");
  Matrix out = Matrix::Zero(x.rows(), m.weights.size());
  for (std::size_t j = 0; j < m.members.size(); ++j) {
    if (m.members[j]) out.col(static_cast<Index>(j)) = predict(*m.members[j], x);
  }
  return out;
}

Vector predict_stack(const StackedModel& m, const Matrix& x) {
  Vector out = member_predictions(m, x) * m.weights;
  if (m.task == Task::Probability) out = clip(std::move(out), m.clip);
  return out;
}

namespace {

class StackAdapter final : public Model {
 public:
  explicit StackAdapter(StackedModel m) : m_(std::move(m)) {}
  Vector predict(const Matrix& x) const override { return predict_stack(m_, x); }
  Index num_features() const override { return m_.num_features; }

 private:
  StackedModel m_;
};

}  // namespace

ModelPtr as_model(StackedModel m) { return std::make_shared<StackAdapter>(std::move(m)); }

}  // namespace cate
