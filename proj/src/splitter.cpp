#include "cate/splitter.hpp"

#include <algorithm>
#include <numeric>

namespace cate {

RowIds FoldPlan::fold_rows(int fold) const {
  RowIds out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(static_cast<Index>(i));
  return out;
}

RowIds FoldPlan::rows_in(const std::vector<int>& folds) const {
  RowIds out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (std::find(folds.begin(), folds.end(), assignment[i]) != folds.end()) out.push_back(static_cast<Index>(i));
  return out;
}

RowIds FoldPlan::complement_rows(int fold) const {
  RowIds out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> FoldPlan::fold_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int f : assignment) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

FoldPlan make_folds(Index n, int k, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("fold count must be >= 1");
  if (n < k) throw InvalidArgument("cannot split " + std::to_string(n) + " rows into " + std::to_string(k) + " folds");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t r = 0; r < order.size(); ++r)
    plan.assignment[static_cast<std::size_t>(order[r])] = static_cast<int>(r % static_cast<std::size_t>(k));
  return plan;
}

void write_folds_csv(std::ostream& out, const FoldPlan& plan) {
  out << "row,fold\n";
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) out << i << ',' << plan.assignment[i] << '\n';
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::Split5050: return "split5050";
    case Strategy::Split5050CF: return "split5050cf";
    case Strategy::DoubleSplit: return "doublesplit";
    case Strategy::DoubleSplitCF: return "doublesplitcf";
    case Strategy::Fold5: return "fold5";
    case Strategy::Fold5CF: return "fold5cf";
    case Strategy::Fold5Combined: return "fold5combined";
    case Strategy::MedianSplit5050CF: return "median_split5050cf";
    case Strategy::MedianDoubleSplitCF: return "median_doublesplitcf";
    case Strategy::MedianFold5CF: return "median_fold5cf";
    case Strategy::MedianFold5Combined: return "median_fold5combined";
  }
  return "?";
}

std::string display_name(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::Split5050: return "50:50";
    case Strategy::Split5050CF: return "50:50 cross-fit";
    case Strategy::DoubleSplit: return "double split";
    case Strategy::DoubleSplitCF: return "double split cross-fit";
    case Strategy::Fold5: return "5-fold";
    case Strategy::Fold5CF: return "5-fold cross-fit";
    case Strategy::Fold5Combined: return "5-fold combined";
    case Strategy::MedianSplit5050CF: return "50:50 cross-fit median";
    case Strategy::MedianDoubleSplitCF: return "double split cross-fit median";
    case Strategy::MedianFold5CF: return "5-fold cross-fit median";
    case Strategy::MedianFold5Combined: return "5-fold combined median";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(const std::string& s) {
  for (Strategy st : kAllStrategies)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

int fold_count(Strategy s) {
  switch (inner_strategy(s)) {
    case Strategy::Naive: return 1;
    case Strategy::Split5050:
    case Strategy::Split5050CF: return 2;
    case Strategy::DoubleSplit:
    case Strategy::DoubleSplitCF: return 3;
    default: return 5;
  }
}

bool is_median(Strategy s) {
  return s == Strategy::MedianSplit5050CF || s == Strategy::MedianDoubleSplitCF || s == Strategy::MedianFold5CF ||
         s == Strategy::MedianFold5Combined;
}

bool is_cross_fit(Strategy s) {
  const Strategy inner = inner_strategy(s);
  return inner == Strategy::Split5050CF || inner == Strategy::DoubleSplitCF || inner == Strategy::Fold5CF;
}

bool is_combined(Strategy s) { return inner_strategy(s) == Strategy::Fold5Combined; }

bool is_double_split(Strategy s) {
  const Strategy inner = inner_strategy(s);
  return inner == Strategy::DoubleSplit || inner == Strategy::DoubleSplitCF;
}

Strategy inner_strategy(Strategy s) {
  switch (s) {
    case Strategy::MedianSplit5050CF: return Strategy::Split5050CF;
    case Strategy::MedianDoubleSplitCF: return Strategy::DoubleSplitCF;
    case Strategy::MedianFold5CF: return Strategy::Fold5CF;
    case Strategy::MedianFold5Combined: return Strategy::Fold5Combined;
    default: return s;
  }
}

void validate(const StrategySpec& spec) {
  if (is_median(spec.name) && spec.b_iterations < 1) throw InvalidArgument("median strategies need b_iterations >= 1");
}

std::vector<RoleAssignment> rotations(const FoldPlan& plan, Strategy strategy) {
  const Strategy inner = inner_strategy(strategy);
  const int k = fold_count(inner);
  if (plan.k != k) {
    throw InvalidArgument(to_string(strategy) + " needs " + std::to_string(k) + " folds, plan has " +
                          std::to_string(plan.k));
  }
  std::vector<RoleAssignment> out;
  switch (inner) {
    case Strategy::Naive:
      out.push_back({{0}, {0}, {0}});
      break;
    case Strategy::Split5050:
    case Strategy::Split5050CF: {
      const int count = inner == Strategy::Split5050 ? 1 : 2;
      for (int r = 0; r < count; ++r) out.push_back({{r}, {r}, {1 - r}});
      break;
    }
    case Strategy::DoubleSplit:
    case Strategy::DoubleSplitCF: {
      const int count = inner == Strategy::DoubleSplit ? 1 : 3;
      for (int r = 0; r < count; ++r) out.push_back({{r}, {(r + 1) % 3}, {(r + 2) % 3}});
      break;
    }
    case Strategy::Fold5:
    case Strategy::Fold5CF:
    case Strategy::Fold5Combined: {
      const int count = inner == Strategy::Fold5 ? 1 : 5;
      for (int r = 0; r < count; ++r) {
        std::vector<int> train;
        for (int f = 0; f < 5; ++f)
          if (f != r) train.push_back(f);
        out.push_back({train, train, {r}});
      }
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace cate
