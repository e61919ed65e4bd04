#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "cate/splitter.hpp"

using namespace cate;

namespace {

std::multiset<int> estimation_folds(const std::vector<RoleAssignment>& rots) {
  std::multiset<int> out;
  for (const auto& r : rots) out.insert(r.estimation_folds.begin(), r.estimation_folds.end());
  return out;
}

std::multiset<int> all_folds(int k) {
  std::multiset<int> out;
  for (int f = 0; f < k; ++f) out.insert(f);
  return out;
}

}  // namespace

TEST(MakeFolds, ExactDivision) {
  const FoldPlan plan = make_folds(10, 5, 1);
  EXPECT_EQ(plan.fold_sizes(), std::vector<Index>(5, 2));
  std::set<Index> seen;
  for (int f = 0; f < 5; ++f)
    for (Index r : plan.fold_rows(f)) EXPECT_TRUE(seen.insert(r).second);
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), 9);
}

TEST(MakeFolds, BalanceRule) {
  auto sizes = make_folds(11, 5, 2).fold_sizes();
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<Index>{2, 2, 2, 2, 3}));
}

TEST(MakeFolds, SingleFold) {
  const FoldPlan plan = make_folds(7, 1, 3);
  EXPECT_EQ(plan.fold_rows(0).size(), 7u);
}

TEST(MakeFolds, Errors) {
  EXPECT_THROW(make_folds(3, 5, 1), InvalidArgument);
  EXPECT_THROW(make_folds(3, 0, 1), InvalidArgument);
}

TEST(MakeFolds, RandomPropertySweep) {
  Rng rng(4);
  std::uniform_int_distribution<int> kd(1, 10);
  for (int t = 0; t < 1000; ++t) {
    const int k = kd(rng);
    const Index n = std::uniform_int_distribution<Index>(k, 300)(rng);
    const FoldPlan plan = make_folds(n, k, rng());
    const auto sizes = plan.fold_sizes();
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1);
    Index total = 0;
    for (int f = 0; f < k; ++f) {
      const RowIds rows = plan.fold_rows(f);
      total += static_cast<Index>(rows.size());
      const RowIds comp = plan.complement_rows(f);
      EXPECT_EQ(static_cast<Index>(rows.size() + comp.size()), n);
    }
    EXPECT_EQ(total, n);
  }
}

TEST(MakeFolds, DeterministicAndSeedSensitive) {
  EXPECT_EQ(make_folds(50, 5, 9).assignment, make_folds(50, 5, 9).assignment);
  int differ = 0;
  for (std::uint64_t s = 0; s < 100; ++s)
    differ += make_folds(10, 2, 2 * s).assignment != make_folds(10, 2, 2 * s + 1).assignment ? 1 : 0;
  EXPECT_GE(differ, 99);
}

TEST(MakeFolds, CsvDump) {
  std::ostringstream os;
  write_folds_csv(os, make_folds(3, 3, 0));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "row,fold");
  int n = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(line.substr(0, 2), std::to_string(n) + ",");
    ++n;
  }
  EXPECT_EQ(n, 3);
}

TEST(Rotations, Split5050SingleShot) {
  const auto rots = rotations(make_folds(20, 2, 1), Strategy::Split5050);
  ASSERT_EQ(rots.size(), 1u);
  EXPECT_EQ(rots[0].propensity_folds, std::vector<int>{0});
  EXPECT_EQ(rots[0].outcome_folds, std::vector<int>{0});
  EXPECT_EQ(rots[0].estimation_folds, std::vector<int>{1});
}

TEST(Rotations, CrossFitExhaustive) {
  for (Strategy s : kAllStrategies) {
    if (!is_cross_fit(s) && !is_combined(s)) continue;
    const int k = fold_count(inner_strategy(s));
    const auto rots = rotations(make_folds(30, k, 2), s);
    EXPECT_EQ(estimation_folds(rots), all_folds(k)) << to_string(s);
  }
}

TEST(Rotations, DoubleSplitRolesCycle) {
  const auto rots = rotations(make_folds(30, 3, 3), Strategy::DoubleSplitCF);
  ASSERT_EQ(rots.size(), 3u);
  std::multiset<int> prop, out, est;
  for (const auto& r : rots) {
    ASSERT_EQ(r.propensity_folds.size(), 1u);
    ASSERT_EQ(r.outcome_folds.size(), 1u);
    ASSERT_EQ(r.estimation_folds.size(), 1u);
    EXPECT_NE(r.propensity_folds[0], r.outcome_folds[0]);
    EXPECT_NE(r.outcome_folds[0], r.estimation_folds[0]);
    EXPECT_NE(r.propensity_folds[0], r.estimation_folds[0]);
    prop.insert(r.propensity_folds[0]);
    out.insert(r.outcome_folds[0]);
    est.insert(r.estimation_folds[0]);
  }
  EXPECT_EQ(prop, all_folds(3));
  EXPECT_EQ(out, all_folds(3));
  EXPECT_EQ(est, all_folds(3));
}

TEST(Rotations, FiveFoldTrainsOnComplement) {
  const auto rots = rotations(make_folds(50, 5, 4), Strategy::Fold5CF);
  ASSERT_EQ(rots.size(), 5u);
  for (const auto& r : rots) {
    ASSERT_EQ(r.estimation_folds.size(), 1u);
    EXPECT_EQ(r.outcome_folds.size(), 4u);
    EXPECT_EQ(r.outcome_folds, r.propensity_folds);
    EXPECT_EQ(std::count(r.outcome_folds.begin(), r.outcome_folds.end(), r.estimation_folds[0]), 0);
  }
  EXPECT_EQ(rotations(make_folds(50, 5, 4), Strategy::Fold5).size(), 1u);
}

TEST(Rotations, NaiveUsesEverything) {
  const auto rots = rotations(make_folds(10, 1, 0), Strategy::Naive);
  ASSERT_EQ(rots.size(), 1u);
  EXPECT_EQ(rots[0].estimation_folds, std::vector<int>{0});
}

TEST(Rotations, FoldCountMismatch) {
  EXPECT_THROW(rotations(make_folds(30, 5, 1), Strategy::Split5050CF), InvalidArgument);
  EXPECT_THROW(rotations(make_folds(30, 2, 1), Strategy::DoubleSplit), InvalidArgument);
}

TEST(Strategies, NamesRoundTrip) {
  std::set<std::string> names;
  for (Strategy s : kAllStrategies) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_TRUE(names.insert(to_string(s)).second);
    EXPECT_FALSE(display_name(s).empty());
  }
  EXPECT_EQ(names.size(), 12u);
  EXPECT_FALSE(parse_strategy("fold7").has_value());
}

TEST(Strategies, Classification) {
  EXPECT_TRUE(is_median(Strategy::MedianFold5Combined));
  EXPECT_EQ(inner_strategy(Strategy::MedianFold5Combined), Strategy::Fold5Combined);
  EXPECT_EQ(inner_strategy(Strategy::MedianSplit5050CF), Strategy::Split5050CF);
  EXPECT_EQ(inner_strategy(Strategy::MedianDoubleSplitCF), Strategy::DoubleSplitCF);
  EXPECT_TRUE(is_double_split(Strategy::DoubleSplit));
  EXPECT_TRUE(is_combined(Strategy::Fold5Combined));
  EXPECT_FALSE(is_cross_fit(Strategy::Fold5));
  EXPECT_EQ(fold_count(Strategy::Naive), 1);
  EXPECT_EQ(fold_count(Strategy::Split5050CF), 2);
  EXPECT_EQ(fold_count(Strategy::DoubleSplitCF), 3);
  EXPECT_EQ(fold_count(Strategy::Fold5Combined), 5);
}

TEST(Strategies, MedianNeedsIterations) {
  EXPECT_THROW(validate(StrategySpec{Strategy::MedianFold5CF, 0}), InvalidArgument);
  EXPECT_NO_THROW(validate(StrategySpec{Strategy::MedianFold5CF, 1}));
}
