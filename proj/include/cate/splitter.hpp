#pragma once

// Fold partitions and the fold roles used by each estimation strategy.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cate/common.hpp"

namespace cate {

struct FoldPlan {
  int k = 1;
  std::vector<int> assignment;  // fold index per row

  Index size() const { return static_cast<Index>(assignment.size()); }
  RowIds fold_rows(int fold) const;
  RowIds rows_in(const std::vector<int>& folds) const;
  RowIds complement_rows(int fold) const;
  std::vector<Index> fold_sizes() const;
};

// Uniformly random balanced partition of 0..n-1 into k folds. Throws
// InvalidArgument unless n >= k >= 1.
FoldPlan make_folds(Index n, int k, std::uint64_t seed);

void write_folds_csv(std::ostream& out, const FoldPlan& plan);

enum class Strategy {
  Naive,
  Split5050,
  Split5050CF,
  DoubleSplit,
  DoubleSplitCF,
  Fold5,
  Fold5CF,
  Fold5Combined,
  MedianSplit5050CF,
  MedianDoubleSplitCF,
  MedianFold5CF,
  MedianFold5Combined,
};

inline constexpr Strategy kAllStrategies[] = {
    Strategy::Naive,         Strategy::Split5050,         Strategy::Split5050CF,
    Strategy::DoubleSplit,   Strategy::DoubleSplitCF,     Strategy::Fold5,
    Strategy::Fold5CF,       Strategy::Fold5Combined,     Strategy::MedianSplit5050CF,
    Strategy::MedianDoubleSplitCF, Strategy::MedianFold5CF, Strategy::MedianFold5Combined,
};

std::string to_string(Strategy s);         // machine name, e.g. "fold5cf"
std::string display_name(Strategy s);      // table label, e.g. "5-fold cross-fit"
std::optional<Strategy> parse_strategy(const std::string& s);

int fold_count(Strategy s);
bool is_median(Strategy s);
bool is_cross_fit(Strategy s);  // averages over rotations (including median variants)
bool is_combined(Strategy s);
bool is_double_split(Strategy s);
// The cross-fit or combined strategy a median strategy repeats; identity otherwise.
Strategy inner_strategy(Strategy s);

struct StrategySpec {
  Strategy name = Strategy::Naive;
  int b_iterations = 20;
};

void validate(const StrategySpec& spec);

// Folds playing each role in one rotation. For single-split strategies the
// propensity and outcome folds coincide.
struct RoleAssignment {
  std::vector<int> propensity_folds;
  std::vector<int> outcome_folds;
  std::vector<int> estimation_folds;
};

// Rotations for a strategy over a plan with matching fold count. Median
// strategies return the rotations of their inner strategy.
std::vector<RoleAssignment> rotations(const FoldPlan& plan, Strategy strategy);

}  // namespace cate
