#pragma once

// Histogram-based weighted regression trees, shared by the forest and the
// boosting learner. Features are quantised once per fit into at most
// `max_bins` ordered bins; a split "bin <= b" is stored as the raw threshold
// "x <= t_b" so prediction works on unbinned data.

#include <cstdint>
#include <span>
#include <vector>

#include "cate/common.hpp"

namespace cate::tree {

class BinnedFeatures {
 public:
  BinnedFeatures(const Matrix& x, int max_bins);

  Index rows() const { return rows_; }
  Index cols() const { return static_cast<Index>(thresholds_.size()); }
  int bins(Index feature) const { return static_cast<int>(thresholds_[static_cast<std::size_t>(feature)].size()) + 1; }
  std::uint8_t code(Index row, Index feature) const {
    return codes_[static_cast<std::size_t>(feature * rows_ + row)];
  }
  const std::uint8_t* column(Index feature) const { return codes_.data() + feature * rows_; }
  double threshold(Index feature, int bin) const {
    return thresholds_[static_cast<std::size_t>(feature)][static_cast<std::size_t>(bin)];
  }

 private:
  Index rows_ = 0;
  std::vector<std::uint8_t> codes_;  // column-major
  std::vector<std::vector<double>> thresholds_;
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct GrowParams {
  int max_depth = -1;
  int min_leaf = 1;
  int mtry = 0;  // 0: all features
};

class RegressionTree {
 public:
  // Grows a tree on the listed rows (duplicates allowed, e.g. a bootstrap
  // sample). Each listed occurrence contributes weights[row] to the loss.
  static RegressionTree grow(const BinnedFeatures& bins, std::span<const double> target,
                             std::span<const double> weights, std::vector<Index> rows, const GrowParams& params,
                             Rng& rng);

  double predict_row(const double* x, Index stride) const;
  void predict_add(const Matrix& x, double scale, Vector& out) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;

 private:
  std::vector<Node> nodes_;
};

}  // namespace cate::tree
