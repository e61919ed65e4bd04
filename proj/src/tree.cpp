#include "cate/tree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace cate::tree {

BinnedFeatures::BinnedFeatures(const Matrix& x, int max_bins) : rows_(x.rows()) {
  if (max_bins < 2 || max_bins > 256) throw InvalidArgument("max_bins must be in [2, 256]");
  const Index n = x.rows();
  const Index p = x.cols();
  codes_.assign(static_cast<std::size_t>(n * p), 0);
  thresholds_.resize(static_cast<std::size_t>(p));
  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = x(i, j);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq = sorted;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    auto& cuts = thresholds_[static_cast<std::size_t>(j)];
    cuts.clear();
    if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t u = 0; u + 1 < uniq.size(); ++u) cuts.push_back(0.5 * (uniq[u] + uniq[u + 1]));
    } else {
      // Data quantiles, snapped to distinct values, then placed midway to the next value.
      std::vector<std::size_t> picks;
      for (int b = 1; b < max_bins; ++b) {
        const double v = sorted[static_cast<std::size_t>(b) * sorted.size() / static_cast<std::size_t>(max_bins)];
        auto it = std::lower_bound(uniq.begin(), uniq.end(), v);
        std::size_t u = static_cast<std::size_t>(it - uniq.begin());
        if (u + 1 < uniq.size() && (picks.empty() || picks.back() != u)) picks.push_back(u);
      }
      for (std::size_t u : picks) cuts.push_back(0.5 * (uniq[u] + uniq[u + 1]));
    }
    std::uint8_t* col = codes_.data() + j * n;
    for (Index i = 0; i < n; ++i) {
      const auto it = std::lower_bound(cuts.begin(), cuts.end(), x(i, j));
      col[i] = static_cast<std::uint8_t>(it - cuts.begin());
    }
  }
}

namespace {

struct Split {
  int feature = -1;
  int bin = -1;
  double gain = 0.0;
};

struct BinStats {
  double w = 0.0;
  double wy = 0.0;
  int count = 0;
};

struct PendingNode {
  int id;
  std::size_t begin;
  std::size_t end;
  int depth;
};

void consider(const BinStats& left, const BinStats& total, int min_leaf, double parent_score, int feature, int bin,
              Split& best) {
  const BinStats right{total.w - left.w, total.wy - left.wy, total.count - left.count};
  if (left.count < min_leaf || right.count < min_leaf) return;
  if (left.w <= 0.0 || right.w <= 0.0) return;
  const double gain = left.wy * left.wy / left.w + right.wy * right.wy / right.w - parent_score;
  if (gain > best.gain) best = {feature, bin, gain};
}

}  // namespace

RegressionTree RegressionTree::grow(const BinnedFeatures& bins, std::span<const double> target,
                                    std::span<const double> weights, std::vector<Index> rows,
                                    const GrowParams& params, Rng& rng) {
  RegressionTree tree;
  const Index p = bins.cols();
  const int mtry = (params.mtry <= 0 || params.mtry > p) ? static_cast<int>(p) : params.mtry;
  const int min_leaf = std::max(1, params.min_leaf);
  std::vector<int> features(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), 0);
  std::array<BinStats, 256> hist{};
  std::vector<std::pair<std::uint8_t, Index>> small;

  tree.nodes_.push_back(Node{});
  std::vector<PendingNode> stack{{0, 0, rows.size(), 0}};
  while (!stack.empty()) {
    const PendingNode cur = stack.back();
    stack.pop_back();
    BinStats total;
    double wyy = 0.0;
    for (std::size_t r = cur.begin; r < cur.end; ++r) {
      const auto i = static_cast<std::size_t>(rows[r]);
      total.w += weights[i];
      total.wy += weights[i] * target[i];
      wyy += weights[i] * target[i] * target[i];
    }
    total.count = static_cast<int>(cur.end - cur.begin);
    Node& node = tree.nodes_[static_cast<std::size_t>(cur.id)];
    node.value = total.w > 0.0 ? total.wy / total.w : 0.0;

    const bool depth_ok = params.max_depth < 0 || cur.depth < params.max_depth;
    if (!depth_ok || total.count < 2 * min_leaf || total.w <= 0.0) continue;
    const double parent_score = total.wy * total.wy / total.w;
    const double sse = wyy - parent_score;
    if (!(sse > 1e-12 * std::max(wyy, 1e-300))) continue;

    if (mtry < p) {
      for (int k = 0; k < mtry; ++k) {
        std::uniform_int_distribution<int> pick(k, static_cast<int>(p) - 1);
        std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(pick(rng))]);
      }
    }

    Split best;
    best.gain = 1e-12 * sse;
    for (int k = 0; k < mtry; ++k) {
      const int f = features[static_cast<std::size_t>(k)];
      const int nb = bins.bins(f);
      if (nb < 2) continue;
      const std::uint8_t* col = bins.column(f);
      if (static_cast<std::size_t>(total.count) * 4 < static_cast<std::size_t>(nb)) {
        // Small node: sort occurrences by bin instead of sweeping a full histogram.
        small.clear();
        for (std::size_t r = cur.begin; r < cur.end; ++r) small.emplace_back(col[rows[r]], rows[r]);
        std::sort(small.begin(), small.end());
        BinStats left;
        for (std::size_t s = 0; s < small.size(); ++s) {
          const auto i = static_cast<std::size_t>(small[s].second);
          left.w += weights[i];
          left.wy += weights[i] * target[i];
          ++left.count;
          if (s + 1 < small.size() && small[s + 1].first != small[s].first) {
            consider(left, total, min_leaf, parent_score, f, small[s].first, best);
          }
        }
      } else {
        std::fill(hist.begin(), hist.begin() + nb, BinStats{});
        for (std::size_t r = cur.begin; r < cur.end; ++r) {
          const auto i = static_cast<std::size_t>(rows[r]);
          BinStats& h = hist[col[i]];
          h.w += weights[i];
          h.wy += weights[i] * target[i];
          ++h.count;
        }
        BinStats left;
        for (int b = 0; b + 1 < nb; ++b) {
          left.w += hist[static_cast<std::size_t>(b)].w;
          left.wy += hist[static_cast<std::size_t>(b)].wy;
          left.count += hist[static_cast<std::size_t>(b)].count;
          if (hist[static_cast<std::size_t>(b)].count == 0) continue;
          consider(left, total, min_leaf, parent_score, f, b, best);
        }
      }
    }
    if (best.feature < 0) continue;

    const std::uint8_t* col = bins.column(best.feature);
    const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(cur.begin),
                                    rows.begin() + static_cast<std::ptrdiff_t>(cur.end),
                                    [&](Index i) { return col[i] <= best.bin; });
    const auto split_at = static_cast<std::size_t>(mid - rows.begin());
    const int left_id = static_cast<int>(tree.nodes_.size());
    const int right_id = left_id + 1;
    {
      Node& parent = tree.nodes_[static_cast<std::size_t>(cur.id)];
      parent.feature = best.feature;
      parent.threshold = bins.threshold(best.feature, best.bin);
      parent.left = left_id;
      parent.right = right_id;
    }
    tree.nodes_.push_back(Node{});
    tree.nodes_.push_back(Node{});
    stack.push_back({right_id, split_at, cur.end, cur.depth + 1});
    stack.push_back({left_id, cur.begin, split_at, cur.depth + 1});
  }
  return tree;
}

double RegressionTree::predict_row(const double* x, Index stride) const {
  const Node* node = &nodes_.front();
  while (node->feature >= 0) {
    const double v = x[node->feature * stride];
    node = &nodes_[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
  }
  return node->value;
}

void RegressionTree::predict_add(const Matrix& x, double scale, Vector& out) const {
  const Index stride = x.rows();
  for (Index i = 0; i < x.rows(); ++i) out(i) += scale * predict_row(x.data() + i, stride);
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& node = nodes_[k];
    if (node.feature < 0) continue;
    d[static_cast<std::size_t>(node.left)] = d[k] + 1;
    d[static_cast<std::size_t>(node.right)] = d[k] + 1;
    deepest = std::max(deepest, d[k] + 1);
  }
  return deepest;
}

}  // namespace cate::tree
