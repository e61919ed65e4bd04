#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cate/evaluate.hpp"

using namespace cate;

namespace {

PredictionCube cube(Index r, Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  PredictionCube c{Matrix(r, n), Vector(n)};
  for (Index j = 0; j < n; ++j) c.tau_true(j) = z(rng);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < n; ++j) c.values(i, j) = c.tau_true(j) + 0.3 + z(rng);
  return c;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST(Evaluate, PerfectPredictions) {
  PredictionCube c{Matrix(3, 2), Vector(2)};
  c.tau_true << 1.0, -2.0;
  c.values.rowwise() = c.tau_true.transpose();
  const auto r = aggregate(c);
  EXPECT_EQ(r.mean_mse, 0.0);
  EXPECT_EQ(r.mean_abs_bias, 0.0);
  EXPECT_EQ(r.mean_sd, 0.0);
  EXPECT_EQ(r.median_mse, 0.0);
  EXPECT_EQ(r.replications, 3);
}

TEST(Evaluate, ConstantOffset) {
  PredictionCube c{Matrix::Constant(4, 3, 2.0), Vector::Constant(3, 1.5)};
  const auto r = aggregate(c);
  EXPECT_DOUBLE_EQ(r.mean_mse, 0.25);
  EXPECT_DOUBLE_EQ(r.mean_abs_bias, 0.5);
  EXPECT_DOUBLE_EQ(r.mean_sd, 0.0);
}

TEST(Evaluate, TwoReplicationHandExample) {
  // Predictions 0 and 2 around truth 0: bias 1, SD 1 (divisor R), MSE 2.
  PredictionCube c{Matrix(2, 1), Vector::Zero(1)};
  c.values << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(mse_per_row(c)(0), 2.0);
  EXPECT_DOUBLE_EQ(abs_bias_per_row(c)(0), 1.0);
  EXPECT_DOUBLE_EQ(sd_per_row(c)(0), 1.0);
}

TEST(Evaluate, BiasVarianceIdentity) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto c = cube(2 + static_cast<Index>(s % 7), 15, s);
    const Vector mse = mse_per_row(c);
    const Vector b = abs_bias_per_row(c);
    const Vector sd = sd_per_row(c);
    for (Index j = 0; j < 15; ++j) EXPECT_NEAR(mse(j), b(j) * b(j) + sd(j) * sd(j), 1e-10);
  }
}

TEST(Evaluate, BruteForceSmallCube) {
  PredictionCube c{Matrix(3, 2), Vector(2)};
  c.values << 1, 4, 2, 0, 6, 2;
  c.tau_true << 2, 1;
  const auto r = aggregate(c, MedianMseMode::PerReplication, true);
  double mse[2] = {0, 0}, mean[2] = {0, 0};
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 3; ++i) {
      mse[j] += std::pow(c.values(i, j) - c.tau_true(j), 2) / 3.0;
      mean[j] += c.values(i, j) / 3.0;
    }
  }
  double var[2] = {0, 0};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) var[j] += std::pow(c.values(i, j) - mean[j], 2) / 3.0;
  EXPECT_NEAR(r.mean_mse, 0.5 * (mse[0] + mse[1]), 1e-12);
  EXPECT_NEAR(r.mean_abs_bias, 0.5 * (std::abs(mean[0] - 2) + std::abs(mean[1] - 1)), 1e-12);
  EXPECT_NEAR(r.mean_sd, 0.5 * (std::sqrt(var[0]) + std::sqrt(var[1])), 1e-12);
  std::vector<double> per_rep;
  for (int i = 0; i < 3; ++i)
    per_rep.push_back(0.5 * (std::pow(c.values(i, 0) - 2, 2) + std::pow(c.values(i, 1) - 1, 2)));
  EXPECT_NEAR(r.median_mse, median_of(per_rep), 1e-12);
  ASSERT_TRUE(r.mse.has_value());
  EXPECT_NEAR((*r.mse)(0), mse[0], 1e-12);
}

TEST(Evaluate, MedianModes) {
  const auto c = cube(5, 8, 3);
  const Vector rows = mse_per_row(c);
  const Vector reps = mse_per_replication(c);
  EXPECT_NEAR(aggregate(c, MedianMseMode::PerRow).median_mse,
              median_of(std::vector<double>(rows.data(), rows.data() + rows.size())), 1e-12);
  EXPECT_NEAR(aggregate(c, MedianMseMode::PerReplication).median_mse,
              median_of(std::vector<double>(reps.data(), reps.data() + reps.size())), 1e-12);
  EXPECT_NEAR(reps.mean(), rows.mean(), 1e-12);
  EXPECT_EQ(parse_median_mse_mode(to_string(MedianMseMode::PerRow)), MedianMseMode::PerRow);
  EXPECT_FALSE(parse_median_mse_mode("bogus").has_value());
}

TEST(Evaluate, InvariantUnderReplicationAndRowPermutation) {
  const auto c = cube(6, 10, 4);
  PredictionCube p{c.values.colwise().reverse(), c.tau_true};
  PredictionCube q{c.values.rowwise().reverse(), c.tau_true.reverse()};
  const auto a = aggregate(c), b = aggregate(p), d = aggregate(q);
  for (const auto* o : {&b, &d}) {
    EXPECT_NEAR(a.mean_mse, o->mean_mse, 1e-12);
    EXPECT_NEAR(a.mean_abs_bias, o->mean_abs_bias, 1e-12);
    EXPECT_NEAR(a.mean_sd, o->mean_sd, 1e-12);
  }
  EXPECT_NEAR(a.median_mse, b.median_mse, 1e-12);
}

TEST(Evaluate, NonNegative) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = aggregate(cube(3, 4, 100 + s));
    EXPECT_GE(r.mean_mse, 0.0);
    EXPECT_GE(r.mean_abs_bias, 0.0);
    EXPECT_GE(r.mean_sd, 0.0);
    EXPECT_GE(r.median_mse, 0.0);
  }
}

TEST(Evaluate, SingleReplicationHasZeroSpread) {
  const auto c = cube(1, 5, 9);
  const auto r = aggregate(c);
  EXPECT_EQ(r.mean_sd, 0.0);
  EXPECT_NEAR(r.mean_mse, r.median_mse, 1e-12);
}

TEST(Evaluate, Validation) {
  EXPECT_THROW(validate(PredictionCube{Matrix(0, 3), Vector(3)}), InvalidArgument);
  EXPECT_THROW(validate(PredictionCube{Matrix::Zero(2, 3), Vector::Zero(2)}), DimensionError);
  PredictionCube bad{Matrix::Zero(2, 2), Vector::Zero(2)};
  bad.values(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(aggregate(bad), InvalidArgument);
}
