#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cate/dgp.hpp"

using namespace cate;
using namespace cate::dgp;

namespace {

std::vector<double> row(std::initializer_list<std::pair<int, double>> entries, std::size_t p = 20) {
  std::vector<double> x(p, 0.0);
  for (auto [i, v] : entries) x[static_cast<std::size_t>(i - 1)] = v;  // 1-based covariate labels
  return x;
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST(Correlation, DimensionOneIsUnit) {
  const Matrix c = generate_correlation({1, 5});
  ASSERT_EQ(c.rows(), 1);
  EXPECT_EQ(c(0, 0), 1.0);
}

TEST(Correlation, SymmetricWithUnitDiagonal) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const Matrix c = generate_correlation({3, seed});
    for (Index i = 0; i < 3; ++i) {
      EXPECT_EQ(c(i, i), 1.0);
      for (Index j = 0; j < 3; ++j) {
        EXPECT_EQ(c(i, j), c(j, i));
        EXPECT_LE(std::abs(c(i, j)), 1.0);
      }
    }
  }
}

TEST(Correlation, PositiveSemiDefiniteAtP20) {
  const Matrix c = generate_correlation({20, 7});
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
}

TEST(Correlation, SeedDeterminesMatrix) {
  EXPECT_EQ(generate_correlation({20, 3}), generate_correlation({20, 3}));
  EXPECT_NE(generate_correlation({20, 3}), generate_correlation({20, 4}));
}

TEST(Correlation, RejectsNonPsdInput) {
  Matrix bad(3, 3);
  bad << 1, 0.99, -0.99, 0.99, 1, 0.99, -0.99, 0.99, 1;
  EXPECT_THROW(correlation_factor(bad), InvalidCorrelationError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.3;
  EXPECT_THROW(correlation_factor(asym), InvalidCorrelationError);
}

TEST(Covariates, EmptyDraw) {
  Rng rng(1);
  const Matrix x = draw_covariates(0, Matrix::Identity(4, 4), rng);
  EXPECT_EQ(x.rows(), 0);
  EXPECT_EQ(x.cols(), 4);
}

TEST(Covariates, IdentityMeansNearZero) {
  Rng rng(11);
  const Index n = 100000;
  const Matrix x = draw_covariates(n, Matrix::Identity(5, 5), rng);
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  for (Index j = 0; j < 5; ++j) EXPECT_LT(std::abs(x.col(j).mean()), bound);
}

TEST(Covariates, SampleCorrelationMatchesTarget) {
  Matrix corr = Matrix::Identity(3, 3);
  corr(0, 1) = corr(1, 0) = 0.8;
  Rng rng(12);
  const Matrix x = draw_covariates(100000, corr, rng);
  const Vector a = x.col(0).array() - x.col(0).mean();
  const Vector b = x.col(1).array() - x.col(1).mean();
  const double r = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  EXPECT_NEAR(r, 0.8, 0.02);
}

TEST(Baseline, HandEvaluations) {
  EXPECT_EQ(baseline_g(row({})), 0.0);
  EXPECT_DOUBLE_EQ(baseline_g(row({{1, 1}, {4, 2}, {5, 3}})), 10.0);
  EXPECT_DOUBLE_EQ(baseline_g(row({{1, -1}, {4, 1}, {5, -1}})), -3.0);
}

TEST(Baseline, NeedsFiveCovariates) {
  std::vector<double> x(4, 0.0);
  EXPECT_THROW(baseline_g(x), DimensionError);
}

TEST(Propensity, ConstantFamilies) {
  Rng rng(3);
  std::normal_distribution<double> z;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(20);
    for (auto& v : x) v = z(rng);
    EXPECT_EQ(propensity_score(x, PropensityFamily::RandomBalanced, {}), 0.5);
    EXPECT_EQ(propensity_score(x, PropensityFamily::RandomImbalanced, {}), 0.2);
  }
}

TEST(Propensity, IndexAtMeanGivesOneHalf) {
  const auto x = row({{2, 0.3}, {5, -1.0}, {8, 0.2}});
  for (auto f : {PropensityFamily::Linear, PropensityFamily::Interaction, PropensityFamily::NonLinear}) {
    const StandardizationStats stats{assignment_index(x, f), 1.7};
    EXPECT_DOUBLE_EQ(propensity_score(x, f, stats), 0.5);
  }
}

TEST(Propensity, IndexFormulas) {
  std::vector<double> x(20);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i) - 0.7;
  double harmonic = 0.0;
  for (std::size_t l = 1; l <= 20; ++l) harmonic += x[l - 1] / static_cast<double>(l);
  const double x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x8 = x[7];
  EXPECT_NEAR(assignment_index(x, PropensityFamily::Linear), x2 + x5 + x2 - x8, 1e-14);
  EXPECT_NEAR(assignment_index(x, PropensityFamily::Interaction), harmonic + x5 + x2 + x3 * x8, 1e-14);
  EXPECT_NEAR(assignment_index(x, PropensityFamily::NonLinear), harmonic + std::sin(x5) + x2 + std::cos(x4 * x8),
              1e-14);
  const StandardizationStats stats{0.2, 1.3};
  EXPECT_NEAR(propensity_score(x, PropensityFamily::Linear, stats), phi((x2 + x5 + x2 - x8 - 0.2) / 1.3), 1e-14);
}

TEST(Propensity, ZeroSdIsDegenerate) {
  const auto x = row({});
  EXPECT_THROW(propensity_score(x, PropensityFamily::Linear, {0.0, 0.0}), DegeneratePropensityError);
}

TEST(Propensity, LinearFamilyBernoulliOracle) {
  Simulator sim(scenario('C'), 21);
  const SimulatedData data = sim.draw(100000, 5);
  const Vector& e = data.e_true;
  const double mean_e = e.mean();
  const double var_e = (e.array() - mean_e).square().mean();
  EXPECT_GT(var_e, 0.0);
  EXPECT_LE(var_e, 0.25);
  EXPECT_NEAR(data.d.mean(), mean_e, 0.02);
}

TEST(Effect, ZeroBinaryNonLinear) {
  Rng rng(4);
  EXPECT_EQ(treatment_effect(row({{1, 3.0}, {5, 1.0}}), EffectFamily::Zero, rng), 0.0);
  EXPECT_EQ(treatment_effect(row({{5, 0.2}}), EffectFamily::Binary, rng), 2.0);
  EXPECT_EQ(treatment_effect(row({{5, -0.1}}), EffectFamily::Binary, rng), 1.0);
  EXPECT_DOUBLE_EQ(treatment_effect(row({}), EffectFamily::NonLinear, rng), 1.0);
}

TEST(Effect, LinearReadings) {
  const auto x = row({{1, -0.4}, {2, 0.3}});
  EXPECT_DOUBLE_EQ(expected_effect(x, EffectFamily::Linear), -0.4 + 1.0);
  DgpOptions alt;
  alt.linear_effect = LinearEffectReading::IndicatorOfSum;
  EXPECT_DOUBLE_EQ(expected_effect(x, EffectFamily::Linear, alt), 0.0);
}

TEST(Effect, LinearNoiseHasVarianceOneHalf) {
  Rng rng(8);
  const auto x = row({{1, 0.5}, {2, 1.0}});
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = treatment_effect(x, EffectFamily::Linear, rng) - 1.5;
    s += w;
    s2 += w * w;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(0.5 / n));
  EXPECT_NEAR(s2 / n - mean * mean, 0.5, 0.01);
}

TEST(Effect, NeedsTenCovariates) {
  Rng rng(1);
  std::vector<double> x(9, 0.0);
  EXPECT_THROW(treatment_effect(x, EffectFamily::Zero, rng), DimensionError);
}

TEST(Scenarios, CatalogMatchesGrid) {
  using P = PropensityFamily;
  using E = EffectFamily;
  const P prop[] = {P::RandomBalanced, P::RandomImbalanced, P::Linear, P::Interaction, P::NonLinear, P::Linear};
  const E eff[] = {E::Linear, E::Linear, E::NonLinear, E::Binary, E::NonLinear, E::Zero};
  const auto all = all_scenarios();
  ASSERT_EQ(all.size(), 12u);
  for (int k = 0; k < 12; ++k) {
    const Scenario& s = all[static_cast<std::size_t>(k)];
    EXPECT_EQ(s.id, 'A' + k);
    EXPECT_EQ(s.n, k < 6 ? 2000 : 500);
    EXPECT_EQ(s.p, 20);
    EXPECT_EQ(s.propensity, prop[k % 6]);
    EXPECT_EQ(s.effect, eff[k % 6]);
  }
  EXPECT_THROW(scenario('M'), InvalidArgument);
}

TEST(Simulate, ZeroEffectDifferenceInMeans) {
  Scenario s = scenario('A');
  s.effect = EffectFamily::Zero;
  s.n = 100000;
  s.test_size = 10;
  const auto [train, test] = simulate(s, 17);
  double s1 = 0, s0 = 0, q1 = 0, q0 = 0;
  int n1 = 0, n0 = 0;
  for (Index i = 0; i < train.size(); ++i) {
    const double y = train.y(i);
    if (train.d(i) > 0.5) {
      s1 += y, q1 += y * y, ++n1;
    } else {
      s0 += y, q0 += y * y, ++n0;
    }
  }
  const double m1 = s1 / n1, m0 = s0 / n0;
  const double v1 = q1 / n1 - m1 * m1, v0 = q0 / n0 - m0 * m0;
  const double se = std::sqrt(v1 / n1 + v0 / n0);
  EXPECT_LT(std::abs(m1 - m0), 4.0 * se);
}

TEST(Simulate, ImbalancedTreatedShare) {
  Scenario s = scenario('B');
  s.n = 100000;
  s.test_size = 10;
  const auto [train, test] = simulate(s, 3);
  EXPECT_NEAR(train.d.mean(), 0.2, 0.01);
}

TEST(Simulate, DeterministicAndSharedTestSet) {
  Scenario s = scenario('E');
  s.test_size = 300;
  const auto a = simulate(s, 42, 0);
  const auto b = simulate(s, 42, 0);
  const auto c = simulate(s, 42, 1);
  EXPECT_EQ(a.first.x, b.first.x);
  EXPECT_EQ(a.first.y, b.first.y);
  EXPECT_EQ(a.first.d, b.first.d);
  EXPECT_EQ(a.second.x, b.second.x);
  EXPECT_EQ(a.second.tau_true, c.second.tau_true);
  EXPECT_EQ(a.second.x, c.second.x);
  EXPECT_NE(a.first.x, c.first.x);
}

TEST(Simulate, ResidualNoiseIsStandardNormal) {
  Scenario s = scenario('D');
  s.n = 100000;
  s.test_size = 10;
  const auto [train, test] = simulate(s, 9);
  std::vector<double> u(static_cast<std::size_t>(train.size()));
  std::vector<double> buf(20);
  for (Index i = 0; i < train.size(); ++i) {
    for (Index j = 0; j < 20; ++j) buf[static_cast<std::size_t>(j)] = train.x(i, j);
    u[static_cast<std::size_t>(i)] = train.y(i) - baseline_g(buf) - train.tau_true(i) * train.d(i);
  }
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double f = phi(u[i]);
    dmax = std::max({dmax, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  EXPECT_LT(dmax, 1.949 / std::sqrt(n));  // KS critical value at alpha = 0.001
}

TEST(Simulate, OverlapAndEffectSupports) {
  for (char id : {'A', 'B', 'C', 'D', 'E', 'F'}) {
    Scenario s = scenario(id);
    s.test_size = 2000;
    const auto [train, test] = simulate(s, 5);
    EXPECT_GT(train.e_true.minCoeff(), 0.0) << id;
    EXPECT_LT(train.e_true.maxCoeff(), 1.0) << id;
    EXPECT_EQ(train.size(), 2000);
    EXPECT_EQ(test.size(), 2000);
    if (s.effect == EffectFamily::Binary) {
      std::set<double> values(train.tau_true.data(), train.tau_true.data() + train.size());
      EXPECT_EQ(values, (std::set<double>{1.0, 2.0}));
    }
    if (s.effect == EffectFamily::Zero) EXPECT_EQ(train.tau_true.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Simulate, TrueNuisancesMatchDefinitions) {
  Scenario s = scenario('C');
  s.test_size = 50;
  Simulator sim(s, 2);
  const Matrix& x = sim.test().x;
  const Vector diff = sim.true_mu1(x) - sim.true_mu0(x);
  std::vector<double> buf(20);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < 20; ++j) buf[static_cast<std::size_t>(j)] = x(i, j);
    EXPECT_NEAR(diff(i), expected_effect(buf, EffectFamily::NonLinear), 1e-12);
  }
  EXPECT_EQ(sim.true_propensity(x), sim.test().e_true);
}

TEST(Simulate, CsvHeaderAndShape) {
  Scenario s = scenario('G');
  s.test_size = 5;
  const auto [train, test] = simulate(s, 1);
  std::ostringstream os;
  write_csv(os, test);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  std::string expected;
  for (int j = 1; j <= 20; ++j) expected += "x" + std::to_string(j) + ",";
  expected += "d,y,tau_true,e_true";
  EXPECT_EQ(header, expected);
  int lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  EXPECT_EQ(lines, 5);
}
