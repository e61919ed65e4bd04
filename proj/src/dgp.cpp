#include "cate/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

#include "cate/seeding.hpp"

namespace cate::dgp {

namespace {

constexpr Index kStatsSampleSize = 100000;

void require_dim(std::span<const double> x, Index min_p, const char* what) {
  if (static_cast<Index>(x.size()) < min_p) {
    throw DimensionError(std::string(what) + " needs at least " + std::to_string(min_p) + " covariates, got " +
                         std::to_string(x.size()));
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// x * b with b_l = 1 / l.
double harmonic_weighted_sum(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) s += x[l] / static_cast<double>(l + 1);
  return s;
}

std::span<const double> row_span(const Matrix& x, Index i, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) buf[static_cast<std::size_t>(j)] = x(i, j);
  return {buf.data(), buf.size()};
}

}  // namespace

std::string to_string(PropensityFamily f) {
  switch (f) {
    case PropensityFamily::RandomBalanced: return "random_balanced";
    case PropensityFamily::RandomImbalanced: return "random_imbalanced";
    case PropensityFamily::Linear: return "linear";
    case PropensityFamily::Interaction: return "interaction";
    case PropensityFamily::NonLinear: return "nonlinear";
  }
  return "?";
}

std::string to_string(EffectFamily f) {
  switch (f) {
    case EffectFamily::Linear: return "linear";
    case EffectFamily::Binary: return "binary";
    case EffectFamily::NonLinear: return "nonlinear";
    case EffectFamily::Zero: return "zero";
  }
  return "?";
}

std::optional<PropensityFamily> parse_propensity(const std::string& s) {
  for (auto f : {PropensityFamily::RandomBalanced, PropensityFamily::RandomImbalanced, PropensityFamily::Linear,
                 PropensityFamily::Interaction, PropensityFamily::NonLinear}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

std::optional<EffectFamily> parse_effect(const std::string& s) {
  for (auto f : {EffectFamily::Linear, EffectFamily::Binary, EffectFamily::NonLinear, EffectFamily::Zero}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

bool is_scenario_id(char id) { return id >= 'A' && id <= 'L'; }

Scenario scenario(char id) {
  if (!is_scenario_id(id)) throw InvalidArgument(std::string("unknown scenario id '") + id + "'");
  using P = PropensityFamily;
  using E = EffectFamily;
  static constexpr P kProp[] = {P::RandomBalanced, P::RandomImbalanced, P::Linear,
                                P::Interaction,    P::NonLinear,        P::Linear};
  static constexpr E kEffect[] = {E::Linear, E::Linear, E::NonLinear, E::Binary, E::NonLinear, E::Zero};
  const int k = id - 'A';
  Scenario s;
  s.id = id;
  s.n = k < 6 ? 2000 : 500;
  s.p = 20;
  s.propensity = kProp[k % 6];
  s.effect = kEffect[k % 6];
  s.test_size = 10000;
  return s;
}

std::vector<Scenario> all_scenarios() {
  std::vector<Scenario> out;
  for (char c = 'A'; c <= 'L'; ++c) out.push_back(scenario(c));
  return out;
}

std::optional<double> constant_propensity(PropensityFamily f) {
  if (f == PropensityFamily::RandomBalanced) return 0.5;
  if (f == PropensityFamily::RandomImbalanced) return 0.2;
  return std::nullopt;
}

Matrix generate_correlation(const CorrelationSpec& spec) {
  if (spec.p < 1) throw InvalidArgument("correlation dimension must be >= 1");
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix a(spec.p, spec.p);
  for (Index j = 0; j < spec.p; ++j)
    for (Index i = 0; i < spec.p; ++i) a(i, j) = unif(rng);
  Matrix cov = a.transpose() * a;
  cov.diagonal().array() += static_cast<double>(spec.p);
  const Vector inv_sd = cov.diagonal().array().sqrt().inverse();
  Matrix corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  corr = 0.5 * (corr + corr.transpose());
  corr.diagonal().setOnes();
  return corr;
}

Matrix correlation_factor(const Matrix& corr) {
  if (corr.rows() != corr.cols()) throw InvalidCorrelationError("correlation matrix is not square");
  const Index p = corr.rows();
  for (Index i = 0; i < p; ++i) {
    if (std::abs(corr(i, i) - 1.0) > 1e-9) throw InvalidCorrelationError("correlation matrix diagonal is not 1");
    for (Index j = 0; j < i; ++j) {
      if (std::abs(corr(i, j) - corr(j, i)) > 1e-9) throw InvalidCorrelationError("correlation matrix not symmetric");
      if (std::abs(corr(i, j)) > 1.0 + 1e-12) throw InvalidCorrelationError("correlation entry outside [-1, 1]");
    }
  }
  Eigen::LLT<Matrix> llt(corr);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Singular but PSD matrices have no Cholesky factor; fall back to V sqrt(L).
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-8) {
    throw InvalidCorrelationError("correlation matrix is not positive semi-definite");
  }
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Matrix draw_covariates_with_factor(Index n, const Matrix& factor, Rng& rng) {
  const Index p = factor.rows();
  std::normal_distribution<double> norm(0.0, 1.0);
  Matrix z(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) z(i, j) = norm(rng);
  return z * factor.transpose();
}

Matrix draw_covariates(Index n, const Matrix& corr, Rng& rng) {
  if (n < 0) throw InvalidArgument("negative sample size");
  return draw_covariates_with_factor(n, correlation_factor(corr), rng);
}

double baseline_g(std::span<const double> x) {
  require_dim(x, 5, "g(x)");
  return x[0] + x[4] + x[3] * x[4];
}

double assignment_index(std::span<const double> x, PropensityFamily f) {
  require_dim(x, 8, "a(x)");
  switch (f) {
    case PropensityFamily::Linear:
      // x2 appears twice in the published index; kept as written.
      return x[1] + x[4] + x[1] - x[7];
    case PropensityFamily::Interaction:
      return harmonic_weighted_sum(x) + x[4] + x[1] + x[2] * x[7];
    case PropensityFamily::NonLinear:
      return harmonic_weighted_sum(x) + std::sin(x[4]) + x[1] + std::cos(x[3] * x[7]);
    case PropensityFamily::RandomBalanced:
    case PropensityFamily::RandomImbalanced:
      return 0.0;
  }
  return 0.0;
}

StandardizationStats assignment_stats(const Matrix& x, PropensityFamily f) {
  if (constant_propensity(f)) return {};
  if (x.rows() < 2) throw DegeneratePropensityError("need at least two rows to standardise a(X)");
  std::vector<double> buf;
  Vector a(x.rows());
  for (Index i = 0; i < x.rows(); ++i) a(i) = assignment_index(row_span(x, i, buf), f);
  const double mean = a.mean();
  const double sd = std::sqrt((a.array() - mean).square().sum() / static_cast<double>(a.size() - 1));
  return {mean, sd};
}

double propensity_score(std::span<const double> x, PropensityFamily f, const StandardizationStats& stats) {
  if (auto c = constant_propensity(f)) return *c;
  if (!(stats.sd > 0.0)) throw DegeneratePropensityError("a(X) has zero standard deviation");
  const double e = normal_cdf((assignment_index(x, f) - stats.mean) / stats.sd);
  // Phi saturates in double precision far in the tails; keep e strictly inside (0, 1).
  constexpr double kEps = 1e-12;
  return std::clamp(e, kEps, 1.0 - kEps);
}

double expected_effect(std::span<const double> x, EffectFamily f, const DgpOptions& opts) {
  require_dim(x, 10, "tau(x)");
  switch (f) {
    case EffectFamily::Linear:
      if (opts.linear_effect == LinearEffectReading::IndicatorOfSum) return x[0] + x[1] > 0.0 ? 1.0 : 0.0;
      return x[0] + (x[1] > 0.0 ? 1.0 : 0.0);
    case EffectFamily::Binary:
      return x[4] > 0.0 ? 2.0 : 1.0;
    case EffectFamily::NonLinear:
      return std::sin(x[0] + 0.5 * x[1] + x[2] / 3.0) + std::cos(x[9]);
    case EffectFamily::Zero:
      return 0.0;
  }
  return 0.0;
}

double treatment_effect(std::span<const double> x, EffectFamily f, Rng& rng, const DgpOptions& opts) {
  const double t = expected_effect(x, f, opts);
  if (f != EffectFamily::Linear) return t;
  std::normal_distribution<double> w(0.0, std::sqrt(opts.linear_effect_noise_variance));
  return t + w(rng);
}

Simulator::Simulator(Scenario scenario, std::uint64_t dgp_seed, DgpOptions opts)
    : scenario_(scenario), opts_(opts) {
  if (scenario_.p < 10) throw InvalidArgument("scenarios need p >= 10");
  if (scenario_.n < 0 || scenario_.test_size < 0) throw InvalidArgument("negative sample size");
  corr_ = generate_correlation({scenario_.p, derive_seed(dgp_seed, {1})});
  factor_ = correlation_factor(corr_);
  if (!constant_propensity(scenario_.propensity)) {
    Rng rng(derive_seed(dgp_seed, {2}));
    stats_ = assignment_stats(draw_covariates_with_factor(kStatsSampleSize, factor_, rng), scenario_.propensity);
  }
  test_ = draw(scenario_.test_size, derive_seed(dgp_seed, {3}));
}

SimulatedData Simulator::draw(Index n, std::uint64_t seed) const {
  Rng rng(seed);
  Matrix x = draw_covariates_with_factor(n, factor_, rng);
  return draw_rows(x, rng);
}

SimulatedData Simulator::draw_train(std::uint64_t replication_seed) const {
  return draw(scenario_.n, replication_seed);
}

SimulatedData Simulator::draw_rows(const Matrix& x, Rng& rng) const {
  const Index n = x.rows();
  SimulatedData out;
  out.d.resize(n);
  out.y.resize(n);
  out.tau_true.resize(n);
  out.e_true.resize(n);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> buf;
  for (Index i = 0; i < n; ++i) {
    const auto row = row_span(x, i, buf);
    const double e = propensity_score(row, scenario_.propensity, stats_);
    const double tau = treatment_effect(row, scenario_.effect, rng, opts_);
    const double d = unif(rng) < e ? 1.0 : 0.0;
    out.e_true(i) = e;
    out.tau_true(i) = tau;
    out.d(i) = d;
    out.y(i) = tau * d + baseline_g(row) + noise(rng);
  }
  out.x = x;
  return out;
}

Vector Simulator::true_mu0(const Matrix& x) const {
  std::vector<double> buf;
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = baseline_g(row_span(x, i, buf));
  return out;
}

Vector Simulator::true_mu1(const Matrix& x) const {
  std::vector<double> buf;
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const auto row = row_span(x, i, buf);
    out(i) = baseline_g(row) + expected_effect(row, scenario_.effect, opts_);
  }
  return out;
}

Vector Simulator::true_propensity(const Matrix& x) const {
  std::vector<double> buf;
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = propensity_score(row_span(x, i, buf), scenario_.propensity, stats_);
  return out;
}

std::pair<SimulatedData, SimulatedData> simulate(const Scenario& scenario, std::uint64_t seed,
                                                 std::uint64_t replication, const DgpOptions& opts) {
  Simulator sim(scenario, seed, opts);
  return {sim.draw_train(derive_seed(seed, {4, replication})), sim.test()};
}

void write_csv(std::ostream& out, const SimulatedData& data) {
  const Index p = data.x.cols();
  for (Index j = 0; j < p; ++j) out << 'x' << (j + 1) << ',';
  out << "d,y,tau_true,e_true\n";
  out << std::setprecision(17);
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < p; ++j) out << data.x(i, j) << ',';
    out << static_cast<int>(data.d(i)) << ',' << data.y(i) << ',' << data.tau_true(i) << ',' << data.e_true(i)
        << '\n';
  }
}

}  // namespace cate::dgp
