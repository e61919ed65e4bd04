#pragma once

// Simulated data from a partially linear model with correlated Gaussian
// covariates:
//
//   Y = tau(X) * D + g(X) + U,   U ~ N(0, 1)
//   D ~ Bernoulli(e(X))
//
// Covariate indices in the formulas below are 1-based (x1 is column 0).

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cate/common.hpp"

namespace cate::dgp {

enum class PropensityFamily { RandomBalanced, RandomImbalanced, Linear, Interaction, NonLinear };
enum class EffectFamily { Linear, Binary, NonLinear, Zero };

// How the linear effect "x1 + x2 > 0" is read.
enum class LinearEffectReading {
  X1PlusIndicator,  // x1 + 1{x2 > 0} + W
  IndicatorOfSum,   // 1{x1 + x2 > 0} + W
};

struct CorrelationSpec {
  Index p = 20;
  std::uint64_t seed = 0;
};

struct Scenario {
  char id = 'A';
  Index n = 2000;
  Index p = 20;
  PropensityFamily propensity = PropensityFamily::RandomBalanced;
  EffectFamily effect = EffectFamily::Linear;
  Index test_size = 10000;
};

// Options that are not part of a scenario but change how it is simulated.
struct DgpOptions {
  LinearEffectReading linear_effect = LinearEffectReading::X1PlusIndicator;
  double linear_effect_noise_variance = 0.5;
};

struct StandardizationStats {
  double mean = 0.0;
  double sd = 1.0;
};

struct SimulatedData {
  Matrix x;
  Vector d;
  Vector y;
  Vector tau_true;
  Vector e_true;

  Index size() const { return x.rows(); }
};

std::string to_string(PropensityFamily f);
std::string to_string(EffectFamily f);
std::optional<PropensityFamily> parse_propensity(const std::string& s);
std::optional<EffectFamily> parse_effect(const std::string& s);

// Scenario catalog A-L. Throws InvalidArgument for an unknown id.
Scenario scenario(char id);
std::vector<Scenario> all_scenarios();
bool is_scenario_id(char id);
// Balanced or imbalanced assignment probability, or nullopt for covariate-driven families.
std::optional<double> constant_propensity(PropensityFamily f);

// Random correlation matrix: A with iid U(-1, 1) entries, S = A'A + p I,
// rescaled to unit diagonal.
Matrix generate_correlation(const CorrelationSpec& spec);

// n iid rows from N(0, corr). Throws InvalidCorrelationError if corr is not
// a symmetric positive semi-definite matrix with unit diagonal.
Matrix draw_covariates(Index n, const Matrix& corr, Rng& rng);

// Same as draw_covariates but with a precomputed factor L (corr = L L').
Matrix draw_covariates_with_factor(Index n, const Matrix& factor, Rng& rng);
Matrix correlation_factor(const Matrix& corr);

// g(x) = x1 + x5 + x4 * x5.
double baseline_g(std::span<const double> x);

// Unstandardised assignment index a(x) for the covariate-driven families.
double assignment_index(std::span<const double> x, PropensityFamily f);
StandardizationStats assignment_stats(const Matrix& x, PropensityFamily f);

// e(x): constant c for the random families, otherwise
// Phi((a(x) - mean) / sd).
double propensity_score(std::span<const double> x, PropensityFamily f, const StandardizationStats& stats);

// Deterministic part t(x) of the effect, E[tau | x].
double expected_effect(std::span<const double> x, EffectFamily f, const DgpOptions& opts = {});

// tau(x) including the noise term W of the linear family.
double treatment_effect(std::span<const double> x, EffectFamily f, Rng& rng, const DgpOptions& opts = {});

// Holds everything fixed for one scenario: the correlation matrix, the
// standardisation stats of a(X), and the test set. Training sets are drawn
// per replication seed and share nothing with the test stream.
class Simulator {
 public:
  Simulator(Scenario scenario, std::uint64_t dgp_seed, DgpOptions opts = {});

  const Scenario& scenario() const { return scenario_; }
  const DgpOptions& options() const { return opts_; }
  const Matrix& correlation() const { return corr_; }
  const StandardizationStats& stats() const { return stats_; }
  const SimulatedData& test() const { return test_; }

  SimulatedData draw_train(std::uint64_t replication_seed) const;
  SimulatedData draw(Index n, std::uint64_t seed) const;

  // True nuisance functions, for oracle experiments.
  Vector true_mu0(const Matrix& x) const;
  Vector true_mu1(const Matrix& x) const;
  Vector true_propensity(const Matrix& x) const;

 private:
  SimulatedData draw_rows(const Matrix& x, Rng& rng) const;

  Scenario scenario_;
  DgpOptions opts_;
  Matrix corr_;
  Matrix factor_;
  StandardizationStats stats_;
  SimulatedData test_;
};

// Train/test pair for one seed; the test set depends only on (scenario, seed).
std::pair<SimulatedData, SimulatedData> simulate(const Scenario& scenario, std::uint64_t seed,
                                                 std::uint64_t replication = 0, const DgpOptions& opts = {});

// CSV with header x1..xp,d,y,tau_true,e_true.
void write_csv(std::ostream& out, const SimulatedData& data);

}  // namespace cate::dgp
