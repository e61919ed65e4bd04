#pragma once

// Monte Carlo performance measures over R replications and N_T test rows:
//   MSE_i   = mean_r (tau_hat_ir - tau_i)^2
//   |Bias|_i = |mean_r tau_hat_ir - tau_i|
//   SD_i    = sqrt(mean_r (tau_hat_ir - mean_r tau_hat_ir)^2)   (divisor R)
// so that MSE_i = Bias_i^2 + SD_i^2 exactly.

#include <optional>
#include <string>

#include "cate/common.hpp"

namespace cate {

struct PredictionCube {
  Matrix values;   // R x N_T
  Vector tau_true; // N_T

  Index replications() const { return values.rows(); }
  Index test_rows() const { return values.cols(); }
};

enum class MedianMseMode {
  PerReplication,  // median over replications of the test-set mean squared error
  PerRow,          // median over test rows of MSE_i
};

std::string to_string(MedianMseMode m);
std::optional<MedianMseMode> parse_median_mse_mode(const std::string& s);

struct EvalReport {
  double mean_mse = 0.0;
  double mean_abs_bias = 0.0;
  double mean_sd = 0.0;
  double median_mse = 0.0;
  Index replications = 0;
  std::optional<Vector> mse;
  std::optional<Vector> abs_bias;
  std::optional<Vector> sd;
};

// Throws InvalidArgument on an empty or non-finite cube.
void validate(const PredictionCube& cube);

Vector mse_per_row(const PredictionCube& cube);
Vector abs_bias_per_row(const PredictionCube& cube);
Vector sd_per_row(const PredictionCube& cube);

// Test-set mean squared error of each replication.
Vector mse_per_replication(const PredictionCube& cube);

EvalReport aggregate(const PredictionCube& cube, MedianMseMode mode = MedianMseMode::PerReplication,
                     bool keep_rows = false);

}  // namespace cate
