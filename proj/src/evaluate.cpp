#include "cate/evaluate.hpp"

#include <vector>

namespace cate {

std::string to_string(MedianMseMode m) {
  return m == MedianMseMode::PerReplication ? "per_replication" : "per_row";
}

std::optional<MedianMseMode> parse_median_mse_mode(const std::string& s) {
  if (s == "per_replication") return MedianMseMode::PerReplication;
  if (s == "per_row") return MedianMseMode::PerRow;
  return std::nullopt;
}

void validate(const PredictionCube& cube) {
  if (cube.replications() < 1) throw InvalidArgument("prediction cube needs at least one replication");
  if (cube.tau_true.size() != cube.test_rows()) throw DimensionError("tau_true length differs from test rows");
  if (!cube.values.allFinite() || !cube.tau_true.allFinite()) throw InvalidArgument("non-finite prediction cube");
}

Vector mse_per_row(const PredictionCube& cube) {
  validate(cube);
  const Matrix err = cube.values.rowwise() - cube.tau_true.transpose();
  return err.array().square().colwise().mean().transpose();
}

Vector abs_bias_per_row(const PredictionCube& cube) {
  validate(cube);
  return (cube.values.colwise().mean().transpose() - cube.tau_true).cwiseAbs();
}

Vector sd_per_row(const PredictionCube& cube) {
  validate(cube);
  const Eigen::RowVectorXd mean = cube.values.colwise().mean();
  const Matrix dev = cube.values.rowwise() - mean;
  return dev.array().square().colwise().mean().sqrt().transpose();
}

Vector mse_per_replication(const PredictionCube& cube) {
  validate(cube);
  const Matrix err = cube.values.rowwise() - cube.tau_true.transpose();
  return err.array().square().rowwise().mean();
}

EvalReport aggregate(const PredictionCube& cube, MedianMseMode mode, bool keep_rows) {
  EvalReport r;
  Vector mse = mse_per_row(cube);
  Vector bias = abs_bias_per_row(cube);
  Vector sd = sd_per_row(cube);
  r.mean_mse = mse.mean();
  r.mean_abs_bias = bias.mean();
  r.mean_sd = sd.mean();
  r.replications = cube.replications();
  const Vector source = mode == MedianMseMode::PerReplication ? mse_per_replication(cube) : mse;
  r.median_mse = median(std::vector<double>(source.data(), source.data() + source.size()));
  if (keep_rows) {
    r.mse = std::move(mse);
    r.abs_bias = std::move(bias);
    r.sd = std::move(sd);
  }
  return r;
}

}  // namespace cate
