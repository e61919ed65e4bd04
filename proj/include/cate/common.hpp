#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using RowIds = std::vector<Index>;
using Rng = std::mt19937_64;

// Errors. Everything the library throws derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input that violates a documented precondition (bad config, empty data, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A fold or group without enough treated/control rows for a required fit.
class DegenerateFoldError : public Error {
 public:
  using Error::Error;
};

// A standardised propensity index with zero spread.
class DegeneratePropensityError : public Error {
 public:
  using Error::Error;
};

// A correlation matrix that cannot be factorised.
class InvalidCorrelationError : public Error {
 public:
  using Error::Error;
};

// A nuisance model trained on rows of the fold it is evaluated on.
class LeakageError : public Error {
 public:
  using Error::Error;
};

// Copies the selected rows of x.
Matrix take_rows(const Matrix& x, std::span<const Index> rows);
Vector take_rows(const Vector& v, std::span<const Index> rows);

double median(std::vector<double> values);

}  // namespace cate
