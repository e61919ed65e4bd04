#include "cate/common.hpp"

#include <algorithm>

namespace cate {

Matrix take_rows(const Matrix& x, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = x.row(rows[r]);
  return out;
}

Vector take_rows(const Vector& v, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = v(rows[r]);
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace cate
