#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spic/common.hpp"

namespace spic {

/// Square sparse matrix in compressed row form. Column indices are sorted
/// within each row and unique.
struct CsrMatrix {
  std::int64_t n = 0;
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int32_t> cols;
  std::vector<double> values;

  static CsrMatrix identity(std::int64_t n);

  std::size_t nnz() const { return cols.size(); }
  std::int64_t row_begin(std::int64_t i) const { return offsets[i]; }
  std::int64_t row_end(std::int64_t i) const { return offsets[i + 1]; }

  /// Returns the stored value or 0 when (i, j) is outside the pattern.
  double coeff(std::int64_t i, std::int64_t j) const;
  bool contains(std::int64_t i, std::int64_t j) const;

  CsrMatrix transpose() const;
  Eigen::MatrixXd to_dense() const;

  bool same_pattern(const CsrMatrix& other) const;
  /// True when every stored (i, j) of this matrix is also stored in `super`.
  bool pattern_within(const CsrMatrix& super) const;
  /// max |A_ij - A_ji| over the union of both patterns.
  double asymmetry() const;

  /// out = shift * x + A x. Rows are independent, so the result is
  /// bitwise identical for any thread count.
  void multiply(const Matrix& x, Matrix& out, double shift = 0.0) const;
};

}  // namespace spic
