#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace bmsfed {

/// Dense row-major matrix of doubles. The only numeric container in the
/// simulator; activations are (batch, features), weights are (in, out).
/// Entries must stay finite; operations that could produce NaN/Inf check
/// their results.
struct Matrix {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  /// Build from nested braces: Matrix::of({{1,2},{3,4}}).
  static Matrix of(std::initializer_list<std::initializer_list<double>> rows);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  /// Copy of row r as a 1 x cols matrix.
  Matrix row(std::size_t r) const;

  bool operator==(const Matrix& other) const = default;
};

/// Throws NumericError if any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* context);

/// Standard product; shapes must chain (a.cols == b.rows).
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

/// a += s * b, in place; shapes must match.
void axpy(Matrix& a, double s, const Matrix& b);

/// Adds a 1 x cols row vector to every row of a.
Matrix add_rowvec(const Matrix& a, const Matrix& rowvec);

/// Column sums as a 1 x cols matrix.
Matrix colsum(const Matrix& a);

/// Side-by-side concatenation (same row count).
Matrix hconcat(const Matrix& a, const Matrix& b);

/// Euclidean norm of the element-wise difference of the flattened entries.
double flatten_l2_distance(const Matrix& a, const Matrix& b);

double flatten_l2_norm(const Matrix& a);

}  // namespace bmsfed
