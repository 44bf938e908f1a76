#include "bmsfed/matrix.hpp"

#include <cmath>
#include <string>

#include "bmsfed/error.hpp"

namespace bmsfed {

namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

}  // namespace

Matrix Matrix::of(std::initializer_list<std::initializer_list<double>> rows_init) {
  Matrix m;
  m.rows = rows_init.size();
  m.cols = m.rows ? rows_init.begin()->size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows_init) {
    if (r.size() != m.cols) {
      throw DimensionError("Matrix::of: ragged rows");
    }
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix Matrix::row(std::size_t r) const {
  Matrix out(1, cols);
  for (std::size_t c = 0; c < cols; ++c) out.data[c] = at(r, c);
  return out;
}

void check_finite(const Matrix& m, const char* context) {
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(context) + ": non-finite entry");
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a) +
                         " x " + shape_str(b));
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      double* orow = &out.data[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  check_finite(out, "matmul");
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  check_finite(out, "add");
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
  check_finite(out, "sub");
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data) v *= s;
  check_finite(out, "scale");
  return out;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  require_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += s * b.data[i];
  check_finite(a, "axpy");
}

Matrix add_rowvec(const Matrix& a, const Matrix& rowvec) {
  if (rowvec.rows != 1 || rowvec.cols != a.cols) {
    throw DimensionError("add_rowvec: expected (1x" + std::to_string(a.cols) +
                         "), got " + shape_str(rowvec));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out.at(i, j) += rowvec.data[j];
  check_finite(out, "add_rowvec");
  return out;
}

Matrix colsum(const Matrix& a) {
  Matrix out(1, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out.data[j] += a.at(i, j);
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw DimensionError("hconcat: row counts disagree, " + shape_str(a) +
                         " vs " + shape_str(b));
  }
  Matrix out(a.rows, a.cols + b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols; ++j) out.at(i, a.cols + j) = b.at(i, j);
  }
  return out;
}

double flatten_l2_distance(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "flatten_l2_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double flatten_l2_norm(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace bmsfed
