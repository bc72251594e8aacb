#include "attrloss/kernels.hpp"

#include "attrloss/parallel.hpp"

namespace attrloss::kernels {

namespace {

void check_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimensionError("matmul: inner dimensions differ");
}

void check_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw DimensionError("matmul_at_b: row counts differ");
}

void check_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw DimensionError("matmul_a_bt: column counts differ");
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::int64_t i) {
  const double* arow = a.data.data() + i * a.cols;
  double* crow = c.data.data() + i * c.cols;
  for (std::int64_t k = 0; k < a.cols; ++k) {
    const double aik = arow[k];
    const double* brow = b.data.data() + k * b.cols;
    for (std::int64_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
  }
}

inline void at_b_row(const Matrix& a, const Matrix& b, Matrix& c, std::int64_t k) {
  double* crow = c.data.data() + k * c.cols;
  for (std::int64_t m = 0; m < a.rows; ++m) {
    const double amk = a(m, k);
    const double* brow = b.data.data() + m * b.cols;
    for (std::int64_t j = 0; j < b.cols; ++j) crow[j] += amk * brow[j];
  }
}

inline void a_bt_row(const Matrix& a, const Matrix& b, Matrix& c, std::int64_t i) {
  const double* arow = a.data.data() + i * a.cols;
  double* crow = c.data.data() + i * c.cols;
  for (std::int64_t j = 0; j < b.rows; ++j) {
    const double* brow = b.data.data() + j * b.cols;
    double s = 0.0;
    for (std::int64_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
    crow[j] = s;
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_matmul(a, b);
  Matrix c(a.rows, b.cols);
  parallel_for(a.rows, [&](std::int64_t i) { matmul_row(a, b, c, i); });
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  check_at_b(a, b);
  Matrix c(a.cols, b.cols);
  parallel_for(a.cols, [&](std::int64_t k) { at_b_row(a, b, c, k); });
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  check_a_bt(a, b);
  Matrix c(a.rows, b.rows);
  parallel_for(a.rows, [&](std::int64_t i) { a_bt_row(a, b, c, i); });
  return c;
}

std::vector<double> column_sums(const Matrix& a) {
  std::vector<double> s(static_cast<std::size_t>(a.cols), 0.0);
  parallel_for(a.cols, [&](std::int64_t j) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.rows; ++i) acc += a(i, j);
    s[static_cast<std::size_t>(j)] = acc;
  });
  return s;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_matmul(a, b);
  Matrix c(a.rows, b.cols);
  for (std::int64_t i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  check_at_b(a, b);
  Matrix c(a.cols, b.cols);
  for (std::int64_t k = 0; k < a.cols; ++k) at_b_row(a, b, c, k);
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  check_a_bt(a, b);
  Matrix c(a.rows, b.rows);
  for (std::int64_t i = 0; i < a.rows; ++i) a_bt_row(a, b, c, i);
  return c;
}

std::vector<double> column_sums(const Matrix& a) {
  std::vector<double> s(static_cast<std::size_t>(a.cols), 0.0);
  for (std::int64_t j = 0; j < a.cols; ++j) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.rows; ++i) acc += a(i, j);
    s[static_cast<std::size_t>(j)] = acc;
  }
  return s;
}

}  // namespace serial

}  // namespace attrloss::kernels
