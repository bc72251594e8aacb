#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "attrloss/error.hpp"

namespace attrloss {

/// Dense row-major matrix of doubles. Deliberately minimal: every hot loop
/// in this project walks rows or columns explicitly so that summation order
/// is fixed and results are bitwise reproducible.
struct Matrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::int64_t r, std::int64_t c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& operator()(std::int64_t i, std::int64_t j) {
    return data[static_cast<std::size_t>(i * cols + j)];
  }
  double operator()(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * cols + j)];
  }

  std::span<double> row(std::int64_t i) {
    return {data.data() + i * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(std::int64_t i) const {
    return {data.data() + i * cols, static_cast<std::size_t>(cols)};
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  std::int64_t size() const { return rows * cols; }
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span<const double>(m.data)); }

inline void require_shape(const Matrix& m, std::int64_t r, std::int64_t c, const char* what) {
  if (m.rows != r || m.cols != c) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(r) + "x" +
                         std::to_string(c) + ", got " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("euclidean_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// y += alpha * x, elementwise over equal shapes.
inline void add_scaled(Matrix& y, const Matrix& x, double alpha) {
  if (!y.same_shape(x)) throw DimensionError("add_scaled: shape mismatch");
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

inline void add_scaled(std::span<double> y, std::span<const double> x, double alpha) {
  if (y.size() != x.size()) throw DimensionError("add_scaled: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace attrloss
