#pragma once

#include "attrloss/matrix.hpp"

namespace attrloss::kernels {

// Dense kernels behind the batch math. Each output entry is an
// independently computed dot product with a fixed inner summation order,
// so the parallel versions are bitwise identical to the serial references
// below for any worker count.

/// C = A(MxK) * B(KxN), parallel over rows of C.
Matrix matmul(const Matrix& a, const Matrix& b);

/// C = A^T(KxM) * B(MxN) for A stored MxK, parallel over rows of C.
/// This is the weight-gradient pattern: features^T * upstream.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// C = A(MxK) * B^T(KxN) for B stored NxK, parallel over rows of C.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

/// Column sums of A, in row order. Bias-gradient pattern.
std::vector<double> column_sums(const Matrix& a);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
std::vector<double> column_sums(const Matrix& a);

}  // namespace serial

}  // namespace attrloss::kernels
