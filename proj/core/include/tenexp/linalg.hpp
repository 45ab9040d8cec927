#pragma once

#include "tenexp/tensor.hpp"

namespace tenexp {

struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;
};

// Thin SVD. Each left singular vector is oriented so that its first entry of
// magnitude above 1e-10 is positive.
SvdResult svd(const Matrix& m);

// Singular values only, non-increasing.
Vector singular_values(const Matrix& m);

// Count of singular values above max(rows, cols) * eps * sigma_1.
std::size_t numerical_rank(const Vector& s, std::size_t rows, std::size_t cols);

}  // namespace tenexp
