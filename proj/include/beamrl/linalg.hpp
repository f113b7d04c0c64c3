// Minimal dense row-major matrix used by the neural-network engine.
// Sizes in this project are small (hidden widths ~128, minibatch ~64),
// so plain loop kernels are sufficient; the loop orders below keep the
// innermost accesses contiguous for autovectorization.
#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace beamrl {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// C = A * B, A: m x k, B: k x n
inline Matrix gemm_nn(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("gemm_nn: shape mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double av = arow[p];
      const double* brow = b.row(p);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = arow[j];
  }
  return t;
}

// C = A^T * B, A: k x m, B: k x n. The explicit transpose costs O(k*m) and
// keeps the multiply on the fast contiguous kernel.
inline Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw std::invalid_argument("gemm_tn: shape mismatch");
  return gemm_nn(transpose(a), b);
}

// C = A * B^T, A: m x k, B: n x k
inline Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw std::invalid_argument("gemm_nt: shape mismatch");
  return gemm_nn(a, transpose(b));
}

// Stacks A (ra x n) on top of B (rb x n) -> (ra+rb) x n.
inline Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw std::invalid_argument("vstack: column mismatch");
  Matrix c(a.rows + b.rows, a.cols);
  std::copy(a.data.begin(), a.data.end(), c.data.begin());
  std::copy(b.data.begin(), b.data.end(), c.data.begin() + a.data.size());
  return c;
}

// Rows [r0, r1) of a.
inline Matrix row_block(const Matrix& a, std::size_t r0, std::size_t r1) {
  if (r0 > r1 || r1 > a.rows) throw std::invalid_argument("row_block: bad range");
  Matrix c(r1 - r0, a.cols);
  std::copy(a.row(r0), a.row(r0) + (r1 - r0) * a.cols, c.data.begin());
  return c;
}

}  // namespace beamrl
