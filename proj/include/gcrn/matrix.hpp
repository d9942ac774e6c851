#pragma once

#include <cstddef>
#include <vector>

#include "gcrn/errors.hpp"

namespace gcrn {

/// Dense row-major matrix of doubles. The scenes handled here have at most
/// a few dozen nodes, so there is no sparse path.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }
  double* row_ptr(std::size_t i) { return data.data() + i * cols; }
};

/// Standard matrix product; throws ShapeError naming both shapes when the
/// inner dimensions differ.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a^T * b without materializing the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// a * b^T without materializing the transpose.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Row-wise softmax with per-row max subtraction; each output row is
/// nonnegative and sums to 1 for any finite input.
Matrix softmax_rows(const Matrix& logits);

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix grad_logits;  // (probs - onehot(targets)) / rows
};

/// Mean negative log-likelihood of the target class per row, with the
/// probability floored at 1e-12 inside the log. Also returns the gradient
/// of the loss with respect to the logits that produced `probs`.
CrossEntropyResult cross_entropy(const Matrix& probs,
                                 const std::vector<int>& targets);

void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& m, double s);
void add_row_vector_inplace(Matrix& m, const std::vector<double>& v);
Matrix relu(const Matrix& m);

/// grad masked by the ReLU derivative at the pre-activation: out(i,j) =
/// grad(i,j) when preact(i,j) > 0, else 0.
Matrix relu_backward(const Matrix& grad, const Matrix& preact);

std::vector<double> column_sums(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace gcrn
