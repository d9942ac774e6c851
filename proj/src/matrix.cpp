#include "gcrn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gcrn {

namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

constexpr double kProbFloor = 1e-12;

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_str(a) +
                     " x " + shape_str(b));
  }
  Matrix out(a.rows, b.cols);
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* out_row = out.row_ptr(i);
    const double* a_row = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      const double* b_row = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw ShapeError("matmul_at_b: row counts differ: " + shape_str(a) +
                     "^T x " + shape_str(b));
  }
  Matrix out(a.cols, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* a_row = a.row_ptr(i);
    const double* b_row = b.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      double* out_row = out.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw ShapeError("matmul_a_bt: column counts differ: " + shape_str(a) +
                     " x " + shape_str(b) + "^T");
  }
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* a_row = a.row_ptr(i);
    double* out_row = out.row_ptr(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* b_row = b.row_ptr(j);
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) sum += a_row[k] * b_row[k];
      out_row[j] = sum;
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* in_row = logits.row_ptr(i);
    double* out_row = out.row_ptr(i);
    double mx = in_row[0];
    for (std::size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, in_row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols; ++j) {
      out_row[j] = std::exp(in_row[j] - mx);
      sum += out_row[j];
    }
    for (std::size_t j = 0; j < logits.cols; ++j) out_row[j] /= sum;
  }
  return out;
}

CrossEntropyResult cross_entropy(const Matrix& probs,
                                 const std::vector<int>& targets) {
  if (targets.size() != probs.rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(probs.rows) + " rows");
  }
  CrossEntropyResult res;
  res.grad_logits = Matrix(probs.rows, probs.cols);
  const double inv_rows = 1.0 / static_cast<double>(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= probs.cols) {
      throw IndexError("cross_entropy: target " + std::to_string(t) +
                       " out of range [0, " + std::to_string(probs.cols) +
                       ") at row " + std::to_string(i));
    }
    res.loss -= std::log(std::max(probs(i, t), kProbFloor));
    for (std::size_t j = 0; j < probs.cols; ++j) {
      res.grad_logits(i, j) = probs(i, j) * inv_rows;
    }
    res.grad_logits(i, t) -= inv_rows;
  }
  res.loss *= inv_rows;
  return res;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void scale_inplace(Matrix& m, double s) {
  for (double& v : m.data) v *= s;
}

void add_row_vector_inplace(Matrix& m, const std::vector<double>& v) {
  if (v.size() != m.cols) {
    throw ShapeError("add_row_vector: vector length " +
                     std::to_string(v.size()) + " vs " + shape_str(m));
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += v[j];
  }
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data) v = std::max(v, 0.0);
  return out;
}

Matrix relu_backward(const Matrix& grad, const Matrix& preact) {
  if (!grad.same_shape(preact)) {
    throw ShapeError("relu_backward: shape mismatch " + shape_str(grad) +
                     " vs " + shape_str(preact));
  }
  Matrix out(grad.rows, grad.cols);
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    out.data[i] = preact.data[i] > 0.0 ? grad.data[i] : 0.0;
  }
  return out;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols; ++j) sums[j] += row[j];
  }
  return sums;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  double mx = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    mx = std::max(mx, std::abs(a.data[i] - b.data[i]));
  }
  return mx;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows, 0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.row_ptr(i);
    int best = 0;
    for (std::size_t j = 1; j < m.cols; ++j) {
      if (row[j] > row[best]) best = static_cast<int>(j);
    }
    out[i] = best;
  }
  return out;
}

}  // namespace gcrn
