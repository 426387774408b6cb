#pragma once

// Minimal dense row-major matrix used by the network. The ikj loop order
// vectorizes well and fixes the summation order, which keeps results
// bit-reproducible run to run.

#include <cstddef>
#include <vector>

#include "irisgraph/error.hpp"

namespace irisgraph {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), 0.0) {}

  double operator()(int r, int c) const { return a[std::size_t(r) * cols + c]; }
  double& operator()(int r, int c) { return a[std::size_t(r) * cols + c]; }

  const double* row(int r) const { return a.data() + std::size_t(r) * cols; }
  double* row(int r) { return a.data() + std::size_t(r) * cols; }

  std::size_t size() const { return a.size(); }
  void fill(double v) { std::fill(a.begin(), a.end(), v); }

  bool operator==(const Mat& o) const = default;
};

inline void check_mul(int an, int bm, const char* what) {
  if (an != bm) throw DataError(std::string(what) + ": inner dimensions differ");
}

// C = A * B
inline Mat matmul(const Mat& A, const Mat& B) {
  check_mul(A.cols, B.rows, "matmul");
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    double* ci = C.row(i);
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;  // padded blocks are all zero
      const double* bk = B.row(k);
      for (int j = 0; j < B.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return C;
}

// C += A^T * B  (A: r x m, B: r x n, C: m x n)
inline void add_matmul_tn(Mat& C, const Mat& A, const Mat& B) {
  check_mul(A.rows, B.rows, "matmul_tn");
  for (int k = 0; k < A.rows; ++k) {
    const double* ak = A.row(k);
    const double* bk = B.row(k);
    for (int i = 0; i < A.cols; ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = C.row(i);
      for (int j = 0; j < B.cols; ++j) ci[j] += aki * bk[j];
    }
  }
}

// C = A * B^T  (A: r x m, B: p x m, C: r x p)
inline Mat matmul_nt(const Mat& A, const Mat& B) {
  check_mul(A.cols, B.cols, "matmul_nt");
  Mat C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* ai = A.row(i);
    double* ci = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* bj = B.row(j);
      double dot = 0.0;
      for (int k = 0; k < A.cols; ++k) dot += ai[k] * bj[k];
      ci[j] = dot;
    }
  }
  return C;
}

inline void add_row_broadcast(Mat& M, const std::vector<double>& bias) {
  if (int(bias.size()) != M.cols)
    throw DataError("add_row_broadcast: bias length mismatch");
  for (int i = 0; i < M.rows; ++i) {
    double* mi = M.row(i);
    for (int j = 0; j < M.cols; ++j) mi[j] += bias[j];
  }
}

}  // namespace irisgraph
