// Copyright 2026 The pcsa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pcsa/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "pcsa/error.hpp"
#include "pcsa/parallel.hpp"

namespace pcsa {

Matrix::Matrix(Index rows, Index cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ArgumentError("Matrix: value count does not match shape");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ArgumentError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(Index n) {
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ArgumentError("matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  const Index inner = a.cols();
  const Index cols = b.cols();
  parallel_for(0, a.rows(), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) {
      double* dst = out.row(i).data();
      const double* src = a.row(i).data();
      for (Index k = 0; k < inner; ++k) {
        const double s = src[k];
        const double* brow = b.row(k).data();
        for (Index j = 0; j < cols; ++j) dst[j] += s * brow[j];
      }
    }
  });
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ArgumentError("matmul_tn: row count mismatch");
  Matrix out(a.cols(), b.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    const auto arow = a.row(r);
    const auto brow = b.row(r);
    for (Index i = 0; i < a.cols(); ++i) {
      const double s = arow[i];
      double* dst = out.row(i).data();
      for (Index j = 0; j < b.cols(); ++j) dst[j] += s * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ArgumentError("matmul_nt: inner dimension mismatch");
  Matrix out(a.rows(), b.rows());
  parallel_for(0, a.rows(), [&](Index lo, Index hi) {
    for (Index i = lo; i < hi; ++i) {
      const auto arow = a.row(i);
      for (Index j = 0; j < b.rows(); ++j) {
        const auto brow = b.row(j);
        double s = 0.0;
        for (Index k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
        out(i, j) = s;
      }
    }
  });
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("add_inplace: shape mismatch");
  auto dst = a.values();
  auto src = b.values();
  for (Index i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Matrix gather_rows(const Matrix& a, std::span<const Index> rows) {
  Matrix out(rows.size(), a.cols());
  for (Index i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw ArgumentError("gather_rows: index out of range");
    std::copy_n(a.row(rows[i]).begin(), a.cols(), out.row(i).begin());
  }
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(const Matrix& a) { return all_finite(a.values()); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ArgumentError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace pcsa
