// Copyright 2026 The flsim Authors.
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

#include "flsim/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

namespace {

void RequireDims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorCode::kInvalidDimension, "matrix dimensions must be >= 1");
  }
}

void RequireSameShape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                    "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  RequireDims(rows, cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  RequireDims(rows, cols);
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::kDimensionMismatch, "entry count != rows*cols");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  RequireDims(rows_, cols_);
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::kDimensionMismatch, "ragged rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::Diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) {
    throw Error(ErrorCode::kDimensionMismatch, "column length != rows");
  }
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::Transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  RequireSameShape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  RequireSameShape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix product inner dimensions differ");
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* src = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix MultiplyAtB(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "A^T B row counts differ");
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* dst = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix MultiplyABt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "A B^T column counts differ");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = Dot(a.row(i), b.row(j));
  }
  return out;
}

double FrobeniusNormSq(const Matrix& m) { return SquaredNorm(m.data()); }

Matrix SolveSpd(const Matrix& g, const Matrix& rhs, double ridge) {
  const std::size_t n = g.rows();
  if (g.cols() != n) throw Error(ErrorCode::kDimensionMismatch, "SolveSpd: G not square");
  if (rhs.rows() != n) throw Error(ErrorCode::kDimensionMismatch, "SolveSpd: RHS rows != n");
  if (!(ridge >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "SolveSpd: ridge < 0");

  Matrix l = g;
  for (std::size_t i = 0; i < n; ++i) l(i, i) += ridge;
  const Matrix system = l;

  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, l(i, i));
  const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;
  if (!(max_diag > 0.0)) throw Error(ErrorCode::kSingularSystem, "zero diagonal");

  // Outer-product Cholesky with symmetric (diagonal) pivoting: P G P^T = L L^T.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (l(i, i) > l(piv, piv)) piv = i;
    if (!(l(piv, piv) > tol)) {
      throw Error(ErrorCode::kSingularSystem,
                  "pivot " + std::to_string(l(piv, piv)) + " below tolerance at step " +
                      std::to_string(k));
    }
    if (piv != k) {
      std::swap(perm[k], perm[piv]);
      for (std::size_t j = 0; j < n; ++j) std::swap(l(k, j), l(piv, j));
      for (std::size_t i = 0; i < n; ++i) std::swap(l(i, k), l(i, piv));
    }
    const double d = std::sqrt(l(k, k));
    l(k, k) = d;
    for (std::size_t i = k + 1; i < n; ++i) l(i, k) /= d;
    // The whole trailing block is kept symmetric because later pivots swap
    // rows and columns of it.
    for (std::size_t j = k + 1; j < n; ++j) {
      const double ljk = l(j, k);
      for (std::size_t i = k + 1; i < n; ++i) l(i, j) -= l(i, k) * ljk;
    }
  }

  Matrix x(n, rhs.cols());
  std::vector<double> y(n);
  for (std::size_t c = 0; c < rhs.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = rhs(perm[i], c);
      for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * y[j];
      y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * y[j];
      y[ii] = s / l(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) x(perm[i], c) = y[i];
  }

  const double residual = std::sqrt(FrobeniusNormSq(system * x - rhs));
  const double bound = 1e-8 * (1.0 + std::sqrt(FrobeniusNormSq(rhs)));
  if (!x.AllFinite() || !(residual <= bound)) {
    throw Error(ErrorCode::kSingularSystem,
                "residual " + std::to_string(residual) + " exceeds " + std::to_string(bound));
  }
  return x;
}

Vector TopRightSingularVector(const Matrix& m, int iters, std::uint64_t seed) {
  if (iters < 1) throw Error(ErrorCode::kInvalidArgument, "iters must be >= 1");
  const std::size_t n = m.cols();
  Rng rng = MakeStream(seed, StreamTag::kPowerIteration);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (double& x : v) x = normal(rng);
  double norm = std::sqrt(SquaredNorm(v));
  if (norm == 0.0) {
    v.assign(n, 0.0);
    v[0] = 1.0;
    norm = 1.0;
  }
  for (double& x : v) x /= norm;

  Vector mv(m.rows());
  Vector w(n);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t r = 0; r < m.rows(); ++r) mv[r] = Dot(m.row(r), v);
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t c = 0; c < n; ++c) w[c] += row[c] * mv[r];
    }
    const double wn = std::sqrt(SquaredNorm(w));
    if (wn == 0.0) break;
    double delta = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double next = w[c] / wn;
      delta = std::max(delta, std::abs(next - v[c]));
      v[c] = next;
    }
    if (delta < 1e-15) break;
  }
  // Renormalise so that ||v|| = 1 holds to rounding.
  const double vn = std::sqrt(SquaredNorm(v));
  for (double& x : v) x /= vn;
  std::size_t arg = 0;
  for (std::size_t c = 1; c < n; ++c)
    if (std::abs(v[c]) > std::abs(v[arg])) arg = c;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
  return v;
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "Dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double SquaredNorm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "SquaredDistance: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

void PutU32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

std::uint32_t GetU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::kTruncatedFile, "matrix dump header truncated");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void WriteMatrix(std::ostream& out, const Matrix& m) {
  out.write("MARM", 4);
  PutU32(out, static_cast<std::uint32_t>(m.rows()));
  PutU32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
  }
}

Matrix ReadMatrix(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw Error(ErrorCode::kTruncatedFile, "matrix dump empty");
  if (std::string(magic, 4) != "MARM") throw Error(ErrorCode::kBadMagic, "expected MARM");
  const std::uint32_t rows = GetU32(in);
  const std::uint32_t cols = GetU32(in);
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (double& v : data) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
      throw Error(ErrorCode::kTruncatedFile, "matrix dump payload truncated");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace flsim
