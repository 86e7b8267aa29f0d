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

#ifndef FLSIM_LINALG_HPP_
#define FLSIM_LINALG_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace flsim {

// Flat model parameter vector.
using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Dimensions are fixed at construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix Identity(std::size_t n);
  static Matrix Diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix Transposed() const;
  bool AllFinite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale);

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);

// a^T * b without materialising the transpose.
Matrix MultiplyAtB(const Matrix& a, const Matrix& b);
// a * b^T without materialising the transpose.
Matrix MultiplyABt(const Matrix& a, const Matrix& b);

double FrobeniusNormSq(const Matrix& m);

// Solves (g + ridge*I) x = rhs for symmetric positive (semi)definite g with a
// diagonally pivoted Cholesky factorisation. Throws Error(kSingularSystem)
// when a pivot collapses or the residual check
//   ||(g + ridge*I) x - rhs||_F <= 1e-8 * (1 + ||rhs||_F)
// fails. Escalating the ridge is the caller's decision.
Matrix SolveSpd(const Matrix& g, const Matrix& rhs, double ridge);

// Unit vector v maximising ||m v||, by seeded power iteration on m^T m.
// An all-zero m yields the seeded starting vector. The sign is fixed so that
// the largest-magnitude component is positive.
Vector TopRightSingularVector(const Matrix& m, int iters, std::uint64_t seed);

double Dot(std::span<const double> a, std::span<const double> b);
double SquaredNorm(std::span<const double> a);
double SquaredDistance(std::span<const double> a, std::span<const double> b);

// Binary dump: "MARM", u32 rows, u32 cols (little endian), then row-major
// little-endian IEEE-754 doubles.
void WriteMatrix(std::ostream& out, const Matrix& m);
Matrix ReadMatrix(std::istream& in);

}  // namespace flsim

#endif  // FLSIM_LINALG_HPP_
