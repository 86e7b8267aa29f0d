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

#ifndef FLSIM_MAR_HPP_
#define FLSIM_MAR_HPP_

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "flsim/linalg.hpp"
#include "flsim/update_matrix.hpp"

namespace flsim {

// MAR(1) coefficients for the forecast  Theta_t ~= A * Theta_{t-1} * B.
struct MarModel {
  Matrix a_coef;  // rows x rows of the history matrices
  Matrix b_coef;  // cols x cols of the history matrices
  double ridge_a = 0.0;
  double ridge_b = 0.0;
  int iters_used = 0;
  // Training loss after each full ALS iteration (only filled on request).
  std::vector<double> loss_trace;

  static MarModel Identity(std::size_t rows, std::size_t cols);
};

// Sliding window of the last `capacity` update matrices, oldest first.
class HistoryWindow {
 public:
  explicit HistoryWindow(std::size_t capacity);

  // Appends a matrix, evicting the oldest one when full. Rejects shape changes
  // and non-consecutive round ids.
  void Push(UpdateMatrix m);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return window_.size(); }
  bool empty() const { return window_.empty(); }
  const UpdateMatrix& newest() const;
  const UpdateMatrix& at(std::size_t i) const { return window_.at(i); }
  std::vector<std::size_t> round_ids() const;
  // Raw values, oldest first.
  std::vector<Matrix> Series() const;
  bool Contains(ClientId id) const;

 private:
  std::size_t capacity_;
  std::deque<UpdateMatrix> window_;
};

struct MarOptions {
  int iters = 100;
  double ridge_a = 0.0;
  double ridge_b = 0.0;
  double tolerance = 1e-9;
  bool record_loss = false;
  // Small problems only (d^2 + m^2 <= 256): Levenberg-Marquardt iterations
  // on (A, B) after each ALS run, and extra ALS runs from seeded random B
  // when the fit from B = I leaves a nonzero residual. The lowest objective
  // wins.
  int refine_iters = 50;
  int restarts = 32;
};

// Alternating least squares on  sum_j ||Y_j - A X_j B||_F^2  over consecutive
// pairs (X_j, Y_j) = (series[j], series[j+1]). Starts from B = I and solves for
// A first. Each block update is the exact minimiser of the ridge-augmented
// objective in that block. A singular Gram matrix escalates that block's
// ridge x10 (seeded at 1e-10 * the primal Gram's mean diagonal when the ridge is 0) up to 1e6
// times its starting value, after which kRidgeExhausted is raised. Small
// problems are then polished and restarted as described in MarOptions.
MarModel EstimateMar(std::span<const Matrix> series, const MarOptions& options = {});
MarModel EstimateMar(const HistoryWindow& history, const MarOptions& options = {});

Matrix Forecast(const MarModel& model, const Matrix& last);
UpdateMatrix Forecast(const MarModel& model, const UpdateMatrix& last);

double MarLoss(const MarModel& model, std::span<const Matrix> series);
double MarLoss(const MarModel& model, const HistoryWindow& history);

void WriteMarModel(std::ostream& out, const MarModel& model);
MarModel ReadMarModel(std::istream& in);

}  // namespace flsim

#endif  // FLSIM_MAR_HPP_
