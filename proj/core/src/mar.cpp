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

#include "flsim/mar.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "flsim/errors.hpp"

namespace flsim {

MarModel MarModel::Identity(std::size_t rows, std::size_t cols) {
  MarModel m;
  m.a_coef = Matrix::Identity(rows);
  m.b_coef = Matrix::Identity(cols);
  return m;
}

HistoryWindow::HistoryWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 2) throw Error(ErrorCode::kInvalidArgument, "history window l must be >= 2");
}

void HistoryWindow::Push(UpdateMatrix m) {
  m.Validate();
  if (!window_.empty()) {
    const UpdateMatrix& last = window_.back();
    if (m.rows() != last.rows() || m.cols() != last.cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "history matrices must share dimensions");
    }
    if (m.round_id != last.round_id + 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "history round ids must be consecutive: got " + std::to_string(m.round_id) +
                      " after " + std::to_string(last.round_id));
    }
  }
  window_.push_back(std::move(m));
  while (window_.size() > capacity_) window_.pop_front();
}

const UpdateMatrix& HistoryWindow::newest() const {
  if (window_.empty()) throw Error(ErrorCode::kDegenerateHistory, "history is empty");
  return window_.back();
}

std::vector<std::size_t> HistoryWindow::round_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& m : window_) ids.push_back(m.round_id);
  return ids;
}

std::vector<Matrix> HistoryWindow::Series() const {
  std::vector<Matrix> out;
  out.reserve(window_.size());
  for (const auto& m : window_) out.push_back(m.values);
  return out;
}

bool HistoryWindow::Contains(ClientId id) const {
  return std::any_of(window_.begin(), window_.end(),
                     [id](const UpdateMatrix& m) { return m.ColumnOf(id).has_value(); });
}

namespace {

constexpr std::uint64_t kRestartSeed = 0x6d61725f616c73ULL;
// Largest d^2 + m^2 for which the joint refinement and the restarts run. Both
// cost a dense (d^2 + m^2)-sided solve per step, which only pays off on small
// problems.
constexpr std::size_t kMaxPolishParams = 256;

double Trace(const Matrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) s += g(i, i);
  return s;
}

// Places the blocks side by side: [m0 m1 ...].
Matrix HorizontalConcat(const std::vector<Matrix>& blocks) {
  std::size_t cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Matrix out(blocks.front().rows(), cols);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < b.rows(); ++r) {
      for (std::size_t c = 0; c < b.cols(); ++c) out(r, offset + c) = b(r, c);
    }
    offset += b.cols();
  }
  return out;
}

// Tracks one block's ridge across the whole estimation so that escalation is
// sticky: once raised, later iterations keep solving the same objective.
class EscalatingSolver {
 public:
  explicit EscalatingSolver(double ridge) : ridge_(ridge), initial_(ridge) {}

  // `primal_dim` is the side of the Gram matrix the ridge is defined on; the
  // seed uses its mean diagonal even when `g` is the smaller dual Gram.
  Matrix Solve(const Matrix& g, const Matrix& rhs, std::size_t primal_dim) {
    for (;;) {
      try {
        return SolveSpd(g, rhs, ridge_);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kSingularSystem) throw;
      }
      if (ridge_ == 0.0) {
        seed_ = 1e-10 * std::max(1.0, Trace(g) / static_cast<double>(primal_dim));
        ridge_ = seed_;
        continue;
      }
      const double base = initial_ > 0.0 ? initial_ : seed_;
      if (ridge_ * 10.0 > base * 1e6 * (1.0 + 1e-12)) {
        throw Error(ErrorCode::kRidgeExhausted,
                    "Gram inversion failed at ridge " + std::to_string(ridge_));
      }
      ridge_ *= 10.0;
    }
  }

  double ridge() const { return ridge_; }

 private:
  double ridge_;
  double initial_;
  double seed_ = 0.0;
};

void CheckSeries(std::span<const Matrix> series) {
  if (series.size() < 2) {
    throw Error(ErrorCode::kDegenerateHistory,
                "need >= 2 matrices, got " + std::to_string(series.size()));
  }
  for (const auto& m : series) {
    if (m.rows() != series[0].rows() || m.cols() != series[0].cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "history matrices must share dimensions");
    }
  }
}

// Levenberg-Marquardt on (A, B) jointly, started from the ALS solution. ALS
// can crawl along flat valleys of the bilinear objective; Gauss-Newton steps
// finish the descent in a few iterations. Returns the final objective.
double Refine(std::span<const Matrix> series, const MarOptions& options, MarModel& model,
              double current) {
  const std::size_t d = series[0].rows();
  const std::size_t m = series[0].cols();
  const std::size_t pairs = series.size() - 1;
  const std::size_t na = d * d;
  const std::size_t np = na + m * m;
  const double ra = model.ridge_a;
  const double rb = model.ridge_b;
  auto objective = [&](const Matrix& a, const Matrix& b) {
    double v = 0.0;
    for (std::size_t j = 0; j < pairs; ++j) v += FrobeniusNormSq(series[j + 1] - a * series[j] * b);
    return v + ra * FrobeniusNormSq(a) + rb * FrobeniusNormSq(b);
  };

  double damping = 1e-3;
  for (int it = 0; it < options.refine_iters; ++it) {
    // Normal equations of the linearised residual E - J dx, with A(p, k) at
    // p * d + k and B(k, q) at na + k * m + q.
    Matrix jtj(np, np);
    Matrix jte(np, 1);
    Matrix grad_a(d, d);
    Matrix grad_b(m, m);
    Matrix gram_a(d, d);
    Matrix gram_b(m, m);
    for (std::size_t j = 0; j < pairs; ++j) {
      const Matrix xb = series[j] * model.b_coef;
      const Matrix ax = model.a_coef * series[j];
      const Matrix e = series[j + 1] - ax * model.b_coef;
      gram_a += MultiplyABt(xb, xb);
      gram_b += MultiplyAtB(ax, ax);
      grad_a += MultiplyABt(e, xb);
      grad_b += MultiplyAtB(ax, e);
      // Cross block: d E(p, q) / d A(p, k) = XB(k, q), d E(p, q) / d B(k', q) = AX(p, k').
      for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t k = 0; k < d; ++k) {
          const std::size_t ia = p * d + k;
          for (std::size_t k2 = 0; k2 < m; ++k2) {
            const double axv = ax(p, k2);
            for (std::size_t q = 0; q < m; ++q) jtj(ia, na + k2 * m + q) += xb(k, q) * axv;
          }
        }
      }
    }
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t k2 = 0; k2 < d; ++k2) jtj(p * d + k, p * d + k2) = gram_a(k, k2);
      }
    }
    for (std::size_t q = 0; q < m; ++q) {
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t k2 = 0; k2 < m; ++k2) jtj(na + k * m + q, na + k2 * m + q) = gram_b(k, k2);
      }
    }
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t c = na; c < np; ++c) jtj(c, i) = jtj(i, c);
      jtj(i, i) += ra;
      jte(i, 0) = grad_a.data()[i] - ra * model.a_coef.data()[i];
    }
    for (std::size_t i = na; i < np; ++i) {
      jtj(i, i) += rb;
      jte(i, 0) = grad_b.data()[i - na] - rb * model.b_coef.data()[i - na];
    }

    bool improved = false;
    double step_norm = 0.0;
    while (damping < 1e12) {
      Matrix dx;
      try {
        dx = SolveSpd(jtj, jte, damping);
      } catch (const Error&) {
        damping *= 10.0;
        continue;
      }
      Matrix a_try = model.a_coef;
      Matrix b_try = model.b_coef;
      for (std::size_t i = 0; i < na; ++i) a_try.data()[i] += dx(i, 0);
      for (std::size_t i = na; i < np; ++i) b_try.data()[i - na] += dx(i, 0);
      const double value = objective(a_try, b_try);
      if (value < current) {
        step_norm = std::sqrt(FrobeniusNormSq(dx));
        model.a_coef = std::move(a_try);
        model.b_coef = std::move(b_try);
        current = value;
        damping = std::max(damping / 10.0, 1e-15);
        improved = true;
        break;
      }
      damping *= 10.0;
    }
    if (!improved || step_norm < options.tolerance) break;
  }
  return current;
}

struct AlsFit {
  MarModel model;
  double objective = 0.0;
};

AlsFit RunAls(std::span<const Matrix> series, const MarOptions& options, Matrix b_init) {
  const std::size_t rows = series[0].rows();
  const std::size_t cols = series[0].cols();
  const std::size_t pairs = series.size() - 1;

  MarModel model;
  model.b_coef = std::move(b_init);
  model.a_coef = Matrix(rows, rows);
  EscalatingSolver solve_a(options.ridge_a);
  EscalatingSolver solve_b(options.ridge_b);
  auto objective = [&](const Matrix& a, const Matrix& b) {
    double v = 0.0;
    for (std::size_t j = 0; j < pairs; ++j) v += FrobeniusNormSq(series[j + 1] - a * series[j] * b);
    return v + solve_a.ridge() * FrobeniusNormSq(a) + solve_b.ridge() * FrobeniusNormSq(b);
  };
  double current = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= options.iters; ++it) {
    // A-step:  A = (sum Y W^T)(sum W W^T + ra I)^-1  with W = X B. When the
    // stacked W has fewer columns than rows the same matrix is computed as
    // Y_s (W_s^T W_s + ra I)^-1 W_s^T, which only inverts the small Gram.
    Matrix a_next;
    if (rows > pairs * cols) {
      std::vector<Matrix> ws;
      ws.reserve(pairs);
      for (std::size_t j = 0; j < pairs; ++j) ws.push_back(series[j] * model.b_coef);
      const Matrix w_all = HorizontalConcat(ws);
      const Matrix y_all = HorizontalConcat(
          std::vector<Matrix>(series.begin() + 1, series.end()));
      a_next = y_all * solve_a.Solve(MultiplyAtB(w_all, w_all), w_all.Transposed(), rows);
    } else {
      Matrix gram_a(rows, rows);
      Matrix cross_a(rows, rows);
      for (std::size_t j = 0; j < pairs; ++j) {
        const Matrix w = series[j] * model.b_coef;
        gram_a += MultiplyABt(w, w);
        cross_a += MultiplyABt(w, series[j + 1]);
      }
      a_next = solve_a.Solve(gram_a, cross_a, rows).Transposed();
    }

    // B-step:  B = (sum Z^T Z + rb I)^-1 (sum Z^T Y)  with Z = A X.
    Matrix gram_b(cols, cols);
    Matrix cross_b(cols, cols);
    for (std::size_t j = 0; j < pairs; ++j) {
      const Matrix z = a_next * series[j];
      gram_b += MultiplyAtB(z, z);
      cross_b += MultiplyAtB(z, series[j + 1]);
    }
    Matrix b_next = solve_b.Solve(gram_b, cross_b, cols);

    const double move_a = std::sqrt(FrobeniusNormSq(a_next - model.a_coef));
    const double move_b = std::sqrt(FrobeniusNormSq(b_next - model.b_coef));
    model.a_coef = std::move(a_next);
    model.b_coef = std::move(b_next);
    model.iters_used = it;
    current = objective(model.a_coef, model.b_coef);
    if (options.record_loss) model.loss_trace.push_back(MarLoss(model, series));
    if (it > 1 && move_a < options.tolerance && move_b < options.tolerance) break;
  }
  model.ridge_a = solve_a.ridge();
  model.ridge_b = solve_b.ridge();
  if (options.refine_iters > 0 && rows * rows + cols * cols <= kMaxPolishParams) {
    current = Refine(series, options, model, current);
  }
  if (!model.a_coef.AllFinite() || !model.b_coef.AllFinite()) {
    throw Error(ErrorCode::kRidgeExhausted, "non-finite MAR coefficients");
  }
  return {std::move(model), current};
}

}  // namespace

MarModel EstimateMar(std::span<const Matrix> series, const MarOptions& options) {
  CheckSeries(series);
  if (options.iters < 1) throw Error(ErrorCode::kInvalidArgument, "iters must be >= 1");
  if (options.ridge_a < 0.0 || options.ridge_b < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "ridge must be >= 0");
  }
  if (options.restarts < 0) throw Error(ErrorCode::kInvalidArgument, "restarts must be >= 0");
  const std::size_t rows = series[0].rows();
  const std::size_t cols = series[0].cols();
  AlsFit best = RunAls(series, options, Matrix::Identity(cols));
  if (rows * rows + cols * cols > kMaxPolishParams) return std::move(best.model);

  // A zero-residual fit is a global minimum. Otherwise the bilinear objective
  // may have settled in a poor basin, so ALS is rerun from seeded random B
  // (its scale is irrelevant) and the lowest objective is kept.
  double energy = 0.0;
  for (std::size_t j = 1; j < series.size(); ++j) energy += FrobeniusNormSq(series[j]);
  if (best.objective <= 1e-20 * energy) return std::move(best.model);
  std::mt19937_64 rng(kRestartSeed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < options.restarts; ++r) {
    Matrix b(cols, cols);
    for (double& v : b.data()) v = normal(rng);
    AlsFit fit = RunAls(series, options, std::move(b));
    if (fit.objective < best.objective) best = std::move(fit);
  }
  return std::move(best.model);
}

MarModel EstimateMar(const HistoryWindow& history, const MarOptions& options) {
  const auto series = history.Series();
  return EstimateMar(std::span<const Matrix>(series), options);
}

Matrix Forecast(const MarModel& model, const Matrix& last) {
  if (model.a_coef.cols() != last.rows() || last.cols() != model.b_coef.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "model and matrix dimensions disagree");
  }
  return model.a_coef * last * model.b_coef;
}

UpdateMatrix Forecast(const MarModel& model, const UpdateMatrix& last) {
  UpdateMatrix out;
  out.values = Forecast(model, last.values);
  out.client_ids = last.client_ids;
  out.round_id = last.round_id + 1;
  return out;
}

double MarLoss(const MarModel& model, std::span<const Matrix> series) {
  CheckSeries(series);
  double loss = 0.0;
  for (std::size_t j = 0; j + 1 < series.size(); ++j) {
    loss += FrobeniusNormSq(series[j + 1] - Forecast(model, series[j]));
  }
  return loss;
}

double MarLoss(const MarModel& model, const HistoryWindow& history) {
  const auto series = history.Series();
  return MarLoss(model, std::span<const Matrix>(series));
}

void WriteMarModel(std::ostream& out, const MarModel& model) {
  WriteMatrix(out, model.a_coef);
  WriteMatrix(out, model.b_coef);
}

MarModel ReadMarModel(std::istream& in) {
  MarModel m;
  m.a_coef = ReadMatrix(in);
  m.b_coef = ReadMatrix(in);
  if (m.a_coef.rows() != m.a_coef.cols() || m.b_coef.rows() != m.b_coef.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "MAR coefficients must be square");
  }
  return m;
}

}  // namespace flsim
