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

#include <cmath>
#include <random>
#include <sstream>

#include "flsim/errors.hpp"
#include "gtest/gtest.h"
#include "support/oracles.hpp"

namespace flsim {
namespace {

Matrix RandomMatrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

// Stable coefficient: identity plus a small perturbation.
Matrix NearIdentity(std::size_t n, std::mt19937_64& rng, double scale) {
  Matrix m = RandomMatrix(n, n, rng, scale / std::sqrt(static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
  return m;
}

UpdateMatrix Wrap(Matrix values, std::size_t round) {
  UpdateMatrix u;
  u.round_id = round;
  for (std::size_t c = 0; c < values.cols(); ++c)
    u.client_ids.push_back(ClientId{static_cast<std::uint32_t>(c)});
  u.values = std::move(values);
  return u;
}

TEST(HistoryWindowTest, EvictsOldestAndChecksRounds) {
  HistoryWindow h(2);
  h.Push(Wrap(Matrix(2, 2, 1.0), 1));
  h.Push(Wrap(Matrix(2, 2, 2.0), 2));
  h.Push(Wrap(Matrix(2, 2, 3.0), 3));
  EXPECT_EQ(h.size(), 2u);
  EXPECT_EQ(h.round_ids(), (std::vector<std::size_t>{2, 3}));
  EXPECT_THROW(h.Push(Wrap(Matrix(2, 2), 5)), Error);
  EXPECT_THROW(h.Push(Wrap(Matrix(3, 2), 4)), Error);
  EXPECT_THROW(HistoryWindow(1), Error);
}

TEST(EstimateMarTest, NeedsTwoMatrices) {
  std::vector<Matrix> one{Matrix::Identity(2)};
  try {
    EstimateMar(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateHistory);
  }
}

TEST(EstimateMarTest, ConstantHistoryHasZeroLoss) {
  std::mt19937_64 rng(4);
  const Matrix theta = RandomMatrix(4, 4, rng);
  const std::vector<Matrix> series{theta, theta, theta};
  const MarModel m = EstimateMar(series);
  EXPECT_LE(MarLoss(m, series), 1e-12);
}

TEST(EstimateMarTest, RecoversNoiselessSeries) {
  std::mt19937_64 rng(11);
  const std::size_t d = 10, m = 8, l = 8;
  const Matrix a = NearIdentity(d, rng, 0.2);
  const Matrix b = NearIdentity(m, rng, 0.2);
  std::vector<Matrix> series{RandomMatrix(d, m, rng)};
  for (std::size_t t = 1; t <= l; ++t) series.push_back(a * series.back() * b);
  const Matrix truth = series.back();
  series.pop_back();
  const MarModel fit = EstimateMar(series, {.iters = 100});
  const Matrix pred = Forecast(fit, series.back());
  const double rel = std::sqrt(FrobeniusNormSq(pred - truth) / FrobeniusNormSq(truth));
  EXPECT_LE(rel, 1e-6);
  EXPECT_LE(MarLoss(fit, series), 1e-10);
}

// Each block update is an exact minimiser, so the loss never increases.
TEST(EstimateMarTest, LossIsMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<Matrix> series;
    for (int t = 0; t < 4; ++t) series.push_back(RandomMatrix(5, 4, rng));
    const MarModel fit = EstimateMar(series, {.iters = 30, .tolerance = 0.0, .record_loss = true});
    for (std::size_t i = 1; i < fit.loss_trace.size(); ++i) {
      EXPECT_LE(fit.loss_trace[i], fit.loss_trace[i - 1] * (1 + 1e-10) + 1e-12)
          << "seed " << seed << " iter " << i;
    }
  }
}

// Wide history (rows > pairs * cols) takes the dual A-step; it must give the
// same block minimiser as the primal one under a ridge.
TEST(EstimateMarTest, WideHistoryMatchesRidgeClosedForm) {
  std::mt19937_64 rng(21);
  const std::vector<Matrix> series{RandomMatrix(12, 3, rng), RandomMatrix(12, 3, rng)};
  const MarModel fit = EstimateMar(
      series, {.iters = 1, .ridge_a = 0.5, .ridge_b = 0.5, .refine_iters = 0, .restarts = 0});
  // With B = I the first A-step is Y X^T (X X^T + 0.5 I)^-1.
  Matrix g = MultiplyABt(series[0], series[0]);
  for (std::size_t i = 0; i < 12; ++i) g(i, i) += 0.5;
  const Matrix a_ref = SolveSpd(g, MultiplyABt(series[0], series[1]), 0.0).Transposed();
  for (std::size_t i = 0; i < a_ref.data().size(); ++i)
    EXPECT_NEAR(fit.a_coef.data()[i], a_ref.data()[i], 1e-9);
}

TEST(EstimateMarTest, AlsBeatsGradientDescentOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::vector<Matrix> series;
    std::vector<testing::SmallMat> small;
    for (int t = 0; t < 4; ++t) {
      series.push_back(RandomMatrix(3, 3, rng));
      small.push_back({3, series.back().data()});
    }
    const MarModel fit = EstimateMar(series, {.iters = 100});
    const double oracle = testing::GradientDescentMarLoss(small, 10000, 2, seed);
    EXPECT_LE(MarLoss(fit, series), oracle + 1e-6) << "seed " << seed;
  }
}

TEST(EstimateMarTest, Deterministic) {
  std::mt19937_64 rng(5);
  std::vector<Matrix> series;
  for (int t = 0; t < 3; ++t) series.push_back(RandomMatrix(6, 4, rng));
  const MarModel a = EstimateMar(series);
  const MarModel b = EstimateMar(series);
  EXPECT_EQ(a.a_coef, b.a_coef);
  EXPECT_EQ(a.b_coef, b.b_coef);
}

TEST(EstimateMarTest, RejectsNegativeRidge) {
  std::vector<Matrix> series{Matrix::Identity(2), Matrix::Identity(2)};
  EXPECT_THROW(EstimateMar(series, {.ridge_a = -1.0}), Error);
}

TEST(ForecastTest, IdentityAndScaling) {
  const Matrix last{{1, 2}, {3, 4}};
  EXPECT_EQ(Forecast(MarModel::Identity(2, 2), last), last);
  MarModel twice = MarModel::Identity(2, 2);
  twice.a_coef = Matrix{{2, 0}, {0, 2}};
  const Matrix f = Forecast(twice, Matrix(2, 2, 1.0));
  EXPECT_EQ(f, Matrix(2, 2, 2.0));
}

TEST(MarLossTest, IdentityModel) {
  const MarModel id = MarModel::Identity(2, 2);
  const std::vector<Matrix> constant{Matrix(2, 2, 3.0), Matrix(2, 2, 3.0)};
  EXPECT_EQ(MarLoss(id, constant), 0.0);
  const std::vector<Matrix> step{Matrix(2, 2), Matrix(2, 2, 1.0)};
  EXPECT_EQ(MarLoss(id, step), 4.0);
}

TEST(MarModelIoTest, RoundTrip) {
  std::mt19937_64 rng(8);
  MarModel m;
  m.a_coef = RandomMatrix(3, 3, rng);
  m.b_coef = RandomMatrix(2, 2, rng);
  std::stringstream ss;
  WriteMarModel(ss, m);
  const MarModel back = ReadMarModel(ss);
  EXPECT_EQ(back.a_coef, m.a_coef);
  EXPECT_EQ(back.b_coef, m.b_coef);
}

}  // namespace
}  // namespace flsim
