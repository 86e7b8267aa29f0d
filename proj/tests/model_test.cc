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

#include "flsim/model.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "flsim/data.hpp"
#include "flsim/errors.hpp"
#include "gtest/gtest.h"

namespace flsim {
namespace {

Dataset SmallData(std::size_t n, std::size_t f, std::size_t c, std::uint64_t seed) {
  SyntheticOptions o;
  o.num_examples = n;
  o.num_features = f;
  o.num_classes = c;
  o.seed = seed;
  return MakeSyntheticClassification(o);
}

std::vector<std::size_t> Iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Relative error of the analytic gradient against central differences.
double GradientRelativeError(const ModelSpec& spec, const Vector& params, const Dataset& data) {
  const auto idx = Iota(data.size());
  Vector grad;
  LossAndGradient(spec, params, data, idx, &grad);
  Vector numeric(params.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Vector p = params;
    p[i] += h;
    const double up = LossAndGradient(spec, p, data, idx, nullptr);
    p[i] -= 2 * h;
    const double down = LossAndGradient(spec, p, data, idx, nullptr);
    numeric[i] = (up - down) / (2 * h);
  }
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    diff += (grad[i] - numeric[i]) * (grad[i] - numeric[i]);
    norm += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

TEST(ModelSpecTest, ParamCounts) {
  EXPECT_EQ((ModelSpec{16, 10, 0}).ParamCount(), 170u);
  EXPECT_EQ((ModelSpec{16, 10, 8}).ParamCount(), 16u * 8 + 8 + 8 * 10 + 10);
  EXPECT_EQ((ModelSpec{16, 10, 8}).OutputLayerSize(), 90u);
  EXPECT_THROW((ModelSpec{0, 10, 0}).Validate(), Error);
}

TEST(GradientTest, LinearMatchesFiniteDifferences) {
  const Dataset d = SmallData(40, 5, 4, 1);
  const ModelSpec spec{5, 4, 0};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.5);
  for (int point = 0; point < 10; ++point) {
    Vector p(spec.ParamCount());
    for (double& v : p) v = n(rng);
    EXPECT_LE(GradientRelativeError(spec, p, d), 1e-5) << "point " << point;
  }
}

TEST(GradientTest, HiddenLayerMatchesFiniteDifferences) {
  const Dataset d = SmallData(30, 4, 3, 3);
  const ModelSpec spec{4, 3, 5};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vector p = InitParams(spec, seed);
    EXPECT_LE(GradientRelativeError(spec, p, d), 1e-5) << "seed " << seed;
  }
}

TEST(LocalTrainTest, ZeroLearningRateIsIdentity) {
  const Dataset d = SmallData(20, 3, 2, 4);
  const ModelSpec spec{3, 2, 0};
  Vector p(spec.ParamCount(), 0.3);
  EXPECT_EQ(LocalTrain(spec, p, d, Iota(20), {.epochs = 3, .lr = 0.0, .batch = 4}, 1), p);
}

TEST(LocalTrainTest, SeparableDataIsLearned) {
  Dataset d;
  d.num_features = 2;
  d.num_classes = 2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng), y = u(rng);
    if (std::abs(x + y) < 0.1) continue;
    d.features.push_back(x);
    d.features.push_back(y);
    d.labels.push_back(x + y > 0 ? 1 : 0);
  }
  const ModelSpec spec{2, 2, 0};
  const Vector p = LocalTrain(spec, InitParams(spec, 0), d, Iota(d.size()),
                              {.epochs = 50, .lr = 0.5, .batch = 16}, 9);
  EXPECT_GE(Accuracy(spec, p, d), 0.95);
}

TEST(LocalTrainTest, LossDecreasesAndIsDeterministic) {
  const Dataset d = SmallData(200, 6, 4, 6);
  const ModelSpec spec{6, 4, 0};
  const auto idx = Iota(200);
  const Vector p0 = InitParams(spec, 0);
  const Vector p1 = LocalTrain(spec, p0, d, idx, {.epochs = 5, .lr = 0.1, .batch = 20}, 3);
  EXPECT_LT(LossAndGradient(spec, p1, d, idx, nullptr), LossAndGradient(spec, p0, d, idx, nullptr));
  EXPECT_EQ(LocalTrain(spec, p0, d, idx, {.epochs = 5, .lr = 0.1, .batch = 20}, 3), p1);
}

}  // namespace
}  // namespace flsim
