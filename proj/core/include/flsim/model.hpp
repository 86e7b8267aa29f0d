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

#ifndef FLSIM_MODEL_HPP_
#define FLSIM_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

#include "flsim/data.hpp"
#include "flsim/linalg.hpp"

namespace flsim {

// Multinomial logistic regression, optionally with one tanh hidden layer.
// Flat parameter layout (all row-major):
//   hidden == 0: W[classes x features], b[classes]
//   hidden  > 0: W1[hidden x features], b1[hidden], W2[classes x hidden], b2[classes]
// The output layer is always the trailing block of the vector.
struct ModelSpec {
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::size_t hidden = 0;

  std::size_t ParamCount() const;
  std::size_t OutputLayerSize() const;
  void Validate() const;
};

// Zeros for the linear model; scaled Gaussian weights for the hidden layer.
Vector InitParams(const ModelSpec& spec, std::uint64_t seed);

// Mean cross-entropy over `indices` of `data`. Writes the gradient into
// `grad` (resized to ParamCount) when non-null.
double LossAndGradient(const ModelSpec& spec, std::span<const double> params, const Dataset& data,
                       std::span<const std::size_t> indices, Vector* grad);

struct TrainOptions {
  int epochs = 1;
  double lr = 0.1;
  std::size_t batch = 32;
};

// Mini-batch SGD over `indices` for `options.epochs` passes, reshuffling each
// pass with a stream derived from `seed`.
Vector LocalTrain(const ModelSpec& spec, std::span<const double> params, const Dataset& data,
                  std::span<const std::size_t> indices, const TrainOptions& options,
                  std::uint64_t seed);

int Predict(const ModelSpec& spec, std::span<const double> params, std::span<const double> x);
double Accuracy(const ModelSpec& spec, std::span<const double> params, const Dataset& data);

}  // namespace flsim

#endif  // FLSIM_MODEL_HPP_
