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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::size_t ModelSpec::ParamCount() const {
  if (hidden == 0) return num_classes * num_features + num_classes;
  return hidden * num_features + hidden + OutputLayerSize();
}

std::size_t ModelSpec::OutputLayerSize() const {
  const std::size_t in = hidden == 0 ? num_features : hidden;
  return num_classes * in + num_classes;
}

void ModelSpec::Validate() const {
  if (num_features == 0 || num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "model needs >= 1 feature and >= 2 classes");
  }
}

Vector InitParams(const ModelSpec& spec, std::uint64_t seed) {
  spec.Validate();
  Vector params(spec.ParamCount(), 0.0);
  if (spec.hidden > 0) {
    Rng rng = MakeStream(seed, StreamTag::kModelInit);
    std::normal_distribution<double> w1(0.0, 1.0 / std::sqrt(static_cast<double>(spec.num_features)));
    for (std::size_t i = 0; i < spec.hidden * spec.num_features; ++i) params[i] = w1(rng);
    std::normal_distribution<double> w2(0.0, 1.0 / std::sqrt(static_cast<double>(spec.hidden)));
    const std::size_t off = spec.hidden * spec.num_features + spec.hidden;
    for (std::size_t i = 0; i < spec.num_classes * spec.hidden; ++i) params[off + i] = w2(rng);
  }
  return params;
}

namespace {

// Views into the flat parameter vector.
struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Layout MakeLayout(const ModelSpec& spec) {
  Layout l;
  if (spec.hidden == 0) {
    l.w2 = 0;
    l.b2 = spec.num_classes * spec.num_features;
  } else {
    l.w1 = 0;
    l.b1 = spec.hidden * spec.num_features;
    l.w2 = l.b1 + spec.hidden;
    l.b2 = l.w2 + spec.num_classes * spec.hidden;
  }
  return l;
}

// Forward pass for one example. `hidden_out` receives tanh activations (or a
// copy of x for the linear model); `probs` the softmax output.
void Forward(const ModelSpec& spec, const Layout& l, std::span<const double> p,
             std::span<const double> x, std::vector<double>& hidden_out,
             std::vector<double>& probs) {
  if (spec.hidden == 0) {
    hidden_out.assign(x.begin(), x.end());
  } else {
    hidden_out.assign(spec.hidden, 0.0);
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      double z = p[l.b1 + h];
      const double* w = p.data() + l.w1 + h * spec.num_features;
      for (std::size_t j = 0; j < spec.num_features; ++j) z += w[j] * x[j];
      hidden_out[h] = std::tanh(z);
    }
  }
  const std::size_t in = hidden_out.size();
  probs.assign(spec.num_classes, 0.0);
  double max_logit = -INFINITY;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    double z = p[l.b2 + c];
    const double* w = p.data() + l.w2 + c * in;
    for (std::size_t j = 0; j < in; ++j) z += w[j] * hidden_out[j];
    probs[c] = z;
    max_logit = std::max(max_logit, z);
  }
  double total = 0.0;
  for (double& z : probs) {
    z = std::exp(z - max_logit);
    total += z;
  }
  for (double& z : probs) z /= total;
}

}  // namespace

double LossAndGradient(const ModelSpec& spec, std::span<const double> params, const Dataset& data,
                       std::span<const std::size_t> indices, Vector* grad) {
  spec.Validate();
  if (params.size() != spec.ParamCount()) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector does not match the model");
  }
  if (data.num_features != spec.num_features) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset features do not match the model");
  }
  if (indices.empty()) throw Error(ErrorCode::kInvalidArgument, "loss over an empty batch");
  const Layout l = MakeLayout(spec);
  if (grad) grad->assign(params.size(), 0.0);
  std::vector<double> hidden, probs, delta_hidden;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (std::size_t i : indices) {
    const auto x = data.example(i);
    const auto y = static_cast<std::size_t>(data.labels[i]);
    Forward(spec, l, params, x, hidden, probs);
    loss -= std::log(std::max(probs[y], 1e-300));
    if (!grad) continue;
    Vector& g = *grad;
    const std::size_t in = hidden.size();
    probs[y] -= 1.0;  // dL/dlogits
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      const double dz = probs[c] * scale;
      g[l.b2 + c] += dz;
      double* gw = g.data() + l.w2 + c * in;
      for (std::size_t j = 0; j < in; ++j) gw[j] += dz * hidden[j];
    }
    if (spec.hidden == 0) continue;
    delta_hidden.assign(spec.hidden, 0.0);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      const double* w = params.data() + l.w2 + c * spec.hidden;
      for (std::size_t h = 0; h < spec.hidden; ++h) delta_hidden[h] += probs[c] * w[h];
    }
    for (std::size_t h = 0; h < spec.hidden; ++h) {
      const double dz = delta_hidden[h] * (1.0 - hidden[h] * hidden[h]) * scale;
      g[l.b1 + h] += dz;
      double* gw = g.data() + l.w1 + h * spec.num_features;
      for (std::size_t j = 0; j < spec.num_features; ++j) gw[j] += dz * x[j];
    }
  }
  return loss * scale;
}

Vector LocalTrain(const ModelSpec& spec, std::span<const double> params, const Dataset& data,
                  std::span<const std::size_t> indices, const TrainOptions& options,
                  std::uint64_t seed) {
  if (indices.empty()) throw Error(ErrorCode::kInvalidArgument, "local training on an empty shard");
  if (!(options.lr >= 0.0) || options.batch < 1 || options.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training options");
  }
  Vector w(params.begin(), params.end());
  if (options.lr == 0.0) return w;
  Rng rng = MakeStream(seed, StreamTag::kLocalTrain);
  std::vector<std::size_t> order(indices.begin(), indices.end());
  Vector grad;
  for (int e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += options.batch) {
      const std::size_t end = std::min(order.size(), start + options.batch);
      LossAndGradient(spec, w, data, std::span(order).subspan(start, end - start), &grad);
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= options.lr * grad[j];
    }
  }
  return w;
}

int Predict(const ModelSpec& spec, std::span<const double> params, std::span<const double> x) {
  const Layout l = MakeLayout(spec);
  std::vector<double> hidden, probs;
  Forward(spec, l, params, x, hidden, probs);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double Accuracy(const ModelSpec& spec, std::span<const double> params, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (Predict(spec, params, data.example(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace flsim
