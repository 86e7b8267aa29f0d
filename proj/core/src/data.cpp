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

#include "flsim/data.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::vector<std::size_t> Dataset::ClassCounts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_features = num_features;
  out.num_classes = num_classes;
  out.features.reserve(indices.size() * num_features);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto x = example(i);
    out.features.insert(out.features.end(), x.begin(), x.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

void Dataset::Validate() const {
  if (num_features == 0 || num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "dataset needs >= 1 feature and >= 2 classes");
  }
  if (features.size() != labels.size() * num_features) {
    throw Error(ErrorCode::kDimensionMismatch, "feature buffer size != examples x features");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
  }
}

Dataset MakeSyntheticClassification(const SyntheticOptions& options) {
  if (options.num_classes < 2 || options.num_features < 1 || options.num_examples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic task needs >= 2 classes, features, examples");
  }
  Rng rng = MakeStream(options.seed, StreamTag::kDataset);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> means(options.num_classes * options.num_features);
  for (double& v : means) v = options.class_separation * normal(rng);

  Dataset data;
  data.num_features = options.num_features;
  data.num_classes = options.num_classes;
  data.features.reserve(options.num_examples * options.num_features);
  data.labels.reserve(options.num_examples);
  for (std::size_t i = 0; i < options.num_examples; ++i) {
    const std::size_t y = i % options.num_classes;
    for (std::size_t j = 0; j < options.num_features; ++j) {
      data.features.push_back(means[y * options.num_features + j] + options.noise * normal(rng));
    }
    data.labels.push_back(static_cast<int>(y));
  }
  return data;
}

namespace {

std::uint32_t ReadBigEndian32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw Error(ErrorCode::kTruncatedFile, path + ": truncated IDX header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::ifstream OpenBinary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::vector<unsigned char> ReadBytes(std::istream& in, std::size_t n, const std::string& path) {
  std::vector<unsigned char> buf(n);
  if (n > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n))) {
    throw Error(ErrorCode::kTruncatedFile, path + ": payload shorter than header claims");
  }
  return buf;
}

}  // namespace

Dataset LoadIdxSubset(const std::string& images_path, const std::string& labels_path,
                      std::size_t limit, std::uint64_t seed) {
  if (limit == 0) throw Error(ErrorCode::kCountMismatch, "IDX subset limit must be >= 1");
  std::ifstream img = OpenBinary(images_path);
  if (ReadBigEndian32(img, images_path) != 0x00000803u) {
    throw Error(ErrorCode::kBadMagic, images_path + ": not an IDX image file");
  }
  const std::uint32_t n_images = ReadBigEndian32(img, images_path);
  const std::uint32_t rows = ReadBigEndian32(img, images_path);
  const std::uint32_t cols = ReadBigEndian32(img, images_path);

  std::ifstream lab = OpenBinary(labels_path);
  if (ReadBigEndian32(lab, labels_path) != 0x00000801u) {
    throw Error(ErrorCode::kBadMagic, labels_path + ": not an IDX label file");
  }
  const std::uint32_t n_labels = ReadBigEndian32(lab, labels_path);
  if (n_images != n_labels) {
    throw Error(ErrorCode::kCountMismatch, "IDX image and label counts differ");
  }
  if (n_images == 0 || rows == 0 || cols == 0) {
    throw Error(ErrorCode::kCountMismatch, "IDX file holds no examples");
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  const auto raw_pixels = ReadBytes(img, std::size_t{n_images} * pixels, images_path);
  const auto raw_labels = ReadBytes(lab, n_labels, labels_path);

  std::vector<std::size_t> all(n_images);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> keep;
  if (limit >= n_images) {
    keep = all;
  } else {
    Rng rng = MakeStream(seed, StreamTag::kDataset, {1});
    std::sample(all.begin(), all.end(), std::back_inserter(keep), limit, rng);
  }

  Dataset data;
  data.num_features = pixels;
  int max_label = 0;
  for (std::size_t i : keep) max_label = std::max<int>(max_label, raw_labels[i]);
  data.num_classes = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  data.features.reserve(keep.size() * pixels);
  for (std::size_t i : keep) {
    for (std::size_t p = 0; p < pixels; ++p) {
      data.features.push_back(static_cast<double>(raw_pixels[i * pixels + p]) / 255.0);
    }
    data.labels.push_back(raw_labels[i]);
  }
  return data;
}

TrainTestSplit SplitTrainTest(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "test fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeStream(seed, StreamTag::kDataset, {2});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(data.size())));
  if (n_test == 0 || n_test >= data.size()) {
    throw Error(ErrorCode::kTooFewExamples, "split leaves an empty train or test set");
  }
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.Subset(train), data.Subset(test)};
}

namespace {

// Integer counts summing to `total`, proportional to `weights`, by largest
// remainder (ties to the lower index).
std::vector<std::size_t> Apportion(std::span<const double> weights, std::size_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size(), 0);
  std::vector<double> remainder(weights.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = sum > 0.0 ? weights[i] / sum * static_cast<double>(total)
                                   : static_cast<double>(total) / static_cast<double>(weights.size());
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    ++counts[order[i]];
    ++assigned;
  }
  return counts;
}

}  // namespace

std::vector<ClientShard> PartitionDirichlet(const Dataset& data, std::size_t num_clients,
                                            double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Dirichlet alpha must be > 0");
  if (num_clients < 1) throw Error(ErrorCode::kInvalidArgument, "need >= 1 client");
  if (data.num_classes < 2) throw Error(ErrorCode::kInvalidArgument, "need >= 2 classes");
  const std::size_t n = data.size();
  if (n < num_clients) {
    throw Error(ErrorCode::kTooFewExamples,
                "cannot give each of " + std::to_string(num_clients) + " clients an example from " +
                    std::to_string(n));
  }
  Rng rng = MakeStream(seed, StreamTag::kPartition);
  const std::size_t classes = data.num_classes;

  std::vector<std::vector<std::size_t>> pools(classes);
  for (std::size_t i = 0; i < n; ++i) pools[static_cast<std::size_t>(data.labels[i])].push_back(i);
  for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<double> prior(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    prior[c] = static_cast<double>(pools[c].size()) / static_cast<double>(n);
  }

  const std::vector<double> equal(num_clients, 1.0);
  const auto sizes = Apportion(equal, n);

  std::vector<ClientShard> shards(num_clients);
  std::vector<double> q(classes);
  for (std::size_t k = 0; k < num_clients; ++k) {
    shards[k].id = ClientId{static_cast<std::uint32_t>(k)};
    std::size_t need = sizes[k];
    // The first draw uses the global prior. If some class pool runs dry the
    // shortfall is redrawn over the pools that still hold examples, weighted
    // by what they hold.
    std::vector<double> base = prior;
    while (need > 0) {
      for (std::size_t c = 0; c < classes; ++c) {
        q[c] = base[c] > 0.0 ? std::gamma_distribution<double>(alpha * base[c], 1.0)(rng) : 0.0;
      }
      if (std::accumulate(q.begin(), q.end(), 0.0) <= 0.0) {
        // Every gamma draw underflowed; pick one available class by its weight.
        std::discrete_distribution<std::size_t> pick(base.begin(), base.end());
        std::fill(q.begin(), q.end(), 0.0);
        q[pick(rng)] = 1.0;
      }
      const auto quota = Apportion(q, need);
      for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t take = std::min(quota[c], pools[c].size());
        for (std::size_t t = 0; t < take; ++t) {
          shards[k].indices.push_back(pools[c].back());
          pools[c].pop_back();
        }
        need -= take;
      }
      for (std::size_t c = 0; c < classes; ++c) {
        base[c] = static_cast<double>(pools[c].size());
      }
    }
    std::sort(shards[k].indices.begin(), shards[k].indices.end());
  }
  return shards;
}

}  // namespace flsim
