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

#ifndef FLSIM_DATA_HPP_
#define FLSIM_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flsim/update_matrix.hpp"

namespace flsim {

// Labelled examples with dense features stored row-major.
struct Dataset {
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> example(std::size_t i) const {
    return {features.data() + i * num_features, num_features};
  }
  std::vector<std::size_t> ClassCounts() const;
  Dataset Subset(std::span<const std::size_t> indices) const;
  void Validate() const;
};

struct SyntheticOptions {
  std::size_t num_examples = 3000;
  std::size_t num_features = 16;
  std::size_t num_classes = 10;
  // Standard deviation of the class means around the origin.
  double class_separation = 1.5;
  // Per-feature noise around a class mean.
  double noise = 1.0;
  std::uint64_t seed = 0;
};

// Gaussian class clusters with a uniform class prior.
Dataset MakeSyntheticClassification(const SyntheticOptions& options);

// Reads an IDX image/label pair (big-endian; magic 0x803 for images, 0x801 for
// labels), scales pixels to [0, 1] and keeps `limit` examples drawn uniformly
// without replacement (all of them when limit exceeds the file's count).
Dataset LoadIdxSubset(const std::string& images_path, const std::string& labels_path,
                      std::size_t limit, std::uint64_t seed);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Shuffled split; `test_fraction` of the examples (rounded) go to the test set.
TrainTestSplit SplitTrainTest(const Dataset& data, double test_fraction, std::uint64_t seed);

struct ClientShard {
  ClientId id;
  std::vector<std::size_t> indices;  // into the partitioned dataset
};

// Non-IID split over K clients. Client sizes are as equal as possible; each
// client draws class proportions q ~ Dir(alpha * prior) and takes the integer
// quota closest to q from each class pool. A shortfall left by an exhausted
// class is redrawn over the remaining pools. Every example lands on exactly
// one client.
std::vector<ClientShard> PartitionDirichlet(const Dataset& data, std::size_t num_clients,
                                            double alpha, std::uint64_t seed);

}  // namespace flsim

#endif  // FLSIM_DATA_HPP_
