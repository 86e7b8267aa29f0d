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

#ifndef FLSIM_CONFIG_HPP_
#define FLSIM_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flsim/aggregators.hpp"
#include "flsim/attacks.hpp"

namespace flsim {

enum class TaskKind { kSyntheticLogreg, kMnistSubset };
enum class MaliciousMode { kRedraw, kFixed };
enum class WeightMode { kUniform, kProportional };

struct ExperimentConfig {
  // Federation.
  std::size_t num_clients = 20;        // K
  std::size_t clients_per_round = 20;  // m
  double malicious_ratio = 0.0;        // r
  std::size_t rounds = 20;             // T
  std::optional<std::size_t> kept;     // k; m - b when unset
  std::uint64_t seed = 0;
  MaliciousMode malicious_mode = MaliciousMode::kRedraw;
  WeightMode weights = WeightMode::kUniform;

  // Filter.
  bool filter_enabled = true;
  std::size_t window = 2;  // l
  std::size_t d_tilde = 500;
  int als_iters = 100;
  double als_ridge_a = 0.0;
  double als_ridge_b = 0.0;
  double als_tolerance = 1e-9;
  AggregatorKind fallback = AggregatorKind::kMultiKrum;
  bool fallback_amend = true;

  // Aggregation.
  AggregatorKind aggregator = AggregatorKind::kFedAvg;
  double trim_beta = 0.2;
  // Byzantine count handed to the aggregator; b without the filter and 0
  // behind it when unset.
  std::optional<std::size_t> aggregator_b;
  std::optional<std::size_t> krum_k_select;
  int dnc_niters = 5;
  double dnc_filter_frac = 1.0;
  std::size_t dnc_sub_dim = 500;

  // Attack.
  AttackKind attack = AttackKind::kNone;
  double gauss_sigma = 10.0;
  bool gauss_per_coordinate = false;
  double opt_tau = 1e-5;
  double opt_lambda_init = 10.0;
  double agr_tau = 1e-5;
  double agr_gamma_init = 5.0;
  Perturbation agr_perturbation = Perturbation::kUnitVector;
  bool agr_literal_reciprocal = false;
  AttackerKnowledge adaptive_knowledge = AttackerKnowledge::kOmniscient;
  AttackKind adaptive_base = AttackKind::kNone;

  // Task and local training.
  TaskKind task = TaskKind::kSyntheticLogreg;
  double alpha_d = 0.5;
  std::size_t num_examples = 3000;
  std::size_t num_features = 16;
  std::size_t num_classes = 10;
  double class_separation = 1.0;
  double feature_noise = 1.0;
  double test_fraction = 0.2;
  std::string mnist_images;
  std::string mnist_labels;
  std::size_t mnist_limit = 6000;
  std::size_t hidden = 0;
  int local_epochs = 1;
  double lr = 0.05;
  std::size_t batch = 32;

  // Outputs.
  bool write_scores = false;
  bool write_trajectories = false;
  // Wall-clock timings are nondeterministic; when false the ms columns hold 0.
  bool record_timing = false;

  std::size_t NumMalicious() const;  // ceil(r * m)
  std::size_t KeptCount() const;
  void Validate() const;
};

// Sets one key from its textual value. Throws Error(kConfig) for unknown keys
// or unparsable values.
void SetConfigValue(ExperimentConfig& config, const std::string& key, const std::string& value);

// Applies "key=value".
void ApplyOverride(ExperimentConfig& config, const std::string& assignment);

// Parses the flat text format: one key=value per line, '#' comments, blank
// lines ignored. Later lines win.
ExperimentConfig ParseConfig(const std::string& text, ExperimentConfig base = {});
ExperimentConfig LoadConfigFile(const std::string& path, ExperimentConfig base = {});

// Every key with its current value, in a fixed documented order.
std::vector<std::pair<std::string, std::string>> ConfigEntries(const ExperimentConfig& config);
std::string FormatConfig(const ExperimentConfig& config);
std::vector<std::string> ConfigKeys();

}  // namespace flsim

#endif  // FLSIM_CONFIG_HPP_
