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

#ifndef FLSIM_SIMULATION_HPP_
#define FLSIM_SIMULATION_HPP_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flsim/aggregators.hpp"
#include "flsim/analysis.hpp"
#include "flsim/config.hpp"
#include "flsim/data.hpp"
#include "flsim/flanders_filter.hpp"
#include "flsim/mar.hpp"
#include "flsim/model.hpp"

namespace flsim {

struct RoundRecord {
  std::size_t round_id = 0;
  std::vector<ClientId> selected;
  ClientSet malicious;
  // Clients removed by the filter (rounds where it ran; empty otherwise).
  ClientSet flagged;
  // Clients whose models reached the aggregator's input.
  ClientSet kept;
  // Clients the round-1 fallback aggregator left out.
  ClientSet fallback_rejected;
  bool filtered = false;
  double accuracy = 0.0;
  double precision_so_far = 1.0;
  double recall_so_far = 1.0;
  double ms = 0.0;
  std::optional<AnomalyScores> scores;
  // Sampled coordinates of each submitted model, in selected order.
  std::vector<Vector> submitted_sampled;
  // Set when an OPT or AGR-MM search ran this round.
  std::optional<HalvingResult> attack_search;
};

struct ExperimentSummary {
  double best_accuracy = 0.0;
  double final_accuracy = 0.0;
  DetectionPr detection;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t filtered_rounds = 0;
  double runtime_ms = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::size_t> sampled_indices;
  std::vector<RoundRecord> rounds;
  ExperimentSummary summary;
  // Measured even when config.record_timing is off.
  double wall_ms = 0.0;
};

// Round-by-round federated training with optional attack and filter.
class Simulation {
 public:
  explicit Simulation(ExperimentConfig config);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Runs the next round (1-based ids).
  RoundRecord RunRound();
  bool done() const;
  std::size_t next_round() const;

  const ExperimentConfig& config() const;
  const ModelSpec& model_spec() const;
  const Vector& global_model() const;
  const std::vector<std::size_t>& sampled_indices() const;
  const Dataset& train_data() const;
  const Dataset& test_data() const;
  const std::vector<ClientShard>& shards() const;
  const DetectionLedger& ledger() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

ExperimentResult RunExperiment(const ExperimentConfig& config);

// Writes rounds.csv and summary.json (plus scores.csv / trajectories.csv when
// enabled in the config) into `dir`, each through a temporary file renamed on
// success.
void WriteExperimentOutputs(const ExperimentResult& result, const std::filesystem::path& dir);

std::string RoundsCsv(const ExperimentResult& result);
std::string SummaryJson(const ExperimentResult& result);

// Writes `content` to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);

}  // namespace flsim

#endif  // FLSIM_SIMULATION_HPP_
