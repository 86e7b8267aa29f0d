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

#ifndef FLSIM_FLANDERS_FILTER_HPP_
#define FLSIM_FLANDERS_FILTER_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "flsim/linalg.hpp"
#include "flsim/mar.hpp"
#include "flsim/update_matrix.hpp"

namespace flsim {

// Per-client anomaly scores of one round. Selected clients map to a finite,
// non-negative score; every other known client maps to nullopt (undefined).
struct AnomalyScores {
  std::size_t round_id = 0;
  std::map<ClientId, std::optional<double>> entries;

  std::optional<double> Score(ClientId id) const;
  std::size_t DefinedCount() const;
};

// d_tilde distinct indices drawn uniformly without replacement from [0, d),
// sorted ascending. Drawn once per experiment and reused for every round.
std::vector<std::size_t> SampleParamIndices(std::size_t d, std::size_t d_tilde,
                                            std::uint64_t seed);

// Gathers `indices` of a full parameter vector.
Vector Gather(std::span<const double> full, std::span<const std::size_t> indices);

// Scores every column of `observed`. A client with a column in `predicted`
// (whose id map is that of round t-1) is warm and scored against its forecast;
// any other selected client is cold and scored against `global_model`. Both
// use the squared L2 distance on the sampled coordinates. `universe` lists
// additional known clients that receive an undefined score.
AnomalyScores ComputeAnomalyScores(const UpdateMatrix& observed, const UpdateMatrix& predicted,
                                   std::span<const double> global_model,
                                   std::span<const ClientId> universe = {});

// The k clients with the smallest defined scores; ties go to the smaller id.
ClientSet SelectTopK(const AnomalyScores& scores, std::size_t k);

// Replaces each flagged column by that client's column in `previous_amended`
// if present there, otherwise by `global_model`. Other columns are untouched.
UpdateMatrix AmendMatrix(const UpdateMatrix& observed, const ClientSet& flagged,
                         const UpdateMatrix* previous_amended,
                         std::span<const double> global_model);

struct FilterResult {
  ClientSet kept;
  AnomalyScores scores;
  MarModel model;
  UpdateMatrix predicted;
};

// One filtering step: fit MAR on the window (identity model when the window
// holds a single matrix), forecast from the newest matrix, score, keep top-k.
// Pushing the amended matrix into the window is left to the caller.
FilterResult FilterRound(const HistoryWindow& history, const UpdateMatrix& observed,
                         std::span<const double> global_model, std::size_t k,
                         const MarOptions& mar_options,
                         std::span<const ClientId> universe = {});

// CSV rows "round_id,client_id,score,flagged,truth"; undefined scores as NA.
void WriteScoresCsvHeader(std::ostream& out);
void WriteScoresCsvRows(std::ostream& out, const AnomalyScores& scores, const ClientSet& flagged,
                        const ClientSet& truth);

}  // namespace flsim

#endif  // FLSIM_FLANDERS_FILTER_HPP_
