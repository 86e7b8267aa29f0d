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

#include "flsim/flanders_filter.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <ostream>
#include <string>

#include "flsim/errors.hpp"
#include "flsim/format.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::optional<double> AnomalyScores::Score(ClientId id) const {
  const auto it = entries.find(id);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

std::size_t AnomalyScores::DefinedCount() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const auto& kv) { return kv.second.has_value(); }));
}

std::vector<std::size_t> SampleParamIndices(std::size_t d, std::size_t d_tilde,
                                            std::uint64_t seed) {
  if (d_tilde < 1 || d_tilde > d) {
    throw Error(ErrorCode::kInvalidDimension,
                "need 1 <= d_tilde <= d, got d_tilde=" + std::to_string(d_tilde) +
                    " d=" + std::to_string(d));
  }
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> out;
  out.reserve(d_tilde);
  Rng rng = MakeStream(seed, StreamTag::kParamSample);
  // Selection sampling over a forward range keeps the input order.
  std::sample(all.begin(), all.end(), std::back_inserter(out), d_tilde, rng);
  return out;
}

Vector Gather(std::span<const double> full, std::span<const std::size_t> indices) {
  Vector out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= full.size()) throw Error(ErrorCode::kDimensionMismatch, "index out of range");
    out.push_back(full[i]);
  }
  return out;
}

AnomalyScores ComputeAnomalyScores(const UpdateMatrix& observed, const UpdateMatrix& predicted,
                                   std::span<const double> global_model,
                                   std::span<const ClientId> universe) {
  observed.Validate();
  predicted.Validate();
  if (observed.rows() != predicted.rows() || global_model.size() != observed.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "observed/predicted/global row counts differ");
  }
  AnomalyScores scores;
  scores.round_id = observed.round_id;
  for (ClientId id : universe) scores.entries[id] = std::nullopt;
  for (std::size_t c = 0; c < observed.cols(); ++c) {
    const ClientId id = observed.client_ids[c];
    const Vector theta = observed.values.column(c);
    const auto warm_col = predicted.ColumnOf(id);
    const double s = warm_col ? SquaredDistance(theta, predicted.values.column(*warm_col))
                              : SquaredDistance(global_model, theta);
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite anomaly score for client " + std::to_string(id.value));
    }
    scores.entries[id] = s;
  }
  return scores;
}

ClientSet SelectTopK(const AnomalyScores& scores, std::size_t k) {
  std::vector<std::pair<double, ClientId>> defined;
  for (const auto& [id, s] : scores.entries)
    if (s) defined.emplace_back(*s, id);
  if (k < 1 || k > defined.size()) {
    throw Error(ErrorCode::kInvalidK, "k=" + std::to_string(k) + " with " +
                                          std::to_string(defined.size()) + " defined scores");
  }
  std::sort(defined.begin(), defined.end());
  ClientSet out;
  for (std::size_t i = 0; i < k; ++i) out.insert(defined[i].second);
  return out;
}

UpdateMatrix AmendMatrix(const UpdateMatrix& observed, const ClientSet& flagged,
                         const UpdateMatrix* previous_amended,
                         std::span<const double> global_model) {
  UpdateMatrix out = observed;
  for (ClientId id : flagged) {
    const auto col = observed.ColumnOf(id);
    if (!col) {
      throw Error(ErrorCode::kInvalidArgument,
                  "flagged client " + std::to_string(id.value) + " not in observed matrix");
    }
    std::optional<std::size_t> prev_col;
    if (previous_amended != nullptr) prev_col = previous_amended->ColumnOf(id);
    if (prev_col) {
      out.values.set_column(*col, previous_amended->values.column(*prev_col));
    } else {
      if (global_model.size() != observed.rows()) {
        throw Error(ErrorCode::kDimensionMismatch, "global model length != rows");
      }
      out.values.set_column(*col, global_model);
    }
  }
  return out;
}

FilterResult FilterRound(const HistoryWindow& history, const UpdateMatrix& observed,
                         std::span<const double> global_model, std::size_t k,
                         const MarOptions& mar_options, std::span<const ClientId> universe) {
  if (history.empty()) {
    throw Error(ErrorCode::kDegenerateHistory, "filter called with an empty history");
  }
  const UpdateMatrix& newest = history.newest();
  if (newest.rows() != observed.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "observed rows differ from history rows");
  }
  FilterResult result;
  result.model = history.size() >= 2 ? EstimateMar(history, mar_options)
                                     : MarModel::Identity(newest.rows(), newest.cols());
  result.predicted = Forecast(result.model, newest);
  result.scores = ComputeAnomalyScores(observed, result.predicted, global_model, universe);
  result.kept = SelectTopK(result.scores, k);
  return result;
}

void WriteScoresCsvHeader(std::ostream& out) {
  out << "round_id,client_id,score,flagged,truth\n";
}

void WriteScoresCsvRows(std::ostream& out, const AnomalyScores& scores, const ClientSet& flagged,
                        const ClientSet& truth) {
  for (const auto& [id, s] : scores.entries) {
    out << scores.round_id << ',' << id.value << ',' << (s ? FormatDouble(*s) : "NA") << ','
        << (flagged.contains(id) ? "true" : "false") << ','
        << (truth.contains(id) ? "true" : "false") << '\n';
  }
}

}  // namespace flsim
