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

#ifndef FLSIM_AGGREGATORS_HPP_
#define FLSIM_AGGREGATORS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flsim/linalg.hpp"
#include "flsim/update_matrix.hpp"

namespace flsim {

struct ClientUpdate {
  ClientId id;
  Vector params;
};

// Input of an aggregation function phi. Every aggregator first orders the
// columns by client id, which makes the result independent of input order.
struct AggregationInput {
  std::vector<ClientUpdate> columns;
  // Optional per-client weights p_c (non-negative, summing to 1). Only FedAvg
  // and the averaging step of Multi-Krum/DnC use them.
  std::optional<std::vector<double>> weights;

  std::size_t size() const { return columns.size(); }
  std::size_t dim() const { return columns.empty() ? 0 : columns.front().params.size(); }
  void Validate() const;
  AggregationInput Canonical() const;
  AggregationInput Subset(const ClientSet& ids) const;
};

Vector FedAvg(const AggregationInput& input);
Vector FedMedian(const AggregationInput& input);
// Drops floor(beta*m) largest and smallest values per coordinate.
Vector TrimmedMean(const AggregationInput& input, double beta);

// Krum score of each column (canonical order): sum of squared distances to its
// m - num_malicious - 2 nearest other columns.
std::vector<double> KrumScores(const AggregationInput& input, std::size_t num_malicious);
// Ids of the k_select lowest Krum scores, ordered by (score, id).
std::vector<ClientId> KrumSelect(const AggregationInput& input, std::size_t num_malicious,
                                 std::size_t k_select);
Vector MultiKrum(const AggregationInput& input, std::size_t num_malicious, std::size_t k_select);

struct SelectionResult {
  Vector model;
  ClientSet kept;
};

SelectionResult MultiKrumWithSelection(const AggregationInput& input, std::size_t num_malicious,
                                       std::size_t k_select);
// alpha = m - 2b rounds of Krum, then the beta = alpha - 2b values closest to
// each coordinate's median are averaged. Needs m >= 4b + 3.
SelectionResult BulyanWithSelection(const AggregationInput& input, std::size_t num_malicious);
Vector Bulyan(const AggregationInput& input, std::size_t num_malicious);

struct DncOptions {
  int niters = 5;
  double filter_frac = 1.0;
  std::size_t sub_dim = 500;
  std::size_t num_malicious = 0;
  std::uint64_t seed = 0;
  int power_iters = 50;
};

SelectionResult DncWithSelection(const AggregationInput& input, const DncOptions& options);
Vector Dnc(const AggregationInput& input, const DncOptions& options);

enum class AggregatorKind { kFedAvg, kFedMedian, kTrimmedMean, kMultiKrum, kBulyan, kDnc };

AggregatorKind AggregatorKindFromString(const std::string& name);
std::string AggregatorKindName(AggregatorKind kind);

struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::kFedAvg;
  double trim_beta = 0.2;
  std::size_t num_malicious = 0;
  // Multi-Krum models to average; defaults to m - num_malicious.
  std::optional<std::size_t> k_select;
  DncOptions dnc;
};

// Dispatches on spec.kind. `kept` lists the clients that contributed to the
// result (everyone for the coordinate-wise rules).
SelectionResult Aggregate(const AggregatorSpec& spec, const AggregationInput& input);

}  // namespace flsim

#endif  // FLSIM_AGGREGATORS_HPP_
