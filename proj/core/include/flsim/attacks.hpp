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

#ifndef FLSIM_ATTACKS_HPP_
#define FLSIM_ATTACKS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flsim/aggregators.hpp"
#include "flsim/linalg.hpp"
#include "flsim/mar.hpp"
#include "flsim/update_matrix.hpp"

namespace flsim {

// What the (omniscient) attacker sees when crafting a round's malicious models.
struct AttackContext {
  std::vector<ClientUpdate> benign_updates;
  ClientSet malicious_ids;
  Vector global_model;
  std::uint64_t seed = 0;
  std::size_t round_id = 0;

  void Validate() const;
};

// Malicious client id -> model it submits.
using MaliciousModels = std::map<ClientId, Vector>;

// Draws one N(0, sigma^2) scalar from the (seed, round, client) stream.
double GaussNoise(std::uint64_t seed, std::size_t round_id, ClientId client, double sigma);

// Adds one scalar draw to every parameter of each malicious client's honest
// model, or an independent draw per coordinate when `per_coordinate` is set.
MaliciousModels AttackGauss(const AttackContext& ctx, const MaliciousModels& honest_locals,
                            double sigma, bool per_coordinate = false);

// z = Phi^{-1}((n - b - s) / (n - b)), s = floor(n/2) + 1 - b, n = m.
double LieZ(std::size_t num_selected, std::size_t num_malicious);
// Every malicious client sends mu - z * sigma of the benign updates
// (population standard deviation).
MaliciousModels AttackLie(const AttackContext& ctx);

struct HalvingResult {
  double value = 0.0;
  // Number of predicate evaluations.
  int evaluations = 0;
  int halvings = 0;
  bool success = false;
};

// Evaluates accept(init), accept(init/2), ... and stops at the first accepted
// value or once the value falls below tau. On failure `value` holds the first
// value below tau. At most floor(log2(init/tau)) + 1 evaluations happen.
HalvingResult HalvingSearch(double init, double tau, const std::function<bool(double)>& accept);

int HalvingIterationBound(double init, double tau);

struct CraftedAttack {
  MaliciousModels models;
  HalvingResult search;
};

using AggregateFn = std::function<Vector(const AggregationInput&)>;

// Candidate mu + lambda * s with s = -sign(mu). lambda is halved from
// lambda_init until `aggregate` over benign and malicious models lands
// strictly closer to the candidate than to the clean (benign-only) aggregate.
CraftedAttack AttackOpt(const AttackContext& ctx, const AggregateFn& aggregate, double tau = 1e-5,
                        double lambda_init = 10.0);

enum class Perturbation { kUnitVector, kInvStd };

// Unit-norm perturbation direction. kInvStd negates the per-coordinate
// standard deviation, or its element-wise reciprocal when `literal_reciprocal`
// is set (zero-spread coordinates contribute 0).
Vector PerturbationDirection(std::span<const ClientUpdate> benign, Perturbation kind,
                             bool literal_reciprocal = false);

// Min-Max: mu + gamma * p with the largest halved gamma whose maximum distance
// to any benign update does not exceed the largest benign pairwise distance.
CraftedAttack AttackAgrMinMax(const AttackContext& ctx, double tau = 1e-5,
                              double gamma_init = 5.0,
                              Perturbation perturbation = Perturbation::kUnitVector,
                              bool literal_reciprocal = false);

enum class AttackerKnowledge { kOmniscient, kNonOmniscient };

// Coordinates the adaptive attacker forecasts: the server's sampled indices
// when omniscient, otherwise the trailing `d_tilde` coordinates of the model
// (the output layer of a flat parameter vector).
std::vector<std::size_t> AdaptiveIndices(AttackerKnowledge knowledge,
                                         std::span<const std::size_t> server_indices,
                                         std::size_t d, std::size_t d_tilde);

// Fits MAR to `own_history` (oldest first; each matrix is |indices| x b with
// the attacker's clients as columns in a fixed order), forecasts the next
// matrix and writes column j into coordinates `indices` of the j-th malicious
// model of `base_models` (ascending id). Other coordinates are left as given.
MaliciousModels AttackAdaptive(const MaliciousModels& base_models,
                               std::span<const Matrix> own_history,
                               std::span<const std::size_t> indices,
                               const MarOptions& mar_options = {});

enum class AttackKind { kNone, kGauss, kLie, kOpt, kAgrMinMax, kAdaptive };

AttackKind AttackKindFromString(const std::string& name);
std::string AttackKindName(AttackKind kind);
Perturbation PerturbationFromString(const std::string& name);
std::string PerturbationName(Perturbation p);
AttackerKnowledge KnowledgeFromString(const std::string& name);
std::string KnowledgeName(AttackerKnowledge k);

}  // namespace flsim

#endif  // FLSIM_ATTACKS_HPP_
