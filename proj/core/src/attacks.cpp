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

#include "flsim/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"
#include "flsim/special_functions.hpp"

namespace flsim {

void AttackContext::Validate() const {
  for (const auto& u : benign_updates) {
    if (malicious_ids.contains(u.id)) {
      throw Error(ErrorCode::kInvalidArgument, "malicious client listed among benign updates");
    }
    if (!global_model.empty() && u.params.size() != global_model.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "benign update dimension != global model");
    }
  }
}

namespace {

struct Moments {
  Vector mean;
  Vector stddev;
};

Moments BenignMoments(std::span<const ClientUpdate> benign) {
  const std::size_t d = benign.front().params.size();
  const double n = static_cast<double>(benign.size());
  Moments mo{Vector(d, 0.0), Vector(d, 0.0)};
  for (const auto& u : benign)
    for (std::size_t j = 0; j < d; ++j) mo.mean[j] += u.params[j];
  for (double& v : mo.mean) v /= n;
  for (const auto& u : benign) {
    for (std::size_t j = 0; j < d; ++j) {
      const double e = u.params[j] - mo.mean[j];
      mo.stddev[j] += e * e;
    }
  }
  for (double& v : mo.stddev) v = std::sqrt(v / n);
  return mo;
}

MaliciousModels Broadcast(const ClientSet& ids, const Vector& v) {
  MaliciousModels out;
  for (ClientId id : ids) out.emplace(id, v);
  return out;
}

Vector Axpy(const Vector& x, double a, const Vector& y) {
  Vector out(x);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += a * y[j];
  return out;
}

}  // namespace

double GaussNoise(std::uint64_t seed, std::size_t round_id, ClientId client, double sigma) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "GAUSS sigma must be >= 0");
  if (sigma == 0.0) return 0.0;
  Rng rng = MakeStream(seed, StreamTag::kAttack, {round_id, client.value});
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

MaliciousModels AttackGauss(const AttackContext& ctx, const MaliciousModels& honest_locals,
                            double sigma, bool per_coordinate) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "GAUSS sigma must be >= 0");
  MaliciousModels out;
  for (ClientId id : ctx.malicious_ids) {
    auto it = honest_locals.find(id);
    if (it == honest_locals.end()) {
      throw Error(ErrorCode::kInvalidArgument, "missing honest model for malicious client");
    }
    Vector v = it->second;
    if (per_coordinate && sigma > 0.0) {
      Rng rng = MakeStream(ctx.seed, StreamTag::kAttack, {ctx.round_id, id.value});
      std::normal_distribution<double> noise(0.0, sigma);
      for (double& x : v) x += noise(rng);
    } else {
      const double eps = GaussNoise(ctx.seed, ctx.round_id, id, sigma);
      for (double& x : v) x += eps;
    }
    out.emplace(id, std::move(v));
  }
  return out;
}

double LieZ(std::size_t num_selected, std::size_t num_malicious) {
  const auto n = static_cast<double>(num_selected);
  const auto b = static_cast<double>(num_malicious);
  if (num_malicious >= num_selected) {
    throw Error(ErrorCode::kDegenerateStatistics, "LIE needs at least one benign client");
  }
  const double s = std::floor(n / 2.0) + 1.0 - b;
  // For b > n/2 the ratio exceeds 1; it is clamped into the open unit interval.
  const double prob = std::clamp((n - b - s) / (n - b), 1e-6, 1.0 - 1e-6);
  return NormalQuantile(prob);
}

MaliciousModels AttackLie(const AttackContext& ctx) {
  ctx.Validate();
  if (ctx.malicious_ids.empty()) return {};
  if (ctx.benign_updates.size() < 2) {
    throw Error(ErrorCode::kDegenerateStatistics, "LIE needs >= 2 benign updates");
  }
  const std::size_t b = ctx.malicious_ids.size();
  const double z = LieZ(ctx.benign_updates.size() + b, b);
  const Moments mo = BenignMoments(ctx.benign_updates);
  return Broadcast(ctx.malicious_ids, Axpy(mo.mean, -z, mo.stddev));
}

HalvingResult HalvingSearch(double init, double tau, const std::function<bool(double)>& accept) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "halving search needs tau > 0");
  HalvingResult r;
  double value = init;
  while (value >= tau) {
    ++r.evaluations;
    if (accept(value)) {
      r.value = value;
      r.success = true;
      return r;
    }
    value *= 0.5;
    ++r.halvings;
  }
  r.value = value;
  return r;
}

int HalvingIterationBound(double init, double tau) {
  if (init < tau) return 1;
  return static_cast<int>(std::ceil(std::log2(init / tau))) + 1;
}

CraftedAttack AttackOpt(const AttackContext& ctx, const AggregateFn& aggregate, double tau,
                        double lambda_init) {
  ctx.Validate();
  if (ctx.benign_updates.empty()) throw Error(ErrorCode::kDegenerateStatistics, "OPT needs benign updates");
  CraftedAttack out;
  if (ctx.malicious_ids.empty()) return out;
  const Moments mo = BenignMoments(ctx.benign_updates);
  Vector direction(mo.mean.size());
  for (std::size_t j = 0; j < direction.size(); ++j) {
    direction[j] = mo.mean[j] > 0.0 ? -1.0 : (mo.mean[j] < 0.0 ? 1.0 : 0.0);
  }
  AggregationInput clean_input{ctx.benign_updates, std::nullopt};
  const Vector clean = aggregate(clean_input);
  auto accept = [&](double lambda) {
    const Vector candidate = Axpy(mo.mean, lambda, direction);
    AggregationInput poisoned_input = clean_input;
    for (ClientId id : ctx.malicious_ids) poisoned_input.columns.push_back({id, candidate});
    const Vector poisoned = aggregate(poisoned_input);
    return SquaredDistance(poisoned, candidate) < SquaredDistance(poisoned, clean);
  };
  out.search = HalvingSearch(lambda_init, tau, accept);
  out.models = Broadcast(ctx.malicious_ids, Axpy(mo.mean, out.search.value, direction));
  return out;
}

Vector PerturbationDirection(std::span<const ClientUpdate> benign, Perturbation kind,
                             bool literal_reciprocal) {
  const Moments mo = BenignMoments(benign);
  Vector p(mo.mean.size(), 0.0);
  if (kind == Perturbation::kUnitVector) {
    p = mo.mean;
  } else {
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double s = mo.stddev[j];
      p[j] = literal_reciprocal ? (s > 0.0 ? 1.0 / s : 0.0) : s;
    }
  }
  const double norm = std::sqrt(SquaredNorm(p));
  if (norm > 0.0) {
    for (double& v : p) v = -v / norm;
  }
  return p;
}

CraftedAttack AttackAgrMinMax(const AttackContext& ctx, double tau, double gamma_init,
                              Perturbation perturbation, bool literal_reciprocal) {
  ctx.Validate();
  CraftedAttack out;
  if (ctx.malicious_ids.empty()) return out;
  const auto& benign = ctx.benign_updates;
  if (benign.size() < 2) throw Error(ErrorCode::kDegenerateStatistics, "AGR-MM needs >= 2 benign updates");
  const Moments mo = BenignMoments(benign);
  const Vector p = PerturbationDirection(benign, perturbation, literal_reciprocal);
  double max_pairwise = 0.0;
  for (std::size_t i = 0; i < benign.size(); ++i)
    for (std::size_t j = i + 1; j < benign.size(); ++j)
      max_pairwise = std::max(max_pairwise, SquaredDistance(benign[i].params, benign[j].params));
  auto accept = [&](double gamma) {
    const Vector candidate = Axpy(mo.mean, gamma, p);
    double worst = 0.0;
    for (const auto& u : benign) worst = std::max(worst, SquaredDistance(candidate, u.params));
    return worst <= max_pairwise;
  };
  out.search = HalvingSearch(gamma_init, tau, accept);
  out.models = Broadcast(ctx.malicious_ids, Axpy(mo.mean, out.search.value, p));
  return out;
}

std::vector<std::size_t> AdaptiveIndices(AttackerKnowledge knowledge,
                                         std::span<const std::size_t> server_indices,
                                         std::size_t d, std::size_t d_tilde) {
  if (knowledge == AttackerKnowledge::kOmniscient) {
    return {server_indices.begin(), server_indices.end()};
  }
  if (d_tilde < 1 || d_tilde > d) {
    throw Error(ErrorCode::kInvalidDimension, "adaptive attacker slice must be in [1, d]");
  }
  std::vector<std::size_t> out(d_tilde);
  std::iota(out.begin(), out.end(), d - d_tilde);
  return out;
}

MaliciousModels AttackAdaptive(const MaliciousModels& base_models,
                               std::span<const Matrix> own_history,
                               std::span<const std::size_t> indices,
                               const MarOptions& mar_options) {
  if (own_history.size() < 2) {
    throw Error(ErrorCode::kDegenerateHistory, "adaptive attack needs >= 2 past rounds");
  }
  const Matrix& last = own_history.back();
  if (last.rows() != indices.size() || last.cols() != base_models.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "attacker history does not match its clients");
  }
  const MarModel model = EstimateMar(own_history, mar_options);
  const Matrix next = Forecast(model, last);
  MaliciousModels out = base_models;
  std::size_t col = 0;
  for (auto& [id, v] : out) {
    for (std::size_t r = 0; r < indices.size(); ++r) {
      if (indices[r] >= v.size()) throw Error(ErrorCode::kInvalidDimension, "index beyond model size");
      v[indices[r]] = next(r, col);
    }
    ++col;
  }
  return out;
}

AttackKind AttackKindFromString(const std::string& name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "gauss") return AttackKind::kGauss;
  if (name == "lie") return AttackKind::kLie;
  if (name == "opt") return AttackKind::kOpt;
  if (name == "agr_mm") return AttackKind::kAgrMinMax;
  if (name == "adaptive") return AttackKind::kAdaptive;
  throw Error(ErrorCode::kConfig, "unknown attack '" + name + "'");
}

std::string AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kGauss: return "gauss";
    case AttackKind::kLie: return "lie";
    case AttackKind::kOpt: return "opt";
    case AttackKind::kAgrMinMax: return "agr_mm";
    case AttackKind::kAdaptive: return "adaptive";
  }
  return "none";
}

Perturbation PerturbationFromString(const std::string& name) {
  if (name == "unit_vector" || name == "uv") return Perturbation::kUnitVector;
  if (name == "inv_std" || name == "std") return Perturbation::kInvStd;
  throw Error(ErrorCode::kConfig, "unknown perturbation '" + name + "'");
}

std::string PerturbationName(Perturbation p) {
  return p == Perturbation::kUnitVector ? "unit_vector" : "inv_std";
}

AttackerKnowledge KnowledgeFromString(const std::string& name) {
  if (name == "omniscient") return AttackerKnowledge::kOmniscient;
  if (name == "non_omniscient") return AttackerKnowledge::kNonOmniscient;
  throw Error(ErrorCode::kConfig, "unknown attacker knowledge '" + name + "'");
}

std::string KnowledgeName(AttackerKnowledge k) {
  return k == AttackerKnowledge::kOmniscient ? "omniscient" : "non_omniscient";
}

}  // namespace flsim
