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

#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "flsim/errors.hpp"
#include "gtest/gtest.h"

namespace flsim {
namespace {

ClientId C(std::uint32_t v) { return ClientId{v}; }

AttackContext Context(const std::vector<Vector>& benign, ClientSet malicious) {
  AttackContext ctx;
  for (std::size_t i = 0; i < benign.size(); ++i)
    ctx.benign_updates.push_back({C(static_cast<std::uint32_t>(i)), benign[i]});
  ctx.malicious_ids = std::move(malicious);
  ctx.global_model.assign(benign.front().size(), 0.0);
  ctx.seed = 17;
  ctx.round_id = 3;
  return ctx;
}

TEST(GaussTest, ZeroSigmaIsIdentity) {
  const AttackContext ctx = Context({{0, 0, 0}}, {C(5)});
  const MaliciousModels honest{{C(5), {1, 2, 3}}};
  EXPECT_EQ(AttackGauss(ctx, honest, 0.0).at(C(5)), (Vector{1, 2, 3}));
}

TEST(GaussTest, AddsOneReplayableScalar) {
  const AttackContext ctx = Context({{0, 0, 0}}, {C(5), C(6)});
  const MaliciousModels honest{{C(5), {1, 1, 1}}, {C(6), {1, 1, 1}}};
  const MaliciousModels out = AttackGauss(ctx, honest, 10.0);
  const double eps5 = GaussNoise(ctx.seed, ctx.round_id, C(5), 10.0);
  const double eps6 = GaussNoise(ctx.seed, ctx.round_id, C(6), 10.0);
  EXPECT_EQ(out.at(C(5)), (Vector{1 + eps5, 1 + eps5, 1 + eps5}));
  EXPECT_NE(eps5, eps6);
  EXPECT_EQ(AttackGauss(ctx, honest, 10.0), out);
}

TEST(GaussTest, DrawsLookNormal) {
  double sum = 0.0, sq = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const double e = GaussNoise(1, static_cast<std::size_t>(i), C(2), 10.0);
    sum += e;
    sq += e * e;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.5);
  EXPECT_NEAR(std::sqrt(sq / n), 10.0, 0.5);
}

TEST(LieTest, ZValues) {
  EXPECT_NEAR(LieZ(10, 2), 0.0, 1e-12);
  const double oracle = boost::math::quantile(boost::math::normal(), 9.0 / 16.0);
  EXPECT_NEAR(LieZ(20, 4), oracle, 1e-12);
}

TEST(LieTest, IdenticalBenignGivesBenignValue) {
  const AttackContext ctx = Context({{2, 3}, {2, 3}, {2, 3}}, {C(9)});
  EXPECT_EQ(AttackLie(ctx).at(C(9)), (Vector{2, 3}));
}

TEST(LieTest, ClosedFormScalar) {
  std::vector<Vector> benign;
  for (int i = 0; i < 16; ++i) benign.push_back({i % 2 ? 1.5 : 0.5});
  const AttackContext ctx = Context(benign, {C(20), C(21), C(22), C(23)});
  const double z = boost::math::quantile(boost::math::normal(), 9.0 / 16.0);
  const MaliciousModels out = AttackLie(ctx);
  ASSERT_EQ(out.size(), 4u);
  for (const auto& [id, v] : out) EXPECT_NEAR(v[0], 1.0 - 0.5 * z, 1e-12);
}

TEST(HalvingSearchTest, CountsEvaluations) {
  const HalvingResult r = HalvingSearch(10.0, 1e-5, [](double v) { return v <= 2.5; });
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.value, 2.5);
  EXPECT_EQ(r.halvings, 2);
  EXPECT_EQ(r.evaluations, 3);
}

TEST(HalvingSearchTest, NeverAcceptsStaysWithinBound) {
  const HalvingResult r = HalvingSearch(10.0, 1e-5, [](double) { return false; });
  EXPECT_FALSE(r.success);
  EXPECT_LT(r.value, 1e-5);
  EXPECT_LE(r.evaluations, HalvingIterationBound(10.0, 1e-5));
}

TEST(HalvingSearchTest, InitBelowTau) {
  const HalvingResult r = HalvingSearch(1e-6, 1e-5, [](double) { return true; });
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.value, 1e-6);
  EXPECT_EQ(r.evaluations, 0);
}

TEST(OptTest, DirectionAndSearch) {
  // Three malicious against two benign: the poisoned mean sits 2/5 of the way
  // from the candidate to the clean mean, so the first lambda is accepted.
  const AttackContext ctx = Context({{2, -3}, {2.2, -2.8}}, {C(7), C(8), C(9)});
  auto fedavg = [](const AggregationInput& in) { return FedAvg(in); };
  const CraftedAttack a = AttackOpt(ctx, fedavg, 1e-5, 10.0);
  ASSERT_TRUE(a.search.success);
  EXPECT_EQ(a.search.value, 10.0);
  EXPECT_EQ(a.search.evaluations, 1);
  const Vector& v = a.models.at(C(7));
  const double mu0 = (2 + 2.2) / 2.0, mu1 = (-3 - 2.8) / 2.0;
  EXPECT_NEAR(v[0], mu0 - 10.0, 1e-12);
  EXPECT_NEAR(v[1], mu1 + 10.0, 1e-12);
  EXPECT_EQ(a.models.at(C(8)), v);
  EXPECT_EQ(a.models.at(C(9)), v);
}

TEST(OptTest, OutvotedCandidateIsNeverAccepted) {
  // Two malicious against three benign under FedAvg: the poisoned mean stays
  // closer to the clean mean for every lambda.
  const AttackContext ctx = Context({{2, -3}, {2, -3}, {2.2, -2.8}}, {C(7), C(8)});
  auto fedavg = [](const AggregationInput& in) { return FedAvg(in); };
  const CraftedAttack a = AttackOpt(ctx, fedavg, 1e-5, 10.0);
  EXPECT_FALSE(a.search.success);
  EXPECT_LT(a.search.value, 1e-5);
  EXPECT_LE(a.search.evaluations, HalvingIterationBound(10.0, 1e-5));
}

TEST(OptTest, LambdaBelowTauRecordsFailure) {
  const AttackContext ctx = Context({{1}, {2}}, {C(4)});
  auto fedavg = [](const AggregationInput& in) { return FedAvg(in); };
  const CraftedAttack a = AttackOpt(ctx, fedavg, 1e-5, 1e-6);
  EXPECT_FALSE(a.search.success);
  EXPECT_NEAR(a.models.at(C(4))[0], 1.5 - 1e-6, 1e-15);
}

TEST(AgrMinMaxTest, HandInequality) {
  // Benign {0, 2}: largest accepted gamma solves max(|1-g|, |1+g|) <= 2,
  // i.e. g <= 1; halving from 5 accepts 0.625.
  const AttackContext ctx = Context({{0}, {2}}, {C(3)});
  const CraftedAttack a = AttackAgrMinMax(ctx, 1e-5, 5.0);
  EXPECT_TRUE(a.search.success);
  EXPECT_EQ(a.search.value, 0.625);
  EXPECT_NEAR(a.models.at(C(3))[0], 1.0 - 0.625, 1e-12);
  EXPECT_EQ(AttackAgrMinMax(ctx, 1e-5, 5.0).models, a.models);
}

TEST(AgrMinMaxTest, CollapsedBenignSet) {
  const AttackContext ctx = Context({{1, 1}, {1, 1}}, {C(3)});
  const CraftedAttack a = AttackAgrMinMax(ctx, 1e-5, 5.0);
  EXPECT_FALSE(a.search.success);
  EXPECT_NEAR(a.models.at(C(3))[0], 1.0, 1e-4);
  EXPECT_LE(a.search.evaluations, HalvingIterationBound(5.0, 1e-5));
}

TEST(PerturbationTest, UnitNormDirections) {
  const std::vector<ClientUpdate> benign{{C(0), {1, 0}}, {C(1), {3, 4}}};
  const Vector uv = PerturbationDirection(benign, Perturbation::kUnitVector);
  EXPECT_NEAR(SquaredNorm(uv), 1.0, 1e-12);
  EXPECT_LT(uv[0], 0.0);
  const Vector sd = PerturbationDirection(benign, Perturbation::kInvStd);
  EXPECT_NEAR(SquaredNorm(sd), 1.0, 1e-12);
  EXPECT_NEAR(sd[0] / sd[1], 1.0 / 2.0, 1e-12);  // std = (1, 2), negated
}

TEST(AdaptiveTest, StationaryHistoryReplaysLastModels) {
  const Matrix h{{1, 2}, {3, 4}};
  const std::vector<Matrix> history{h, h, h};
  const MaliciousModels base{{C(2), {0, 0, 0}}, {C(5), {0, 0, 0}}};
  const std::vector<std::size_t> idx{0, 2};
  const MaliciousModels out = AttackAdaptive(base, history, idx);
  EXPECT_NEAR(out.at(C(2))[0], 1.0, 1e-9);
  EXPECT_NEAR(out.at(C(2))[2], 3.0, 1e-9);
  EXPECT_EQ(out.at(C(2))[1], 0.0);
  EXPECT_NEAR(out.at(C(5))[0], 2.0, 1e-9);
  EXPECT_NEAR(out.at(C(5))[2], 4.0, 1e-9);
}

TEST(AdaptiveTest, IndicesByKnowledge) {
  const std::vector<std::size_t> server{1, 4};
  EXPECT_EQ(AdaptiveIndices(AttackerKnowledge::kOmniscient, server, 10, 2), server);
  EXPECT_EQ(AdaptiveIndices(AttackerKnowledge::kNonOmniscient, server, 10, 3),
            (std::vector<std::size_t>{7, 8, 9}));
}

TEST(AttackNamesTest, RoundTrip) {
  for (const char* n : {"none", "gauss", "lie", "opt", "agr_mm", "adaptive"})
    EXPECT_EQ(AttackKindName(AttackKindFromString(n)), n);
  EXPECT_EQ(PerturbationFromString("uv"), Perturbation::kUnitVector);
  EXPECT_EQ(PerturbationFromString("std"), Perturbation::kInvStd);
  EXPECT_EQ(KnowledgeFromString("non_omniscient"), AttackerKnowledge::kNonOmniscient);
  EXPECT_THROW(AttackKindFromString("bogus"), Error);
}

}  // namespace
}  // namespace flsim
