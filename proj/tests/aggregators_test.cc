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

#include "flsim/aggregators.hpp"

#include <random>

#include "flsim/errors.hpp"
#include "gtest/gtest.h"
#include "support/oracles.hpp"

namespace flsim {
namespace {

AggregationInput FromRows(const std::vector<Vector>& rows) {
  AggregationInput in;
  for (std::size_t i = 0; i < rows.size(); ++i)
    in.columns.push_back({ClientId{static_cast<std::uint32_t>(i)}, rows[i]});
  return in;
}

std::vector<Vector> RandomRows(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vector> rows(m, Vector(d));
  for (auto& r : rows)
    for (double& v : r) v = n(rng);
  return rows;
}

std::set<std::size_t> Positions(const ClientSet& s) {
  std::set<std::size_t> out;
  for (ClientId id : s) out.insert(id.value);
  return out;
}

void ExpectNearVec(const Vector& a, const Vector& b, double tol = 1e-12) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "coord " << i;
}

TEST(FedAvgTest, Basics) {
  ExpectNearVec(FedAvg(FromRows({{1, 2, 3}})), {1, 2, 3});
  ExpectNearVec(FedAvg(FromRows({{0, 0}, {2, 4}})), {1, 2});
  std::mt19937_64 rng(1);
  const auto rows = RandomRows(5, 4, rng);
  ExpectNearVec(FedAvg(FromRows(rows)), testing::OracleMean(rows, testing::AllOf(rows)));
}

TEST(FedAvgTest, WeightsAndOrderIndependence) {
  AggregationInput in = FromRows({{0}, {10}});
  in.weights = std::vector<double>{0.75, 0.25};
  ExpectNearVec(FedAvg(in), {2.5});
  std::swap(in.columns[0], in.columns[1]);
  std::swap((*in.weights)[0], (*in.weights)[1]);
  ExpectNearVec(FedAvg(in), {2.5});
  in.weights = std::vector<double>{0.5, 0.6};
  EXPECT_THROW(FedAvg(in), Error);
}

TEST(FedMedianTest, OddEvenAndOracle) {
  ExpectNearVec(FedMedian(FromRows({{1, 5}, {2, 4}, {3, 3}})), {2, 4});
  ExpectNearVec(FedMedian(FromRows({{0, 0}, {10, 10}})), {5, 5});
  std::mt19937_64 rng(2);
  const auto rows = RandomRows(7, 3, rng);
  ExpectNearVec(FedMedian(FromRows(rows)), testing::OracleMedian(rows), 0.0);
}

TEST(TrimmedMeanTest, Examples) {
  ExpectNearVec(TrimmedMean(FromRows({{1}, {2}, {3}, {4}, {100}}), 0.2), {3});
  ExpectNearVec(TrimmedMean(FromRows({{1}, {4}}), 0.49), {2.5});
  std::mt19937_64 rng(3);
  const auto rows = RandomRows(6, 2, rng);
  ExpectNearVec(TrimmedMean(FromRows(rows), 0.0), FedAvg(FromRows(rows)));
  EXPECT_THROW(TrimmedMean(FromRows(rows), 0.5), Error);
}

TEST(MultiKrumTest, IdenticalVectorsTieBreakById) {
  const std::vector<Vector> rows(4, Vector{1, 2});
  const auto ids = KrumSelect(FromRows(rows), 0, 1);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], ClientId{0});
  ExpectNearVec(MultiKrum(FromRows(rows), 0, 1), {1, 2});
}

TEST(MultiKrumTest, ScalarOutlierExample) {
  const std::vector<Vector> rows{{0}, {0.1}, {0.2}, {0.3}, {100}};
  const auto scores = KrumScores(FromRows(rows), 1);
  const auto oracle = testing::OracleKrumScores(rows, testing::AllOf(rows), 1);
  ExpectNearVec(scores, oracle);
  const Vector pick = MultiKrum(FromRows(rows), 1, 1);
  EXPECT_TRUE(pick[0] == 0.1 || pick[0] == 0.2);
}

TEST(MultiKrumTest, TooFewClients) {
  try {
    KrumScores(FromRows({{0}, {1}, {2}}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewClients);
  }
}

TEST(MultiKrumTest, MatchesExhaustiveOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const auto rows = RandomRows(6, 3, rng);
    const auto r = MultiKrumWithSelection(FromRows(rows), 1, 3);
    const auto o = testing::OracleMultiKrum(rows, 1, 3);
    EXPECT_EQ(Positions(r.kept), o.kept) << "seed " << seed;
    ExpectNearVec(r.model, o.model);
  }
}

TEST(BulyanTest, Examples) {
  const std::vector<Vector> same(3, Vector{4, -1});
  ExpectNearVec(Bulyan(FromRows(same), 0), {4, -1});
  ExpectNearVec(Bulyan(FromRows({{0}, {0}, {0}, {0}, {0}, {0}, {50}}), 1), {0});
  EXPECT_THROW(Bulyan(FromRows({{0}, {1}, {2}, {3}, {4}, {5}}), 1), Error);
}

TEST(BulyanTest, MatchesTwoStageOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto rows = RandomRows(11, 2, rng);
    const auto r = BulyanWithSelection(FromRows(rows), 2);
    const auto o = testing::OracleBulyan(rows, 2);
    EXPECT_EQ(Positions(r.kept), o.kept) << "seed " << seed;
    ExpectNearVec(r.model, o.model);
  }
}

TEST(DncTest, IdenticalModelsKeepEveryone) {
  const std::vector<Vector> rows(5, Vector{1, 1, 1});
  DncOptions o;
  o.num_malicious = 1;
  o.sub_dim = 3;
  const auto r = DncWithSelection(FromRows(rows), o);
  ExpectNearVec(r.model, {1, 1, 1});
}

TEST(DncTest, RemovesFarOutlierAndIsDeterministic) {
  std::mt19937_64 rng(5);
  auto rows = RandomRows(10, 4, rng);
  for (double& v : rows[7]) v += 100.0;
  DncOptions o;
  o.num_malicious = 1;
  o.sub_dim = 4;
  o.seed = 9;
  const auto r = DncWithSelection(FromRows(rows), o);
  EXPECT_FALSE(r.kept.contains(ClientId{7}));
  EXPECT_EQ(r.kept.size(), 9u);
  EXPECT_EQ(DncWithSelection(FromRows(rows), o).kept, r.kept);
}

TEST(AggregateTest, DispatchAndNames) {
  for (const char* name : {"fedavg", "fedmedian", "trimmed_mean", "multi_krum", "bulyan", "dnc"}) {
    EXPECT_EQ(AggregatorKindName(AggregatorKindFromString(name)), name);
  }
  EXPECT_THROW(AggregatorKindFromString("krummy"), Error);
  std::mt19937_64 rng(6);
  const auto rows = RandomRows(7, 2, rng);
  AggregatorSpec spec;
  spec.kind = AggregatorKind::kMultiKrum;
  spec.num_malicious = 1;
  const auto r = Aggregate(spec, FromRows(rows));
  EXPECT_EQ(r.kept.size(), 6u);  // default k = m - b
  spec.kind = AggregatorKind::kFedMedian;
  EXPECT_EQ(Aggregate(spec, FromRows(rows)).kept.size(), 7u);
}

// Shuffling the input columns never changes any aggregator's output.
TEST(AggregateTest, PermutationInvariance) {
  std::mt19937_64 rng(7);
  const auto rows = RandomRows(11, 3, rng);
  AggregationInput in = FromRows(rows);
  AggregationInput shuffled = in;
  std::shuffle(shuffled.columns.begin(), shuffled.columns.end(), rng);
  for (auto kind : {AggregatorKind::kFedAvg, AggregatorKind::kFedMedian,
                    AggregatorKind::kTrimmedMean, AggregatorKind::kMultiKrum,
                    AggregatorKind::kBulyan, AggregatorKind::kDnc}) {
    AggregatorSpec spec;
    spec.kind = kind;
    spec.num_malicious = 2;
    const auto a = Aggregate(spec, in);
    const auto b = Aggregate(spec, shuffled);
    EXPECT_EQ(a.model, b.model) << AggregatorKindName(kind);
    EXPECT_EQ(a.kept, b.kept) << AggregatorKindName(kind);
  }
}

}  // namespace
}  // namespace flsim
