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
#include <random>
#include <sstream>

#include "flsim/errors.hpp"
#include "gtest/gtest.h"

namespace flsim {
namespace {

ClientId C(std::uint32_t v) { return ClientId{v}; }

UpdateMatrix Make(std::size_t round, std::vector<std::uint32_t> ids,
                  std::vector<std::vector<double>> cols) {
  UpdateMatrix u;
  u.round_id = round;
  u.values = Matrix(cols.front().size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    u.client_ids.push_back(C(ids[c]));
    u.values.set_column(c, cols[c]);
  }
  return u;
}

TEST(SampleParamIndicesTest, FullAndMinimal) {
  EXPECT_EQ(SampleParamIndices(5, 5, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  const auto one = SampleParamIndices(10, 1, 3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_LT(one[0], 10u);
  EXPECT_EQ(one, SampleParamIndices(10, 1, 3));
}

TEST(SampleParamIndicesTest, DistinctSortedDeterministic) {
  const auto a = SampleParamIndices(10000, 500, 42);
  ASSERT_EQ(a.size(), 500u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_EQ(a, SampleParamIndices(10000, 500, 42));
  EXPECT_NE(a, SampleParamIndices(10000, 500, 43));
}

TEST(SampleParamIndicesTest, OutOfRangeThrows) {
  EXPECT_THROW(SampleParamIndices(5, 6, 0), Error);
  EXPECT_THROW(SampleParamIndices(5, 0, 0), Error);
}

TEST(AnomalyScoresTest, WarmColdAndUnselected) {
  const UpdateMatrix observed = Make(3, {1, 2}, {{1, 2}, {3, 0}});
  const UpdateMatrix predicted = Make(3, {1, 5}, {{1, 4}, {9, 9}});
  const std::vector<double> global{0, 0};
  const std::vector<ClientId> universe{C(1), C(2), C(5)};
  const AnomalyScores s = ComputeAnomalyScores(observed, predicted, global, universe);
  EXPECT_EQ(s.Score(C(1)), 4.0);  // warm: (1,2) vs (1,4)
  EXPECT_EQ(s.Score(C(2)), 9.0);  // cold: (3,0) vs global
  EXPECT_FALSE(s.Score(C(5)).has_value());
  EXPECT_EQ(s.DefinedCount(), 2u);
}

TEST(AnomalyScoresTest, ExactForecastScoresZero) {
  const UpdateMatrix obs = Make(2, {0}, {{1.5, -2}});
  EXPECT_EQ(ComputeAnomalyScores(obs, obs, std::vector<double>{0, 0}).Score(C(0)), 0.0);
}

TEST(SelectTopKTest, OrdersByScoreThenId) {
  AnomalyScores s;
  s.entries = {{C(1), 0.1}, {C(2), 0.5}, {C(3), 0.9}, {C(4), std::nullopt}};
  EXPECT_EQ(SelectTopK(s, 2), (ClientSet{C(1), C(2)}));
  s.entries = {{C(1), 0.5}, {C(2), 0.5}, {C(3), 0.5}};
  EXPECT_EQ(SelectTopK(s, 1), (ClientSet{C(1)}));
  EXPECT_EQ(SelectTopK(s, 3), (ClientSet{C(1), C(2), C(3)}));
  EXPECT_THROW(SelectTopK(s, 4), Error);
  EXPECT_THROW(SelectTopK(s, 0), Error);
}

TEST(AmendMatrixTest, NoFlagsIsIdentity) {
  const UpdateMatrix obs = Make(2, {1, 3}, {{1, 1}, {2, 2}});
  const UpdateMatrix out = AmendMatrix(obs, {}, nullptr, std::vector<double>{0, 0});
  EXPECT_EQ(out.values, obs.values);
  EXPECT_EQ(out.client_ids, obs.client_ids);
}

TEST(AmendMatrixTest, PrefersPreviousColumnThenGlobal) {
  const UpdateMatrix prev = Make(1, {1, 3}, {{5, 5}, {7, 7}});
  const UpdateMatrix obs = Make(2, {2, 3}, {{1, 1}, {100, 100}});
  const std::vector<double> global{0.5, 0.5};
  const UpdateMatrix a = AmendMatrix(obs, {C(3)}, &prev, global);
  EXPECT_EQ(a.Column(C(3)), (Vector{7, 7}));
  EXPECT_EQ(a.Column(C(2)), (Vector{1, 1}));
  const UpdateMatrix b = AmendMatrix(obs, {C(2)}, &prev, global);
  EXPECT_EQ(b.Column(C(2)), (Vector{0.5, 0.5}));
  // Idempotent for the same inputs.
  EXPECT_EQ(AmendMatrix(a, {C(3)}, &prev, global).values, a.values);
}

TEST(AmendMatrixTest, UnknownFlaggedClientThrows) {
  const UpdateMatrix obs = Make(2, {1}, {{1}});
  EXPECT_THROW(AmendMatrix(obs, {C(9)}, nullptr, std::vector<double>{0}), Error);
}

TEST(FilterRoundTest, ExactForecastKeepsLowestIds) {
  HistoryWindow h(3);
  const UpdateMatrix m = Make(1, {0, 1, 2}, {{1, 2}, {3, 4}, {5, 6}});
  h.Push(m);
  UpdateMatrix m2 = m;
  m2.round_id = 2;
  h.Push(m2);
  UpdateMatrix obs = m;
  obs.round_id = 3;
  const FilterResult r = FilterRound(h, obs, std::vector<double>{0, 0}, 2, {});
  for (const auto& [id, s] : r.scores.entries) EXPECT_NEAR(*s, 0.0, 1e-12);
  EXPECT_EQ(r.kept, (ClientSet{C(0), C(1)}));
}

TEST(FilterRoundTest, PerturbedColumnIsExcluded) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t d = 6, m = 5;
  Matrix base(d, m);
  for (double& v : base.data()) v = n(rng);
  HistoryWindow h(2);
  UpdateMatrix a;
  a.values = base;
  a.round_id = 1;
  for (std::uint32_t c = 0; c < m; ++c) a.client_ids.push_back(C(c));
  h.Push(a);
  UpdateMatrix b = a;
  b.round_id = 2;
  h.Push(b);
  UpdateMatrix obs = a;
  obs.round_id = 3;
  for (std::size_t r = 0; r < d; ++r) obs.values(r, 3) += 1000.0;
  const FilterResult fr = FilterRound(h, obs, std::vector<double>(d, 0.0), m - 1, {});
  EXPECT_FALSE(fr.kept.contains(C(3)));
  EXPECT_GE(*fr.scores.Score(C(3)), 1000.0 * 1000.0 * d * 0.99);
}

TEST(FilterRoundTest, SingleMatrixUsesPersistence) {
  HistoryWindow h(2);
  h.Push(Make(1, {0, 1}, {{1, 1}, {2, 2}}));
  const UpdateMatrix obs = Make(2, {0, 1}, {{1, 1}, {4, 2}});
  const FilterResult r = FilterRound(h, obs, std::vector<double>{0, 0}, 1, {});
  EXPECT_EQ(r.scores.Score(C(0)), 0.0);
  EXPECT_EQ(r.scores.Score(C(1)), 4.0);
  EXPECT_EQ(r.kept, (ClientSet{C(0)}));
}

TEST(ScoresCsvTest, Format) {
  AnomalyScores s;
  s.round_id = 4;
  s.entries = {{C(1), 0.5}, {C(2), std::nullopt}};
  std::ostringstream os;
  WriteScoresCsvHeader(os);
  WriteScoresCsvRows(os, s, {C(1)}, {});
  EXPECT_EQ(os.str(),
            "round_id,client_id,score,flagged,truth\n4,1,0.5,true,false\n4,2,NA,false,false\n");
}

}  // namespace
}  // namespace flsim
