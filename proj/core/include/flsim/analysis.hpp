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

#ifndef FLSIM_ANALYSIS_HPP_
#define FLSIM_ANALYSIS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "flsim/linalg.hpp"
#include "flsim/update_matrix.hpp"

namespace flsim {

// Cumulative detection counts over rounds.
class DetectionLedger {
 public:
  void AddRound(const ClientSet& flagged, const ClientSet& truth);

  std::size_t rounds() const { return rounds_; }
  std::size_t true_positives() const { return tp_; }
  std::size_t false_positives() const { return fp_; }
  std::size_t false_negatives() const { return fn_; }

 private:
  std::size_t rounds_ = 0;
  std::size_t tp_ = 0;
  std::size_t fp_ = 0;
  std::size_t fn_ = 0;
};

struct DetectionPr {
  double precision = 1.0;
  double recall = 1.0;
  // Set when the respective denominator was 0 and the 1.0 convention applied.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

DetectionPr ComputeDetectionPr(const DetectionLedger& ledger);

// Plug-in mutual information (nats) of paired samples on an equal-width
// bins x bins histogram spanning each series' own [min, max]. A constant
// series carries no information and yields 0. The result is clamped at 0.
double Tdmi(std::span<const double> a, std::span<const double> b, std::size_t bins = 10);

// Mean over coordinates k of Tdmi(x_k(t), x_k(t + delay)).
double AvgTdmi(std::span<const Vector> sequence, std::size_t delay = 1, std::size_t bins = 10);

struct WelchResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 0.5;
};

// One-tailed Welch t-test for H_a: mean(a) > mean(b).
WelchResult WelchOneTailed(std::span<const double> a, std::span<const double> b);

// Pr(at least one of b malicious clients among m drawn without replacement
// from K) = 1 - C(K-b, m) / C(K, m).
double ProbAtLeastOneMalicious(std::size_t total, std::size_t malicious, std::size_t selected);

}  // namespace flsim

#endif  // FLSIM_ANALYSIS_HPP_
