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

#include "flsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flsim/errors.hpp"
#include "flsim/special_functions.hpp"

namespace flsim {

void DetectionLedger::AddRound(const ClientSet& flagged, const ClientSet& truth) {
  ++rounds_;
  for (ClientId id : flagged) {
    if (truth.contains(id)) {
      ++tp_;
    } else {
      ++fp_;
    }
  }
  for (ClientId id : truth)
    if (!flagged.contains(id)) ++fn_;
}

DetectionPr ComputeDetectionPr(const DetectionLedger& ledger) {
  DetectionPr pr;
  const std::size_t tp = ledger.true_positives();
  if (tp + ledger.false_positives() == 0) {
    pr.precision_undefined = true;
  } else {
    pr.precision = static_cast<double>(tp) / static_cast<double>(tp + ledger.false_positives());
  }
  if (tp + ledger.false_negatives() == 0) {
    pr.recall_undefined = true;
  } else {
    pr.recall = static_cast<double>(tp) / static_cast<double>(tp + ledger.false_negatives());
  }
  return pr;
}

namespace {

// Bin index of each sample, or an empty vector for a constant series.
std::vector<std::size_t> Discretize(std::span<const double> x, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return {};
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto b = static_cast<std::size_t>((x[i] - lo) / width);
    out[i] = std::min(b, bins - 1);
  }
  return out;
}

}  // namespace

double Tdmi(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "tdmi series lengths differ");
  if (a.size() < 4) throw Error(ErrorCode::kInvalidArgument, "tdmi needs >= 4 paired samples");
  if (bins < 2) throw Error(ErrorCode::kInvalidArgument, "tdmi needs >= 2 bins");
  const auto ia = Discretize(a, bins);
  const auto ib = Discretize(b, bins);
  if (ia.empty() || ib.empty()) return 0.0;
  const std::size_t n = a.size();
  std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[ia[i] * bins + ib[i]] += 1.0;
    pa[ia[i]] += 1.0;
    pb[ib[i]] += 1.0;
  }
  const double nn = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < bins; ++j) {
      const double c = joint[i * bins + j];
      if (c == 0.0) continue;
      mi += (c / nn) * std::log(c * nn / (pa[i] * pb[j]));
    }
  }
  return std::max(mi, 0.0);
}

double AvgTdmi(std::span<const Vector> sequence, std::size_t delay, std::size_t bins) {
  if (delay < 1 || sequence.size() <= delay) {
    throw Error(ErrorCode::kInvalidArgument, "avg_tdmi needs a sequence longer than the delay");
  }
  const std::size_t d = sequence.front().size();
  for (const auto& v : sequence)
    if (v.size() != d) throw Error(ErrorCode::kDimensionMismatch, "avg_tdmi dimension mismatch");
  if (d == 0) throw Error(ErrorCode::kInvalidDimension, "avg_tdmi needs d >= 1");
  const std::size_t n = sequence.size() - delay;
  std::vector<double> x(n), y(n);
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t t = 0; t < n; ++t) {
      x[t] = sequence[t][k];
      y[t] = sequence[t + delay][k];
    }
    total += Tdmi(x, y, bins);
  }
  return total / static_cast<double>(d);
}

WelchResult WelchOneTailed(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::kDegenerateSample, "Welch test needs >= 2 values per sample");
  }
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (!(se2 > 0.0)) throw Error(ErrorCode::kDegenerateSample, "Welch test on zero-variance samples");
  WelchResult r;
  r.statistic = (ma - mb) / std::sqrt(se2);
  const double na1 = static_cast<double>(a.size()) - 1.0;
  const double nb1 = static_cast<double>(b.size()) - 1.0;
  r.dof = se2 * se2 / (sa * sa / na1 + sb * sb / nb1);
  r.p_value = std::clamp(StudentTSurvival(r.statistic, r.dof), 0.0, 1.0);
  return r;
}

double ProbAtLeastOneMalicious(std::size_t total, std::size_t malicious, std::size_t selected) {
  if (malicious > total || selected < 1 || selected > total) {
    throw Error(ErrorCode::kInvalidCounts,
                "need 0 <= b <= K and 1 <= m <= K (K=" + std::to_string(total) +
                    ", b=" + std::to_string(malicious) + ", m=" + std::to_string(selected) + ")");
  }
  if (malicious == 0) return 0.0;
  if (selected > total - malicious) return 1.0;
  // C(K-b, m) / C(K, m) = prod_{i<m} (K-b-i) / (K-i) = prod_{i<m} (1 - b/(K-i)).
  double log_none = 0.0;
  const auto b = static_cast<double>(malicious);
  for (std::size_t i = 0; i < selected; ++i) {
    log_none += std::log1p(-b / static_cast<double>(total - i));
  }
  return -std::expm1(log_none);
}

}  // namespace flsim
