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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

void AggregationInput::Validate() const {
  if (columns.empty()) throw Error(ErrorCode::kInvalidArgument, "aggregation needs >= 1 column");
  const std::size_t d = columns.front().params.size();
  ClientSet ids;
  for (const auto& c : columns) {
    if (c.params.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "aggregation columns differ in dimension");
    }
    ids.insert(c.id);
  }
  if (ids.size() != columns.size()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate client id in aggregation input");
  }
  if (weights) {
    if (weights->size() != columns.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "weights length != column count");
    }
    double total = 0.0;
    for (double w : *weights) {
      if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "weights must sum to 1");
    }
  }
}

AggregationInput AggregationInput::Canonical() const {
  Validate();
  std::vector<std::size_t> order(columns.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return columns[a].id < columns[b].id; });
  AggregationInput out;
  out.columns.reserve(columns.size());
  for (std::size_t i : order) out.columns.push_back(columns[i]);
  if (weights) {
    out.weights.emplace();
    for (std::size_t i : order) out.weights->push_back((*weights)[i]);
  }
  return out;
}

AggregationInput AggregationInput::Subset(const ClientSet& ids) const {
  AggregationInput out;
  double total = 0.0;
  std::vector<double> w;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (!ids.contains(columns[i].id)) continue;
    out.columns.push_back(columns[i]);
    if (weights) {
      w.push_back((*weights)[i]);
      total += (*weights)[i];
    }
  }
  if (weights && total > 0.0) {
    for (double& x : w) x /= total;
    out.weights = std::move(w);
  }
  return out;
}

namespace {

Vector WeightedMean(const AggregationInput& in) {
  const std::size_t m = in.size();
  Vector out(in.dim(), 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    const double w = in.weights ? (*in.weights)[c] : 1.0 / static_cast<double>(m);
    const auto& p = in.columns[c].params;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w * p[j];
  }
  return out;
}

double SortedMedian(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> PairwiseSquaredDistances(const AggregationInput& in) {
  const std::size_t m = in.size();
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = SquaredDistance(in.columns[i].params, in.columns[j].params);
      dist[i * m + j] = d;
      dist[j * m + i] = d;
    }
  }
  return dist;
}

// Krum scores restricted to `pool` (indices into the canonical input).
std::vector<double> PoolKrumScores(const std::vector<double>& dist, std::size_t m,
                                   const std::vector<std::size_t>& pool, std::size_t f) {
  const std::size_t n = pool.size();
  const std::size_t neighbours = n >= f + 2 ? n - f - 2 : 0;
  std::vector<double> scores(n, 0.0);
  std::vector<double> row;
  for (std::size_t a = 0; a < n; ++a) {
    row.clear();
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) row.push_back(dist[pool[a] * m + pool[b]]);
    std::sort(row.begin(), row.end());
    scores[a] = std::accumulate(row.begin(), row.begin() + static_cast<long>(neighbours), 0.0);
  }
  return scores;
}

// Positions in `pool` ordered by (score, client id); pool is id-ordered.
std::vector<std::size_t> RankByScore(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

Vector FedAvg(const AggregationInput& input) { return WeightedMean(input.Canonical()); }

Vector FedMedian(const AggregationInput& input) {
  const AggregationInput in = input.Canonical();
  Vector out(in.dim());
  std::vector<double> vals(in.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t c = 0; c < in.size(); ++c) vals[c] = in.columns[c].params[j];
    std::sort(vals.begin(), vals.end());
    out[j] = SortedMedian(vals);
  }
  return out;
}

Vector TrimmedMean(const AggregationInput& input, double beta) {
  if (!(beta >= 0.0 && beta < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "trimmed mean beta must be in [0, 0.5)");
  }
  const AggregationInput in = input.Canonical();
  const std::size_t m = in.size();
  const auto trim = static_cast<std::size_t>(std::floor(beta * static_cast<double>(m)));
  if (2 * trim >= m) throw Error(ErrorCode::kOvertrim, "nothing left after trimming");
  Vector out(in.dim());
  std::vector<double> vals(m);
  for (std::size_t j = 0; j < out.size(); ++j) {
    for (std::size_t c = 0; c < m; ++c) vals[c] = in.columns[c].params[j];
    std::sort(vals.begin(), vals.end());
    double s = 0.0;
    for (std::size_t c = trim; c < m - trim; ++c) s += vals[c];
    out[j] = s / static_cast<double>(m - 2 * trim);
  }
  return out;
}

std::vector<double> KrumScores(const AggregationInput& input, std::size_t num_malicious) {
  const AggregationInput in = input.Canonical();
  const std::size_t m = in.size();
  if (m < num_malicious + 3) {
    throw Error(ErrorCode::kTooFewClients, "Krum needs m >= b + 3 (m=" + std::to_string(m) +
                                               ", b=" + std::to_string(num_malicious) + ")");
  }
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  return PoolKrumScores(PairwiseSquaredDistances(in), m, pool, num_malicious);
}

std::vector<ClientId> KrumSelect(const AggregationInput& input, std::size_t num_malicious,
                                 std::size_t k_select) {
  const AggregationInput in = input.Canonical();
  if (k_select < 1 || k_select > in.size()) {
    throw Error(ErrorCode::kInvalidArgument, "Multi-Krum k_select out of range");
  }
  const auto scores = KrumScores(in, num_malicious);
  const auto order = RankByScore(scores);
  std::vector<ClientId> out;
  for (std::size_t i = 0; i < k_select; ++i) out.push_back(in.columns[order[i]].id);
  return out;
}

SelectionResult MultiKrumWithSelection(const AggregationInput& input, std::size_t num_malicious,
                                       std::size_t k_select) {
  const auto ids = KrumSelect(input, num_malicious, k_select);
  SelectionResult r;
  r.kept = ClientSet(ids.begin(), ids.end());
  const AggregationInput in = input.Canonical().Subset(r.kept);
  r.model = WeightedMean(in);
  return r;
}

Vector MultiKrum(const AggregationInput& input, std::size_t num_malicious, std::size_t k_select) {
  return MultiKrumWithSelection(input, num_malicious, k_select).model;
}

SelectionResult BulyanWithSelection(const AggregationInput& input, std::size_t num_malicious) {
  const AggregationInput in = input.Canonical();
  const std::size_t m = in.size();
  const std::size_t b = num_malicious;
  if (m < 4 * b + 3) {
    throw Error(ErrorCode::kTooFewClients, "Bulyan needs m >= 4b + 3 (m=" + std::to_string(m) +
                                               ", b=" + std::to_string(b) + ")");
  }
  const std::size_t alpha = m - 2 * b;
  const std::size_t beta = alpha - 2 * b;
  const auto dist = PairwiseSquaredDistances(in);

  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> selected;
  while (selected.size() < alpha) {
    const auto scores = PoolKrumScores(dist, m, pool, b);
    const std::size_t pick = RankByScore(scores).front();
    selected.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<long>(pick));
  }

  SelectionResult r;
  for (std::size_t c : selected) r.kept.insert(in.columns[c].id);
  r.model.assign(in.dim(), 0.0);
  std::vector<double> vals(alpha);
  for (std::size_t j = 0; j < in.dim(); ++j) {
    for (std::size_t i = 0; i < alpha; ++i) vals[i] = in.columns[selected[i]].params[j];
    std::sort(vals.begin(), vals.end());
    const double med = SortedMedian(vals);
    std::sort(vals.begin(), vals.end(), [med](double x, double y) {
      const double dx = std::abs(x - med);
      const double dy = std::abs(y - med);
      return dx != dy ? dx < dy : x < y;
    });
    double s = 0.0;
    for (std::size_t i = 0; i < beta; ++i) s += vals[i];
    r.model[j] = s / static_cast<double>(beta);
  }
  return r;
}

Vector Bulyan(const AggregationInput& input, std::size_t num_malicious) {
  return BulyanWithSelection(input, num_malicious).model;
}

SelectionResult DncWithSelection(const AggregationInput& input, const DncOptions& options) {
  const AggregationInput in = input.Canonical();
  const std::size_t m = in.size();
  const std::size_t d = in.dim();
  if (m < 2) throw Error(ErrorCode::kTooFewClients, "DnC needs m >= 2");
  if (options.sub_dim < 1 || options.sub_dim > d) {
    throw Error(ErrorCode::kInvalidDimension, "DnC sub_dim must be in [1, d]");
  }
  if (options.niters < 1) throw Error(ErrorCode::kInvalidArgument, "DnC niters must be >= 1");
  const auto to_remove = static_cast<std::size_t>(
      std::ceil(options.filter_frac * static_cast<double>(options.num_malicious)));

  std::vector<bool> removed(m, false);
  std::vector<double> cumulative(m, 0.0);
  std::vector<std::size_t> coords(d);
  std::iota(coords.begin(), coords.end(), 0);
  for (int it = 0; it < options.niters; ++it) {
    Rng rng = MakeStream(options.seed, StreamTag::kDnc, {static_cast<std::uint64_t>(it)});
    std::vector<std::size_t> sub;
    sub.reserve(options.sub_dim);
    std::sample(coords.begin(), coords.end(), std::back_inserter(sub), options.sub_dim, rng);

    Matrix centered(m, sub.size());
    for (std::size_t k = 0; k < sub.size(); ++k) {
      double mean = 0.0;
      for (std::size_t c = 0; c < m; ++c) mean += in.columns[c].params[sub[k]];
      mean /= static_cast<double>(m);
      for (std::size_t c = 0; c < m; ++c) centered(c, k) = in.columns[c].params[sub[k]] - mean;
    }
    const Vector v = TopRightSingularVector(
        centered, options.power_iters,
        DeriveSeed(options.seed, StreamTag::kPowerIteration, {static_cast<std::uint64_t>(it)}));
    std::vector<double> score(m);
    for (std::size_t c = 0; c < m; ++c) {
      const double p = Dot(centered.row(c), v);
      score[c] = p * p;
      cumulative[c] += score[c];
    }
    const auto order = RankByScore(score);
    for (std::size_t i = 0; i < std::min(to_remove, m); ++i) removed[order[m - 1 - i]] = true;
  }

  std::vector<std::size_t> kept_idx;
  for (std::size_t c = 0; c < m; ++c)
    if (!removed[c]) kept_idx.push_back(c);
  if (kept_idx.empty()) kept_idx.push_back(RankByScore(cumulative).front());

  SelectionResult r;
  for (std::size_t c : kept_idx) r.kept.insert(in.columns[c].id);
  r.model = WeightedMean(in.Subset(r.kept));
  return r;
}

Vector Dnc(const AggregationInput& input, const DncOptions& options) {
  return DncWithSelection(input, options).model;
}

AggregatorKind AggregatorKindFromString(const std::string& name) {
  if (name == "fedavg") return AggregatorKind::kFedAvg;
  if (name == "fedmedian") return AggregatorKind::kFedMedian;
  if (name == "trimmed_mean") return AggregatorKind::kTrimmedMean;
  if (name == "multi_krum") return AggregatorKind::kMultiKrum;
  if (name == "bulyan") return AggregatorKind::kBulyan;
  if (name == "dnc") return AggregatorKind::kDnc;
  throw Error(ErrorCode::kConfig, "unknown aggregator '" + name + "'");
}

std::string AggregatorKindName(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kFedAvg: return "fedavg";
    case AggregatorKind::kFedMedian: return "fedmedian";
    case AggregatorKind::kTrimmedMean: return "trimmed_mean";
    case AggregatorKind::kMultiKrum: return "multi_krum";
    case AggregatorKind::kBulyan: return "bulyan";
    case AggregatorKind::kDnc: return "dnc";
  }
  return "fedavg";
}

SelectionResult Aggregate(const AggregatorSpec& spec, const AggregationInput& input) {
  input.Validate();
  SelectionResult all;
  for (const auto& c : input.columns) all.kept.insert(c.id);
  switch (spec.kind) {
    case AggregatorKind::kFedAvg:
      all.model = FedAvg(input);
      return all;
    case AggregatorKind::kFedMedian:
      all.model = FedMedian(input);
      return all;
    case AggregatorKind::kTrimmedMean:
      all.model = TrimmedMean(input, spec.trim_beta);
      return all;
    case AggregatorKind::kMultiKrum: {
      const std::size_t m = input.size();
      const std::size_t k = spec.k_select.value_or(
          m > spec.num_malicious ? m - spec.num_malicious : 1);
      return MultiKrumWithSelection(input, spec.num_malicious, std::min(k, m));
    }
    case AggregatorKind::kBulyan:
      return BulyanWithSelection(input, spec.num_malicious);
    case AggregatorKind::kDnc: {
      DncOptions opts = spec.dnc;
      opts.num_malicious = spec.num_malicious;
      opts.sub_dim = std::min(opts.sub_dim, input.dim());
      return DncWithSelection(input, opts);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unhandled aggregator");
}

}  // namespace flsim
