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

#include "flsim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "flsim/attacks.hpp"
#include "flsim/errors.hpp"
#include "flsim/format.hpp"
#include "flsim/rng.hpp"
#include "json.hpp"

namespace flsim {

struct Simulation::State {
  ExperimentConfig config;
  ModelSpec spec;
  Dataset train;
  Dataset test;
  std::vector<ClientShard> shards;
  std::vector<ClientId> universe;
  std::vector<std::size_t> indices;
  Vector global;
  HistoryWindow history;
  DetectionLedger ledger;
  ClientSet fixed_malicious;
  std::vector<std::size_t> attacker_indices;
  std::deque<Matrix> attacker_history;
  std::size_t round = 1;

  explicit State(ExperimentConfig c) : config(std::move(c)), history(config.window) {}
};

namespace {

MarOptions MarOptionsFor(const ExperimentConfig& c) {
  MarOptions o;
  o.iters = c.als_iters;
  o.ridge_a = c.als_ridge_a;
  o.ridge_b = c.als_ridge_b;
  o.tolerance = c.als_tolerance;
  return o;
}

AggregatorSpec SpecFor(const ExperimentConfig& c, AggregatorKind kind, std::size_t b,
                       std::uint64_t round) {
  AggregatorSpec s;
  s.kind = kind;
  s.trim_beta = c.trim_beta;
  s.num_malicious = b;
  s.k_select = c.krum_k_select;
  s.dnc.niters = c.dnc_niters;
  s.dnc.filter_frac = c.dnc_filter_frac;
  s.dnc.sub_dim = c.dnc_sub_dim;
  s.dnc.seed = DeriveSeed(c.seed, StreamTag::kDnc, {round});
  return s;
}

std::vector<ClientId> SampleIds(std::span<const ClientId> from, std::size_t count, Rng& rng) {
  std::vector<ClientId> out;
  std::sample(from.begin(), from.end(), std::back_inserter(out), count, rng);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Simulation::Simulation(ExperimentConfig config)
    : state_(std::make_unique<State>(std::move(config))) {
  State& s = *state_;
  const ExperimentConfig& c = s.config;
  c.Validate();

  Dataset full;
  if (c.task == TaskKind::kSyntheticLogreg) {
    SyntheticOptions so;
    so.num_examples = c.num_examples;
    so.num_features = c.num_features;
    so.num_classes = c.num_classes;
    so.class_separation = c.class_separation;
    so.noise = c.feature_noise;
    so.seed = c.seed;
    full = MakeSyntheticClassification(so);
  } else {
    full = LoadIdxSubset(c.mnist_images, c.mnist_labels, c.mnist_limit, c.seed);
  }
  auto split = SplitTrainTest(full, c.test_fraction, c.seed);
  s.train = std::move(split.train);
  s.test = std::move(split.test);
  s.shards = PartitionDirichlet(s.train, c.num_clients, c.alpha_d, c.seed);
  for (const auto& shard : s.shards) s.universe.push_back(shard.id);

  s.spec = ModelSpec{s.train.num_features, s.train.num_classes, c.hidden};
  s.global = InitParams(s.spec, c.seed);
  const std::size_t d = s.spec.ParamCount();
  s.indices = SampleParamIndices(d, std::min(c.d_tilde, d),
                                 DeriveSeed(c.seed, StreamTag::kParamSample));

  if (c.malicious_mode == MaliciousMode::kFixed) {
    const auto count = static_cast<std::size_t>(
        std::ceil(c.malicious_ratio * static_cast<double>(c.num_clients) - 1e-9));
    Rng rng = MakeStream(c.seed, StreamTag::kMalicious);
    const auto ids = SampleIds(s.universe, count, rng);
    s.fixed_malicious = ClientSet(ids.begin(), ids.end());
  }
  if (c.attack == AttackKind::kAdaptive) {
    s.attacker_indices =
        AdaptiveIndices(c.adaptive_knowledge, s.indices, d, std::min(c.d_tilde, d));
  }
}

Simulation::~Simulation() = default;

bool Simulation::done() const { return state_->round > state_->config.rounds; }
std::size_t Simulation::next_round() const { return state_->round; }
const ExperimentConfig& Simulation::config() const { return state_->config; }
const ModelSpec& Simulation::model_spec() const { return state_->spec; }
const Vector& Simulation::global_model() const { return state_->global; }
const std::vector<std::size_t>& Simulation::sampled_indices() const { return state_->indices; }
const Dataset& Simulation::train_data() const { return state_->train; }
const Dataset& Simulation::test_data() const { return state_->test; }
const std::vector<ClientShard>& Simulation::shards() const { return state_->shards; }
const DetectionLedger& Simulation::ledger() const { return state_->ledger; }

RoundRecord Simulation::RunRound() {
  if (done()) throw Error(ErrorCode::kInvalidArgument, "all rounds already ran");
  State& s = *state_;
  const ExperimentConfig& c = s.config;
  const auto start = std::chrono::steady_clock::now();
  const std::size_t t = s.round;
  RoundRecord rec;
  rec.round_id = t;

  // Client selection and corruption.
  if (c.clients_per_round == c.num_clients) {
    rec.selected = s.universe;
  } else {
    Rng rng = MakeStream(c.seed, StreamTag::kSelection, {t});
    rec.selected = SampleIds(s.universe, c.clients_per_round, rng);
  }
  if (c.malicious_mode == MaliciousMode::kRedraw) {
    Rng rng = MakeStream(c.seed, StreamTag::kMalicious, {t});
    const auto ids = SampleIds(rec.selected, c.NumMalicious(), rng);
    rec.malicious = ClientSet(ids.begin(), ids.end());
  } else {
    for (ClientId id : rec.selected)
      if (s.fixed_malicious.contains(id)) rec.malicious.insert(id);
  }
  const std::size_t b = rec.malicious.size();

  // Honest local training.
  TrainOptions train_opts{c.local_epochs, c.lr, c.batch};
  std::vector<ClientUpdate> updates;
  updates.reserve(rec.selected.size());
  for (ClientId id : rec.selected) {
    updates.push_back({id, LocalTrain(s.spec, s.global, s.train, s.shards[id.value].indices,
                                      train_opts, DeriveSeed(c.seed, StreamTag::kLocalTrain,
                                                             {t, id.value}))});
  }

  // Attack.
  if (b > 0 && c.attack != AttackKind::kNone) {
    AttackContext ctx;
    ctx.malicious_ids = rec.malicious;
    ctx.global_model = s.global;
    ctx.seed = c.seed;
    ctx.round_id = t;
    MaliciousModels honest;
    for (const auto& u : updates) {
      if (rec.malicious.contains(u.id)) {
        honest.emplace(u.id, u.params);
      } else {
        ctx.benign_updates.push_back(u);
      }
    }
    const AggregatorSpec attacked_spec =
        SpecFor(c, c.aggregator, c.aggregator_b.value_or(b), t);
    auto craft = [&](AttackKind kind) -> MaliciousModels {
      switch (kind) {
        case AttackKind::kNone:
        case AttackKind::kAdaptive:
          return honest;
        case AttackKind::kGauss:
          return AttackGauss(ctx, honest, c.gauss_sigma, c.gauss_per_coordinate);
        case AttackKind::kLie:
          return AttackLie(ctx);
        case AttackKind::kOpt: {
          auto crafted = AttackOpt(
              ctx,
              [&](const AggregationInput& in) { return Aggregate(attacked_spec, in).model; },
              c.opt_tau, c.opt_lambda_init);
          rec.attack_search = crafted.search;
          return std::move(crafted.models);
        }
        case AttackKind::kAgrMinMax: {
          auto crafted = AttackAgrMinMax(ctx, c.agr_tau, c.agr_gamma_init, c.agr_perturbation,
                                         c.agr_literal_reciprocal);
          rec.attack_search = crafted.search;
          return std::move(crafted.models);
        }
      }
      return honest;
    };
    MaliciousModels poisoned;
    if (c.attack == AttackKind::kAdaptive) {
      poisoned = craft(c.adaptive_base);
      if (!s.attacker_history.empty() && s.attacker_history.back().cols() != b) {
        s.attacker_history.clear();
      }
      if (s.attacker_history.size() >= 2) {
        const std::vector<Matrix> series(s.attacker_history.begin(), s.attacker_history.end());
        poisoned = AttackAdaptive(poisoned, series, s.attacker_indices, MarOptionsFor(c));
      }
      Matrix own(s.attacker_indices.size(), b);
      std::size_t col = 0;
      for (const auto& [id, v] : poisoned) {
        for (std::size_t r = 0; r < s.attacker_indices.size(); ++r) {
          own(r, col) = v[s.attacker_indices[r]];
        }
        ++col;
      }
      s.attacker_history.push_back(std::move(own));
      while (s.attacker_history.size() > c.window) s.attacker_history.pop_front();
    } else {
      poisoned = craft(c.attack);
    }
    for (auto& u : updates) {
      auto it = poisoned.find(u.id);
      if (it != poisoned.end()) u.params = it->second;
    }
  }

  // Server side.
  AggregationInput input;
  input.columns = updates;
  if (c.weights == WeightMode::kProportional) {
    std::vector<double> w;
    double total = 0.0;
    for (const auto& u : updates) {
      w.push_back(static_cast<double>(s.shards[u.id.value].indices.size()));
      total += w.back();
    }
    for (double& x : w) x /= total;
    input.weights = std::move(w);
  }

  UpdateMatrix observed;
  observed.round_id = t;
  observed.client_ids = rec.selected;
  observed.values = Matrix(s.indices.size(), updates.size());
  for (std::size_t col = 0; col < updates.size(); ++col) {
    Vector sampled = Gather(updates[col].params, s.indices);
    observed.values.set_column(col, sampled);
    rec.submitted_sampled.push_back(std::move(sampled));
  }
  const Vector global_sampled = Gather(s.global, s.indices);
  ClientSet selected_set(rec.selected.begin(), rec.selected.end());

  SelectionResult aggregated;
  if (!c.filter_enabled) {
    aggregated = Aggregate(SpecFor(c, c.aggregator, c.aggregator_b.value_or(b), t), input);
    rec.kept = selected_set;
  } else if (s.history.empty()) {
    AggregatorSpec fallback = SpecFor(c, c.fallback, b, t);
    if (c.fallback == AggregatorKind::kMultiKrum && !c.krum_k_select) {
      fallback.k_select = std::max<std::size_t>(1, updates.size() - b);
    }
    aggregated = Aggregate(fallback, input);
    rec.kept = aggregated.kept;
    std::set_difference(selected_set.begin(), selected_set.end(), rec.kept.begin(),
                        rec.kept.end(),
                        std::inserter(rec.fallback_rejected, rec.fallback_rejected.end()));
    s.history.Push(c.fallback_amend
                       ? AmendMatrix(observed, rec.fallback_rejected, nullptr, global_sampled)
                       : observed);
  } else {
    FilterResult fr = FilterRound(s.history, observed, global_sampled, c.KeptCount(),
                                  MarOptionsFor(c), s.universe);
    rec.filtered = true;
    rec.kept = fr.kept;
    std::set_difference(selected_set.begin(), selected_set.end(), rec.kept.begin(),
                        rec.kept.end(), std::inserter(rec.flagged, rec.flagged.end()));
    s.ledger.AddRound(rec.flagged, rec.malicious);
    UpdateMatrix amended = AmendMatrix(observed, rec.flagged, &s.history.newest(), global_sampled);
    s.history.Push(std::move(amended));
    rec.scores = std::move(fr.scores);
    aggregated =
        Aggregate(SpecFor(c, c.aggregator, c.aggregator_b.value_or(0), t), input.Subset(rec.kept));
  }
  s.global = std::move(aggregated.model);

  rec.accuracy = Accuracy(s.spec, s.global, s.test);
  const DetectionPr pr = ComputeDetectionPr(s.ledger);
  rec.precision_so_far = pr.precision;
  rec.recall_so_far = pr.recall;
  if (c.record_timing) {
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                 .count();
  }
  ++s.round;
  return rec;
}

ExperimentResult RunExperiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Simulation sim(config);
  ExperimentResult result;
  result.config = config;
  result.sampled_indices = sim.sampled_indices();
  while (!sim.done()) result.rounds.push_back(sim.RunRound());

  ExperimentSummary& sum = result.summary;
  for (const auto& r : result.rounds) {
    sum.best_accuracy = std::max(sum.best_accuracy, r.accuracy);
    if (r.filtered) ++sum.filtered_rounds;
  }
  sum.final_accuracy = result.rounds.back().accuracy;
  sum.detection = ComputeDetectionPr(sim.ledger());
  sum.true_positives = sim.ledger().true_positives();
  sum.false_positives = sim.ledger().false_positives();
  sum.false_negatives = sim.ledger().false_negatives();
  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (config.record_timing) sum.runtime_ms = result.wall_ms;
  return result;
}

namespace {

std::string JoinIds(const ClientSet& ids) {
  std::string out;
  for (ClientId id : ids) {
    if (!out.empty()) out += ';';
    out += std::to_string(id.value);
  }
  return out;
}

}  // namespace

std::string RoundsCsv(const ExperimentResult& result) {
  std::string out = "round_id,accuracy,precision_so_far,recall_so_far,flagged_ids,malicious_ids,ms\n";
  for (const auto& r : result.rounds) {
    out += std::to_string(r.round_id) + ',' + FormatDouble(r.accuracy) + ',' +
           FormatDouble(r.precision_so_far) + ',' + FormatDouble(r.recall_so_far) + ',' +
           JoinIds(r.flagged) + ',' + JoinIds(r.malicious) + ',' + FormatDouble(r.ms) + '\n';
  }
  return out;
}

std::string SummaryJson(const ExperimentResult& result) {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ConfigEntries(result.config)) config[k] = v;
  const ExperimentSummary& s = result.summary;
  nlohmann::ordered_json j;
  j["config"] = config;
  j["rounds"] = result.rounds.size();
  j["num_malicious_per_round"] = result.config.NumMalicious();
  j["sampled_coordinates"] = result.sampled_indices.size();
  j["best_accuracy"] = s.best_accuracy;
  j["final_accuracy"] = s.final_accuracy;
  j["filtered_rounds"] = s.filtered_rounds;
  j["precision"] = s.detection.precision;
  j["recall"] = s.detection.recall;
  j["precision_undefined"] = s.detection.precision_undefined;
  j["recall_undefined"] = s.detection.recall_undefined;
  j["true_positives"] = s.true_positives;
  j["false_positives"] = s.false_positives;
  j["false_negatives"] = s.false_negatives;
  j["runtime_ms"] = s.runtime_ms;
  return j.dump(2) + "\n";
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename into " + path.string());
  }
}

void WriteExperimentOutputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteFileAtomic(dir / "rounds.csv", RoundsCsv(result));
  WriteFileAtomic(dir / "summary.json", SummaryJson(result));
  if (result.config.write_scores) {
    std::ostringstream out;
    WriteScoresCsvHeader(out);
    for (const auto& r : result.rounds) {
      if (r.scores) WriteScoresCsvRows(out, *r.scores, r.flagged, r.malicious);
    }
    WriteFileAtomic(dir / "scores.csv", out.str());
  }
  if (result.config.write_trajectories) {
    std::string out = "round_id,client_id,malicious";
    for (std::size_t j = 0; j < result.sampled_indices.size(); ++j) {
      out += ",p" + std::to_string(result.sampled_indices[j]);
    }
    out += '\n';
    for (const auto& r : result.rounds) {
      for (std::size_t i = 0; i < r.selected.size(); ++i) {
        out += std::to_string(r.round_id) + ',' + std::to_string(r.selected[i].value) + ',' +
               (r.malicious.contains(r.selected[i]) ? "1" : "0");
        for (double v : r.submitted_sampled[i]) out += ',' + FormatDouble(v);
        out += '\n';
      }
    }
    WriteFileAtomic(dir / "trajectories.csv", out);
  }
}

}  // namespace flsim
