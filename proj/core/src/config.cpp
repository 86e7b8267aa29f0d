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

#include "flsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "flsim/errors.hpp"
#include "flsim/format.hpp"

namespace flsim {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kConfig, "invalid value '" + value + "' for key '" + key + "'");
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) BadValue(key, value);
  return out;
}

double ParseReal(const std::string& key, const std::string& value) {
  const double v = ParseNumber<double>(key, value);
  if (!std::isfinite(v)) BadValue(key, value);
  return v;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  BadValue(key, value);
}

std::optional<std::size_t> ParseAutoCount(const std::string& key, const std::string& value) {
  if (value == "auto") return std::nullopt;
  return ParseNumber<std::size_t>(key, value);
}

std::string FormatAuto(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "auto";
}

std::string FormatBool(bool v) { return v ? "true" : "false"; }

struct KeySpec {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define FLSIM_COUNT_KEY(key, field)                                                          \
  KeySpec {                                                                                  \
    key,                                                                                     \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
          c.field = ParseNumber<decltype(c.field)>(k, v);                                    \
        },                                                                                   \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                    \
  }
#define FLSIM_REAL_KEY(key, field)                                                                 \
  KeySpec {                                                                                        \
    key, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = ParseReal(k, v); }, \
        [](const ExperimentConfig& c) { return FormatDouble(c.field); }                            \
  }
#define FLSIM_BOOL_KEY(key, field)                                                                 \
  KeySpec {                                                                                        \
    key, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = ParseBool(k, v); }, \
        [](const ExperimentConfig& c) { return FormatBool(c.field); }                              \
  }
#define FLSIM_AUTO_KEY(key, field)                                                                 \
  KeySpec {                                                                                        \
    key,                                                                                           \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                      \
          c.field = ParseAutoCount(k, v);                                                          \
        },                                                                                         \
        [](const ExperimentConfig& c) { return FormatAuto(c.field); }                              \
  }
#define FLSIM_STRING_KEY(key, field)                                                               \
  KeySpec {                                                                                        \
    key, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.field = v; },       \
        [](const ExperimentConfig& c) { return c.field; }                                          \
  }
#define FLSIM_ENUM_KEY(key, field, parse, name)                                                    \
  KeySpec {                                                                                        \
    key, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.field = parse(v); }, \
        [](const ExperimentConfig& c) { return name(c.field); }                                    \
  }

TaskKind ParseTask(const std::string& v) {
  if (v == "synthetic_logreg") return TaskKind::kSyntheticLogreg;
  if (v == "mnist_subset") return TaskKind::kMnistSubset;
  throw Error(ErrorCode::kConfig, "unknown task '" + v + "'");
}
std::string TaskName(TaskKind t) {
  return t == TaskKind::kSyntheticLogreg ? "synthetic_logreg" : "mnist_subset";
}
MaliciousMode ParseMaliciousMode(const std::string& v) {
  if (v == "redraw") return MaliciousMode::kRedraw;
  if (v == "fixed") return MaliciousMode::kFixed;
  throw Error(ErrorCode::kConfig, "unknown malicious_mode '" + v + "'");
}
std::string MaliciousModeName(MaliciousMode m) {
  return m == MaliciousMode::kRedraw ? "redraw" : "fixed";
}
WeightMode ParseWeightMode(const std::string& v) {
  if (v == "uniform") return WeightMode::kUniform;
  if (v == "proportional") return WeightMode::kProportional;
  throw Error(ErrorCode::kConfig, "unknown weights '" + v + "'");
}
std::string WeightModeName(WeightMode w) {
  return w == WeightMode::kUniform ? "uniform" : "proportional";
}

const std::vector<KeySpec>& Keys() {
  static const std::vector<KeySpec> keys = {
      FLSIM_COUNT_KEY("K", num_clients),
      FLSIM_COUNT_KEY("m", clients_per_round),
      FLSIM_REAL_KEY("r", malicious_ratio),
      FLSIM_COUNT_KEY("T", rounds),
      FLSIM_AUTO_KEY("k", kept),
      FLSIM_COUNT_KEY("seed", seed),
      FLSIM_ENUM_KEY("malicious_mode", malicious_mode, ParseMaliciousMode, MaliciousModeName),
      FLSIM_ENUM_KEY("weights", weights, ParseWeightMode, WeightModeName),
      FLSIM_BOOL_KEY("filter_enabled", filter_enabled),
      FLSIM_COUNT_KEY("l", window),
      FLSIM_COUNT_KEY("d_tilde", d_tilde),
      FLSIM_COUNT_KEY("als_iters", als_iters),
      FLSIM_REAL_KEY("als_ridge_a", als_ridge_a),
      FLSIM_REAL_KEY("als_ridge_b", als_ridge_b),
      FLSIM_REAL_KEY("als_tolerance", als_tolerance),
      FLSIM_ENUM_KEY("fallback", fallback, AggregatorKindFromString, AggregatorKindName),
      FLSIM_BOOL_KEY("fallback_amend", fallback_amend),
      FLSIM_ENUM_KEY("aggregator", aggregator, AggregatorKindFromString, AggregatorKindName),
      FLSIM_REAL_KEY("trim_beta", trim_beta),
      FLSIM_AUTO_KEY("aggregator_b", aggregator_b),
      FLSIM_AUTO_KEY("krum_k_select", krum_k_select),
      FLSIM_COUNT_KEY("dnc_niters", dnc_niters),
      FLSIM_REAL_KEY("dnc_filter_frac", dnc_filter_frac),
      FLSIM_COUNT_KEY("dnc_sub_dim", dnc_sub_dim),
      FLSIM_ENUM_KEY("attack", attack, AttackKindFromString, AttackKindName),
      FLSIM_REAL_KEY("gauss_sigma", gauss_sigma),
      FLSIM_BOOL_KEY("gauss_per_coordinate", gauss_per_coordinate),
      FLSIM_REAL_KEY("opt_tau", opt_tau),
      FLSIM_REAL_KEY("opt_lambda_init", opt_lambda_init),
      FLSIM_REAL_KEY("agr_tau", agr_tau),
      FLSIM_REAL_KEY("agr_gamma_init", agr_gamma_init),
      FLSIM_ENUM_KEY("agr_perturbation", agr_perturbation, PerturbationFromString, PerturbationName),
      FLSIM_BOOL_KEY("agr_literal_reciprocal", agr_literal_reciprocal),
      FLSIM_ENUM_KEY("adaptive_knowledge", adaptive_knowledge, KnowledgeFromString, KnowledgeName),
      FLSIM_ENUM_KEY("adaptive_base", adaptive_base, AttackKindFromString, AttackKindName),
      FLSIM_ENUM_KEY("task", task, ParseTask, TaskName),
      FLSIM_REAL_KEY("alpha_d", alpha_d),
      FLSIM_COUNT_KEY("num_examples", num_examples),
      FLSIM_COUNT_KEY("num_features", num_features),
      FLSIM_COUNT_KEY("num_classes", num_classes),
      FLSIM_REAL_KEY("class_separation", class_separation),
      FLSIM_REAL_KEY("feature_noise", feature_noise),
      FLSIM_REAL_KEY("test_fraction", test_fraction),
      FLSIM_STRING_KEY("mnist_images", mnist_images),
      FLSIM_STRING_KEY("mnist_labels", mnist_labels),
      FLSIM_COUNT_KEY("mnist_limit", mnist_limit),
      FLSIM_COUNT_KEY("hidden", hidden),
      FLSIM_COUNT_KEY("local_epochs", local_epochs),
      FLSIM_REAL_KEY("lr", lr),
      FLSIM_COUNT_KEY("batch", batch),
      FLSIM_BOOL_KEY("write_scores", write_scores),
      FLSIM_BOOL_KEY("write_trajectories", write_trajectories),
      FLSIM_BOOL_KEY("record_timing", record_timing),
  };
  return keys;
}

#undef FLSIM_COUNT_KEY
#undef FLSIM_REAL_KEY
#undef FLSIM_BOOL_KEY
#undef FLSIM_AUTO_KEY
#undef FLSIM_STRING_KEY
#undef FLSIM_ENUM_KEY

void Require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfig, message);
}

}  // namespace

std::size_t ExperimentConfig::NumMalicious() const {
  const double b = std::ceil(malicious_ratio * static_cast<double>(clients_per_round) - 1e-9);
  return static_cast<std::size_t>(std::max(0.0, b));
}

std::size_t ExperimentConfig::KeptCount() const {
  if (kept) return *kept;
  const std::size_t b = NumMalicious();
  return clients_per_round > b ? clients_per_round - b : 1;
}

void ExperimentConfig::Validate() const {
  Require(num_clients >= 1, "K must be >= 1");
  Require(clients_per_round >= 1 && clients_per_round <= num_clients, "need 1 <= m <= K");
  Require(malicious_ratio >= 0.0 && malicious_ratio <= 1.0, "r must be in [0, 1]");
  Require(NumMalicious() <= clients_per_round, "b = ceil(r*m) exceeds m");
  Require(rounds >= 1, "T must be >= 1");
  Require(KeptCount() >= 1 && KeptCount() <= clients_per_round, "need 1 <= k <= m");
  Require(window >= 2, "l must be >= 2");
  Require(d_tilde >= 1, "d_tilde must be >= 1");
  Require(als_iters >= 1, "als_iters must be >= 1");
  Require(als_ridge_a >= 0.0 && als_ridge_b >= 0.0, "ALS ridges must be >= 0");
  Require(alpha_d > 0.0, "alpha_d must be > 0");
  Require(trim_beta >= 0.0 && trim_beta < 0.5, "trim_beta must be in [0, 0.5)");
  Require(dnc_niters >= 1 && dnc_sub_dim >= 1, "DnC needs niters >= 1 and sub_dim >= 1");
  Require(gauss_sigma >= 0.0, "gauss_sigma must be >= 0");
  Require(opt_tau > 0.0 && agr_tau > 0.0, "halving tolerances must be > 0");
  Require(adaptive_base != AttackKind::kAdaptive, "adaptive_base cannot be adaptive");
  Require(num_classes >= 2 && num_features >= 1, "task needs >= 2 classes and >= 1 feature");
  Require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must be in (0, 1)");
  Require(local_epochs >= 0 && lr >= 0.0 && batch >= 1, "invalid local training settings");
  if (task == TaskKind::kMnistSubset) {
    Require(!mnist_images.empty() && !mnist_labels.empty(),
            "mnist_subset needs mnist_images and mnist_labels");
  }
}

void SetConfigValue(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& spec : Keys()) {
    if (key == spec.name) {
      spec.set(config, key, value);
      return;
    }
  }
  throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

void ApplyOverride(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::kConfig, "expected key=value, got '" + assignment + "'");
  }
  SetConfigValue(config, Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

ExperimentConfig ParseConfig(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    try {
      ApplyOverride(base, line);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig LoadConfigFile(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> ConfigEntries(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : Keys()) out.emplace_back(spec.name, spec.get(config));
  return out;
}

std::string FormatConfig(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [k, v] : ConfigEntries(config)) out += k + "=" + v + "\n";
  return out;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> out;
  for (const auto& spec : Keys()) out.emplace_back(spec.name);
  return out;
}

}  // namespace flsim
