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

#include "flsim_cli/cli.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "flsim/analysis.hpp"
#include "flsim/errors.hpp"
#include "flsim/format.hpp"
#include "flsim/simulation.hpp"
#include "json.hpp"

namespace flsim::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingArtifact, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string UtcTimestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Adds ".0" to integral renderings so that probabilities read as reals.
std::string FormatReal(double v) {
  std::string s = FormatDouble(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

bool IsNonEmptyDir(const fs::path& p) {
  return fs::is_directory(p) && !fs::is_empty(p);
}

// Output directories are assembled under "<out>.partial" and renamed into
// place once everything has been written.
class StagedDir {
 public:
  StagedDir(fs::path target, bool force) : target_(std::move(target)) {
    if (fs::exists(target_) && !fs::is_directory(target_)) {
      throw Error(ErrorCode::kConfig, target_.string() + " exists and is not a directory");
    }
    if (IsNonEmptyDir(target_) && !force) {
      throw Error(ErrorCode::kConfig,
                  "output directory " + target_.string() + " is not empty (use --force)");
    }
    staging_ = target_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  const fs::path& path() const { return staging_; }

  void Commit() {
    if (fs::exists(target_)) fs::remove_all(target_);
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

void WriteManifest(const fs::path& dir, const std::string& config_path, const fs::path& out_dir,
                   const ExperimentConfig& config, double wall_ms) {
  nlohmann::ordered_json j;
  j["config_path"] = config_path;
  j["output_dir"] = out_dir.string();
  j["config_hash"] = GitBlobHash(FormatConfig(config));
  j["timestamp"] = UtcTimestamp();
  j["wall_ms"] = wall_ms;
  j["version"] = kVersion;
  WriteFileAtomic(dir / "manifest.json", j.dump(2) + "\n");
  WriteFileAtomic(dir / "config.txt", FormatConfig(config));
}

ExperimentResult RunInto(const ExperimentConfig& config, const std::string& config_path,
                         const fs::path& dir, const fs::path& final_dir) {
  ExperimentResult result = RunExperiment(config);
  WriteExperimentOutputs(result, dir);
  WriteManifest(dir, config_path, final_dir, config, result.wall_ms);
  return result;
}

struct RunOptions {
  std::string config_path;
  std::string out;
  std::vector<std::string> overrides;
  bool force = false;
};

int CmdRun(const RunOptions& o, const std::string& env_seed, std::ostream& out) {
  const ExperimentConfig config = ResolveConfig(o.config_path, o.overrides, env_seed);
  StagedDir staged(o.out, o.force);
  const ExperimentResult result = RunInto(config, o.config_path, staged.path(), o.out);
  staged.Commit();
  const auto& s = result.summary;
  out << "rounds=" << result.rounds.size() << " best_accuracy=" << FormatDouble(s.best_accuracy)
      << " final_accuracy=" << FormatDouble(s.final_accuracy)
      << " precision=" << FormatReal(s.detection.precision)
      << " recall=" << FormatReal(s.detection.recall) << " out=" << o.out << "\n";
  return kExitOk;
}

std::string SubrunName(std::size_t index, const std::vector<std::string>& assignments) {
  std::ostringstream name;
  name << "run" << std::setw(3) << std::setfill('0') << index;
  for (const auto& a : assignments) {
    std::string part = a;
    std::replace(part.begin(), part.end(), '=', '-');
    std::replace(part.begin(), part.end(), '/', '_');
    name << '_' << part;
  }
  return name.str();
}

int CmdSweep(const RunOptions& o, const std::vector<std::string>& sweep_specs, std::size_t cap,
             int jobs, const std::string& env_seed, std::ostream& out) {
  const ExperimentConfig base = ResolveConfig(o.config_path, o.overrides, env_seed);
  const auto combos = ExpandSweep(sweep_specs);
  if (combos.size() > cap) {
    throw Error(ErrorCode::kCapExceeded, "sweep has " + std::to_string(combos.size()) +
                                             " runs, cap is " + std::to_string(cap) +
                                             " (raise with --cap)");
  }
  std::vector<std::string> varied;
  for (const auto& spec : sweep_specs) varied.push_back(spec.substr(0, spec.find('=')));

  std::vector<ExperimentConfig> configs;
  for (const auto& combo : combos) {
    ExperimentConfig c = base;
    for (const auto& a : combo) ApplyOverride(c, a);
    c.Validate();
    configs.push_back(std::move(c));
  }

  StagedDir staged(o.out, o.force);
  std::vector<ExperimentSummary> summaries(configs.size());
  std::vector<std::string> names(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        names[i] = SubrunName(i, combos[i]);
        summaries[i] = RunInto(configs[i], o.config_path, staged.path() / names[i],
                               fs::path(o.out) / names[i])
                           .summary;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  std::string csv = "run";
  for (const auto& k : varied) csv += "," + k;
  csv += ",best_accuracy,final_accuracy,precision,recall,runtime_ms\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    csv += names[i];
    for (const auto& a : combos[i]) csv += "," + a.substr(a.find('=') + 1);
    const auto& s = summaries[i];
    csv += "," + FormatDouble(s.best_accuracy) + "," + FormatDouble(s.final_accuracy) + "," +
           FormatDouble(s.detection.precision) + "," + FormatDouble(s.detection.recall) + "," +
           FormatDouble(s.runtime_ms) + "\n";
  }
  WriteFileAtomic(staged.path() / "sweep_summary.csv", csv);
  staged.Commit();
  out << "runs=" << configs.size() << " out=" << o.out << "\n";
  return kExitOk;
}

std::vector<std::string> SplitLine(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

struct AnalyzeOptions {
  std::string run_dir;
  std::string mode = "pr";
  std::size_t delay = 1;
  std::size_t bins = 10;
  std::size_t total = 100;
  std::size_t malicious = 5;
  std::size_t selected = 20;
};

int AnalyzePr(const AnalyzeOptions& o, std::ostream& out) {
  const fs::path dir = o.run_dir;
  const auto summary = nlohmann::json::parse(ReadFile(dir / "summary.json"));
  const double p = summary.at("precision").get<double>();
  const double r = summary.at("recall").get<double>();
  nlohmann::ordered_json j;
  j["precision"] = p;
  j["recall"] = r;
  j["true_positives"] = summary.at("true_positives");
  j["false_positives"] = summary.at("false_positives");
  j["false_negatives"] = summary.at("false_negatives");
  WriteFileAtomic(dir / "pr.json", j.dump(2) + "\n");
  out << "P=" << FormatReal(p) << " R=" << FormatReal(r) << "\n";
  return kExitOk;
}

int AnalyzeTdmi(const AnalyzeOptions& o, std::ostream& out) {
  const fs::path dir = o.run_dir;
  const fs::path path = dir / "trajectories.csv";
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingArtifact,
                path.string() + " not found (run with write_trajectories=true)");
  }
  std::istringstream in(ReadFile(path));
  std::string line;
  std::getline(in, line);  // header
  struct Trajectory {
    std::vector<std::size_t> rounds;
    std::vector<Vector> models;
    std::size_t malicious_rounds = 0;
  };
  std::map<std::uint32_t, Trajectory> by_client;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = SplitLine(line, ',');
    if (f.size() < 4) throw Error(ErrorCode::kMissingArtifact, "malformed trajectories.csv row");
    Trajectory& tr = by_client[static_cast<std::uint32_t>(std::stoul(f[1]))];
    tr.rounds.push_back(std::stoul(f[0]));
    if (f[2] == "1") ++tr.malicious_rounds;
    Vector v;
    for (std::size_t i = 3; i < f.size(); ++i) v.push_back(std::stod(f[i]));
    tr.models.push_back(std::move(v));
  }
  // Tdmi needs at least 4 delayed pairs.
  const std::size_t min_len = o.delay + 4;
  std::string csv = "client_id,round_pair,avg_tdmi\n";
  std::vector<double> legit, poisoned;
  const std::string pair = "t:t+" + std::to_string(o.delay);
  for (const auto& [id, tr] : by_client) {
    if (tr.models.size() < min_len) continue;
    const double v = AvgTdmi(tr.models, o.delay, o.bins);
    csv += std::to_string(id) + "," + pair + "," + FormatDouble(v) + "\n";
    if (tr.malicious_rounds == 0) legit.push_back(v);
    if (tr.malicious_rounds == tr.models.size()) poisoned.push_back(v);
  }
  if (legit.empty() && poisoned.empty()) {
    throw Error(ErrorCode::kMissingArtifact, "no client has " + std::to_string(min_len) +
                                                 " rounds of history for delay " +
                                                 std::to_string(o.delay));
  }
  WriteFileAtomic(dir / "tdmi.csv", csv);
  const WelchResult w = WelchOneTailed(legit, poisoned);
  nlohmann::ordered_json j;
  j["statistic"] = w.statistic;
  j["dof"] = w.dof;
  j["p_value"] = w.p_value;
  j["legitimate_clients"] = legit.size();
  j["malicious_clients"] = poisoned.size();
  WriteFileAtomic(dir / "ttest.json", j.dump(2) + "\n");
  out << "legitimate=" << legit.size() << " malicious=" << poisoned.size()
      << " t=" << FormatDouble(w.statistic) << " dof=" << FormatDouble(w.dof)
      << " p=" << FormatDouble(w.p_value) << "\n";
  return kExitOk;
}

int AnalyzeProb(const AnalyzeOptions& o, std::ostream& out) {
  const double p = ProbAtLeastOneMalicious(o.total, o.malicious, o.selected);
  std::ostringstream s;
  s << std::setprecision(12) << p;
  out << "K=" << o.total << " b=" << o.malicious << " m=" << o.selected
      << " prob_at_least_one_malicious=" << s.str() << "\n";
  return kExitOk;
}

int CmdAnalyze(const AnalyzeOptions& o, std::ostream& out) {
  if (o.mode == "prob") return AnalyzeProb(o, out);
  if (o.run_dir.empty()) throw Error(ErrorCode::kConfig, "analyze --mode " + o.mode + " needs a run directory");
  if (!fs::is_directory(o.run_dir)) {
    throw Error(ErrorCode::kMissingArtifact, "run directory " + o.run_dir + " does not exist");
  }
  if (o.mode == "pr") return AnalyzePr(o, out);
  return AnalyzeTdmi(o, out);
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kMissingArtifact:
    case ErrorCode::kCapExceeded:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

}  // namespace

ExperimentConfig ResolveConfig(const std::string& config_path,
                               const std::vector<std::string>& overrides,
                               const std::string& env_seed) {
  ExperimentConfig config;
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) {
      throw Error(ErrorCode::kConfig, "config file not found: " + config_path);
    }
    config = LoadConfigFile(config_path);
  }
  if (!env_seed.empty()) {
    try {
      SetConfigValue(config, "seed", env_seed);
    } catch (const Error&) {
      throw Error(ErrorCode::kConfig, "FLSIM_SEED is not an unsigned integer: " + env_seed);
    }
  }
  for (const auto& o : overrides) ApplyOverride(config, o);
  config.Validate();
  return config;
}

std::string GitBlobHash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream hex;
  for (unsigned char c : digest) hex << std::hex << std::setw(2) << std::setfill('0') << int{c};
  return hex.str();
}

std::vector<std::vector<std::string>> ExpandSweep(const std::vector<std::string>& specs) {
  std::vector<std::vector<std::string>> combos{{}};
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kConfig, "sweep spec must be key=v1,v2,...: '" + spec + "'");
    }
    const std::string key = spec.substr(0, eq);
    const auto values = SplitLine(spec.substr(eq + 1), ',');
    if (values.empty()) throw Error(ErrorCode::kConfig, "sweep spec '" + spec + "' has no values");
    std::vector<std::vector<std::string>> next;
    for (const auto& combo : combos) {
      for (const auto& v : values) {
        if (v.empty()) throw Error(ErrorCode::kConfig, "empty value in sweep spec '" + spec + "'");
        auto c = combo;
        c.push_back(key + "=" + v);
        next.push_back(std::move(c));
      }
    }
    combos = std::move(next);
  }
  return combos;
}

int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
         const std::string& env_seed) {
  CLI::App app{"Federated learning simulator with MAR-forecast update filtering", "flsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunOptions run_opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", run_opts.config_path, "Flat key=value config file");
    sub->add_option("--out", run_opts.out, "Output directory")->required();
    sub->add_option("--set", run_opts.overrides, "Config override key=value (repeatable)");
    sub->add_flag("--force", run_opts.force, "Replace a non-empty output directory");
  };
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  add_common(run);

  std::vector<std::string> sweep_specs;
  std::size_t cap = 256;
  int jobs = 1;
  CLI::App* sweep = app.add_subcommand("sweep", "Run the cartesian product of swept keys");
  add_common(sweep);
  sweep->add_option("--sweep", sweep_specs, "Swept key as key=v1,v2,... (repeatable)");
  sweep->add_option("--jobs", jobs, "Parallel subruns")->check(CLI::PositiveNumber);
  sweep->add_option("--cap", cap, "Maximum number of subruns");

  AnalyzeOptions an;
  CLI::App* analyze = app.add_subcommand("analyze", "Post-process a run directory");
  analyze->add_option("run_dir", an.run_dir, "Run directory (not needed for --mode prob)");
  analyze->add_option("--mode", an.mode, "tdmi | pr | prob")
      ->check(CLI::IsMember({"tdmi", "pr", "prob"}));
  analyze->add_option("--delay", an.delay, "TDMI delay in rounds")->check(CLI::PositiveNumber);
  analyze->add_option("--bins", an.bins, "Histogram bins per axis")->check(CLI::Range(2, 1000));
  analyze->add_option("--K", an.total, "Total clients (prob mode)");
  analyze->add_option("--b", an.malicious, "Malicious clients (prob mode)");
  analyze->add_option("--m", an.selected, "Selected clients (prob mode)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return CmdRun(run_opts, env_seed, out);
    if (sweep->parsed()) return CmdSweep(run_opts, sweep_specs, cap, jobs, env_seed, out);
    return CmdAnalyze(an, out);
  } catch (const Error& e) {
    err << "flsim: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "flsim: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace flsim::cli
