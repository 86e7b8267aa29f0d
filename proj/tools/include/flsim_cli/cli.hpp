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

#ifndef FLSIM_CLI_CLI_HPP_
#define FLSIM_CLI_CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flsim/config.hpp"

namespace flsim::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Entry point shared by the executable and the tests. `env_seed` stands in
// for the FLSIM_SEED environment variable (empty when unset).
int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
         const std::string& env_seed = "");

// Effective configuration: defaults, then the config file, then FLSIM_SEED,
// then each --set override in order.
ExperimentConfig ResolveConfig(const std::string& config_path,
                               const std::vector<std::string>& overrides,
                               const std::string& env_seed);

// Git blob hash (SHA-1 of "blob <size>\0<content>") as lowercase hex.
std::string GitBlobHash(const std::string& content);

// Cartesian product of "key=v1,v2,..." specs; each combination is a list of
// key=value assignments in spec order.
std::vector<std::vector<std::string>> ExpandSweep(const std::vector<std::string>& specs);

}  // namespace flsim::cli

#endif  // FLSIM_CLI_CLI_HPP_
