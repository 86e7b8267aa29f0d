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

#ifndef FLSIM_FORMAT_HPP_
#define FLSIM_FORMAT_HPP_

#include <string>

namespace flsim {

// Shortest round-trip decimal form of a double; used wherever output must be
// byte-stable across runs.
std::string FormatDouble(double v);

}  // namespace flsim

#endif  // FLSIM_FORMAT_HPP_
