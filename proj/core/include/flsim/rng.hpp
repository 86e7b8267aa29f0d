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

#ifndef FLSIM_RNG_HPP_
#define FLSIM_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flsim {

using Rng = std::mt19937_64;

// Purpose tags keep independent streams apart even when they share the
// same (seed, round, client) key.
enum class StreamTag : std::uint64_t {
  kGeneric = 0,
  kDataset = 1,
  kPartition = 2,
  kModelInit = 3,
  kSelection = 4,
  kMalicious = 5,
  kLocalTrain = 6,
  kAttack = 7,
  kParamSample = 8,
  kDnc = 9,
  kPowerIteration = 10,
};

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t DeriveSeed(std::uint64_t master, StreamTag tag,
                                std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = SplitMix64(master ^ SplitMix64(static_cast<std::uint64_t>(tag)));
  for (std::uint64_t k : keys) h = SplitMix64(h ^ SplitMix64(k + 0x51ed270b27a1c3d5ULL));
  return h;
}

inline Rng MakeStream(std::uint64_t master, StreamTag tag,
                      std::initializer_list<std::uint64_t> keys = {}) {
  return Rng(DeriveSeed(master, tag, keys));
}

}  // namespace flsim

#endif  // FLSIM_RNG_HPP_
