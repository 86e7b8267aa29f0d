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

#ifndef FLSIM_UPDATE_MATRIX_HPP_
#define FLSIM_UPDATE_MATRIX_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "flsim/linalg.hpp"

namespace flsim {

struct ClientId {
  std::uint32_t value = 0;
  friend auto operator<=>(const ClientId&, const ClientId&) = default;
};

inline std::ostream& operator<<(std::ostream& os, ClientId id) { return os << id.value; }

using ClientSet = std::set<ClientId>;

// One round of sampled local models: column c holds the d_tilde sampled
// coordinates of the model sent by client_ids[c].
struct UpdateMatrix {
  Matrix values;
  std::vector<ClientId> client_ids;
  std::size_t round_id = 0;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }

  std::optional<std::size_t> ColumnOf(ClientId id) const;
  Vector Column(ClientId id) const;

  // Throws kDimensionMismatch / kInvalidArgument when ids are not unique or
  // do not match the column count.
  void Validate() const;
};

}  // namespace flsim

#endif  // FLSIM_UPDATE_MATRIX_HPP_
