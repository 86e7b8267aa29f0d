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

#include "flsim/update_matrix.hpp"

#include <algorithm>
#include <string>

#include "flsim/errors.hpp"

namespace flsim {

std::optional<std::size_t> UpdateMatrix::ColumnOf(ClientId id) const {
  const auto it = std::find(client_ids.begin(), client_ids.end(), id);
  if (it == client_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - client_ids.begin());
}

Vector UpdateMatrix::Column(ClientId id) const {
  const auto col = ColumnOf(id);
  if (!col) {
    throw Error(ErrorCode::kInvalidArgument,
                "client " + std::to_string(id.value) + " not in round " +
                    std::to_string(round_id));
  }
  return values.column(*col);
}

void UpdateMatrix::Validate() const {
  if (client_ids.size() != values.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "client_ids length != column count");
  }
  ClientSet seen(client_ids.begin(), client_ids.end());
  if (seen.size() != client_ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate client id in update matrix");
  }
}

}  // namespace flsim
