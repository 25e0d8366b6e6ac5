/*
 * Copyright 2026 The DAU-Net Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dau/tensor.hpp"

#include <limits>

namespace dau {

std::string Dims::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void validate_dims(const Dims& d, std::size_t element_size) {
  require(d.n >= 1 && d.c >= 1 && d.h >= 1 && d.w >= 1, ErrorCode::kInvalidArgument,
          "tensor dims must all be >= 1, got " + d.str());
  const std::size_t limit =
      static_cast<std::size_t>(std::numeric_limits<std::ptrdiff_t>::max()) / element_size;
  std::size_t total = 1;
  for (int v : {d.n, d.c, d.h, d.w}) {
    const auto u = static_cast<std::size_t>(v);
    require(total <= limit / u, ErrorCode::kInvalidArgument,
            "tensor dims overflow the address space: " + d.str());
    total *= u;
  }
}

}  // namespace dau
