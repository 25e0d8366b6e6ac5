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

#include "dau/error.hpp"

#include <atomic>
#include <string>

#include "dau/parallel.hpp"

namespace dau {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kShapeMismatch: return "E_SHAPE";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kFormat: return "E_FORMAT";
    case ErrorCode::kChecksum: return "E_CHECKSUM";
    case ErrorCode::kVersion: return "E_VERSION";
    case ErrorCode::kNumeric: return "E_NUMERIC";
    case ErrorCode::kCheckFailed: return "E_CHECK_FAILED";
    case ErrorCode::kInternal: return "E_INTERNAL";
  }
  return "E_UNKNOWN";
}

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int threads) {
  require(threads >= 1 && threads <= 1024, ErrorCode::kInvalidArgument,
          "thread count must be in [1, 1024], got " + std::to_string(threads));
  g_threads.store(threads);
}

int num_threads() noexcept { return g_threads.load(); }

}  // namespace dau
