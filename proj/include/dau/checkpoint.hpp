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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dau/trainer.hpp"

namespace dau {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian binary container:
//   "DAUCKPT\0" | u32 version | u32 len + resolved config text |
//   u32 epochs_done | u64 iterations | u64 rng seed |
//   u32 blob count | blobs (u32 name len, name, u8 dtype, u64 count, payload) |
//   u64 FNV-1a checksum of every preceding byte.
// dtype: 0 = f32, 1 = f64, 2 = u8. Blob names are the network array names;
// optimizer velocities are stored as "opt.<param name>".
std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) noexcept;

}  // namespace dau
