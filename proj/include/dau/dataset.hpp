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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dau/tensor.hpp"

namespace dau {

inline constexpr int kCifarClasses = 10;
inline constexpr int kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarPixels;

struct DatasetSplit {
  Tensor images;            // (N, C, H, W)
  std::vector<int> labels;  // N entries
  std::vector<float> channel_mean;  // mean subtracted during loading

  std::size_t size() const noexcept { return labels.size(); }
  void validate(int classes) const;
};

// Reads one CIFAR-10 binary batch file (records of 1 label byte followed by
// 3072 pixel bytes in R, G, B plane order). Pixels are scaled to [0, 1].
// At most `limit` records are read when limit > 0.
DatasetSplit read_cifar10_file(const std::string& path, std::size_t limit = 0);

// Loads data_batch_1..5.bin (train) and test_batch.bin (test) from `dir`,
// scales pixels to [0, 1] and subtracts the train split's per-channel mean
// from both splits.
std::pair<DatasetSplit, DatasetSplit> load_cifar10(const std::string& dir,
                                                   std::size_t train_limit = 0,
                                                   std::size_t test_limit = 0);

// Writes records in the CIFAR-10 binary layout.
void write_cifar10_file(const std::string& path, std::span<const std::uint8_t> pixels,
                        std::span<const std::uint8_t> labels);

// Per-channel mean over the whole split, in double precision.
std::vector<double> channel_means(const Tensor& images);

// Rows [first, first + count) as a new split.
DatasetSplit slice(const DatasetSplit& ds, std::size_t first, std::size_t count);

}  // namespace dau
