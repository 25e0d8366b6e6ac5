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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dau/dau_layer.hpp"

namespace dau {

// Flat key=value text with dotted section prefixes, e.g.
//   net.layer1.kind = dau
//   train.lr = 0.01
// '#' starts a comment. Later assignments (and overrides) win.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<text>");
  static Config load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  // Accepts "key=value".
  void apply_override(std::string_view assignment);
  void merge(const Config& other);

  std::optional<std::string> get(const std::string& key) const;
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

  std::string to_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

enum class BlockKind { kDau, kConv, kFc };

const char* block_kind_name(BlockKind kind) noexcept;

// One convolutional block (conv -> [bn] -> [relu] -> [maxpool]) or the
// fully connected classifier head.
struct BlockSpec {
  BlockKind kind = BlockKind::kDau;
  int features = 32;
  int units = 4;           // DAU units per filter
  double sigma = 0.5;      // DAU aggregation scale
  double max_disp = 4.0;   // DAU displacement bound
  int kernel = 3;          // dense conv kernel extent
  bool batchnorm = true;
  bool relu = true;
  bool pool = false;
};

struct NetworkSpec {
  int in_channels = 3;
  int in_height = 32;
  int in_width = 32;
  int classes = 10;
  std::vector<BlockSpec> blocks;

  void validate() const;

  // Three DAU blocks with batch norm, ReLU and 2x2 max pooling, followed by a
  // fully connected softmax head. The first block keeps four units.
  static NetworkSpec cifar_dau(int units = 4, double sigma = 0.5, double max_disp = 4.0);
  // Same shape with dense 5x5 / 3x3 / 3x3 filters.
  static NetworkSpec cifar_conv();
};

struct TrainConfig {
  int batch_size = 128;
  int epochs = 20;
  double base_lr = 0.01;
  std::map<int, double> lr_steps{{15, 0.001}};  // epoch (0-based) -> lr from then on
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::uint64_t seed = 1;
  DisplacementGradient dmu_mode = DisplacementGradient::kAnalytic;
  bool decay_on_displacements = false;
  double displacement_lr_mult = 1.0;
  bool mirror = false;
  int checkpoint_every = 5;

  double lr_at(int epoch) const;
  void validate() const;
};

struct DataConfig {
  int train_limit = 0;  // 0 = all records
  int test_limit = 0;
};

struct RunSettings {
  NetworkSpec net;
  TrainConfig train;
  DataConfig data;

  // Builds from a config; unknown keys and malformed values are errors.
  // Missing keys take defaults (missing net.* keys give the CIFAR DAU net).
  static RunSettings from_config(const Config& cfg);
  // Every key, fully resolved.
  Config to_config() const;
};

}  // namespace dau
