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
#include <functional>
#include <string>
#include <vector>

#include "dau/config.hpp"
#include "dau/dataset.hpp"
#include "dau/network.hpp"

namespace dau {

// Network plus everything needed to continue training bit-identically.
struct Model {
  RunSettings settings;
  Network net;
  std::vector<std::vector<float>> velocity;  // one buffer per ParamSlot, slot order
  int epochs_done = 0;
  std::uint64_t iterations = 0;

  Model clone() const;
};

// Builds and initializes every parameter deterministically from
// settings.train.seed.
Model build_model(const RunSettings& settings);

// v <- momentum * v - lr * (g + decay * theta); theta <- theta + v.
// Displacements use lr * mu_lr_mult and no decay unless
// decay_on_displacements; they are clamped to the layer bound afterwards.
// Throws kNumeric on a non-finite gradient.
void sgd_step(Network& net, std::vector<std::vector<float>>& velocity, const TrainConfig& cfg,
              double lr);

struct EpochMetrics {
  int epoch = 0;  // epochs completed
  std::uint64_t iter = 0;
  double train_loss = 0.0;
  double eval_acc = 0.0;  // NaN when no evaluation split was given
  double lr = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&, const Model&)>;

// Trains from model.epochs_done up to settings.train.epochs. Each epoch uses a
// Fisher-Yates shuffle seeded by (seed, epoch), so interrupted and resumed runs
// follow the same trajectory.
std::vector<EpochMetrics> train(Model& model, const DatasetSplit& train_set,
                                const DatasetSplit* eval_set, const EpochCallback& on_epoch = {});

// Inference-mode logits for the whole split, batched.
Tensor predict_logits(Network& net, const Tensor& images, int batch_size = 256);

// Top-1 accuracy; argmax ties resolve to the lowest class index.
double evaluate(Network& net, const DatasetSplit& ds, int batch_size = 256);
double top1_accuracy(const Tensor& logits, const std::vector<int>& labels);

std::string metrics_csv(const std::vector<EpochMetrics>& log);
std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

}  // namespace dau
