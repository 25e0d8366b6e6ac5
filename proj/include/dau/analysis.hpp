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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dau/trainer.hpp"

namespace dau {

struct DisplacementRecord {
  int layer = 0;
  int feature = 0;
  int channel = 0;
  int unit = 0;
  double mu_x = 0.0;
  double mu_y = 0.0;
  double abs_w = 0.0;

  double distance() const;
};

// |w|-weighted histogram of unit distances to the filter center.
struct DisplacementStats {
  int layer = 0;
  double retained_fraction = 1.0;
  double bin_width = 0.25;
  std::vector<double> bin_edges;  // bins + 1 edges starting at 0
  std::vector<double> mass;       // per bin
  std::vector<DisplacementRecord> records;  // retained units

  double total_mass() const;
};

// Number of units kept when retaining `fraction` of `total`: rounded to the
// nearest integer, at least one unit when total > 0.
std::size_t retained_count(std::size_t total, double fraction);

// Active units of a DAU block, sorted by |w| descending (ties: lowest index).
std::vector<DisplacementRecord> ranked_units(const Network& net, int layer);

// Keeps the largest-|w| units and bins their distances sqrt(mu_x^2 + mu_y^2)
// with bins [i*bw, (i+1)*bw) covering [0, max_disp * sqrt(2)].
// Throws kInvalidArgument for a non-DAU layer or fraction outside (0, 1].
DisplacementStats distance_histogram(const Network& net, int layer, double retained_fraction,
                                     double bin_width = 0.25);

struct ScatterExport {
  std::vector<DisplacementRecord> rows;
  std::vector<std::pair<double, double>> init_points;
};

ScatterExport scatter_export(const Network& net, int layer, double retained_fraction);

std::string histogram_csv(const DisplacementStats& stats);
std::string scatter_csv(const ScatterExport& scatter);
std::string init_points_csv(const ScatterExport& scatter);

// Reference for the relative threshold: a unit is removed when
// |w| < tau * reference.
enum class ThresholdPolicy {
  kPerLayerMax,   // max |w| over the layer (default)
  kGlobalMax,     // max |w| over all DAU layers
  kPerFilterMax,  // max |w| within the unit's (feature, channel) filter
};

const char* threshold_policy_name(ThresholdPolicy p) noexcept;
ThresholdPolicy parse_threshold_policy(const std::string& name);

struct LayerPruneStats {
  int layer = 0;
  std::size_t units_before = 0;
  std::size_t removed = 0;
  double reference = 0.0;  // max |w| of the layer before pruning
  double removed_pct() const;
};

struct PruneReport {
  double tau = 0.0;
  ThresholdPolicy policy = ThresholdPolicy::kPerLayerMax;
  std::vector<LayerPruneStats> layers;
  std::size_t units_before = 0;
  std::size_t removed = 0;

  double removed_pct() const;
  std::string to_text() const;
  std::string to_json() const;
};

// Marks units inactive (w <- 0) in place. Already inactive units stay inactive.
PruneReport prune_by_relative_threshold(Network& net, double tau,
                                        ThresholdPolicy policy = ThresholdPolicy::kPerLayerMax);

// Pruned copy of a model; optimizer velocities of removed units are zeroed.
std::pair<Model, PruneReport> prune_model(const Model& model, double tau,
                                          ThresholdPolicy policy = ThresholdPolicy::kPerLayerMax);

struct LayerParamRow {
  int layer = 0;  // block id, 0 for batch-norm rows folded into their block
  std::string kind;
  int features = 0;
  int channels = 0;
  std::size_t filters = 0;          // features * channels 2-D filters
  std::size_t units = 0;            // active DAU units, or kernel taps for dense conv
  std::size_t params = 0;           // weights (3 per DAU unit) + biases
  double params_per_filter = 0.0;   // excludes biases
};

struct ParameterReport {
  std::vector<LayerParamRow> rows;
  std::size_t conv_params = 0;   // DAU + dense convolution layers
  std::size_t total_params = 0;  // everything trainable incl. batch norm and the head

  std::string to_text() const;
  std::string to_json() const;
};

ParameterReport parameter_report(const Network& net);

}  // namespace dau
