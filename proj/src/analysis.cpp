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

#include "dau/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "json.hpp"

namespace dau {

double DisplacementRecord::distance() const { return std::hypot(mu_x, mu_y); }

double DisplacementStats::total_mass() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

std::size_t retained_count(std::size_t total, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorCode::kInvalidArgument,
          "retained fraction must be in (0, 1], got " + std::to_string(fraction));
  if (total == 0) return 0;
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 0.5));
  return std::clamp<std::size_t>(k, 1, total);
}

namespace {

const DauConvLayer& require_dau(const Network& net, int layer) {
  const DauConvLayer* d = net.dau_block(layer);
  require(d != nullptr, ErrorCode::kInvalidArgument,
          "layer " + std::to_string(layer) + " is not a DAU layer");
  return *d;
}

}  // namespace

std::vector<DisplacementRecord> ranked_units(const Network& net, int layer) {
  const DauLayerParams& p = require_dau(net, layer).parameters();
  std::vector<DisplacementRecord> recs;
  for (int f = 0; f < p.features; ++f) {
    for (int s = 0; s < p.channels; ++s) {
      for (int k = 0; k < p.units; ++k) {
        const std::size_t u = p.index(f, s, k);
        if (!p.active[u]) continue;
        recs.push_back({layer, f, s, k, p.mu_x(u), p.mu_y(u), std::fabs(static_cast<double>(p.w[u]))});
      }
    }
  }
  std::stable_sort(recs.begin(), recs.end(),
                   [](const auto& a, const auto& b) { return a.abs_w > b.abs_w; });
  return recs;
}

DisplacementStats distance_histogram(const Network& net, int layer, double retained_fraction,
                                     double bin_width) {
  require(bin_width > 0.0 && std::isfinite(bin_width), ErrorCode::kInvalidArgument,
          "histogram bin width must be > 0");
  const DauLayerParams& p = require_dau(net, layer).parameters();
  auto recs = ranked_units(net, layer);
  recs.resize(retained_count(recs.size(), retained_fraction));

  DisplacementStats st;
  st.layer = layer;
  st.retained_fraction = retained_fraction;
  st.bin_width = bin_width;
  const double reach = p.max_displacement * std::sqrt(2.0);
  const auto bins = static_cast<std::size_t>(std::floor(reach / bin_width)) + 1;
  st.mass.assign(bins, 0.0);
  for (std::size_t i = 0; i <= bins; ++i) st.bin_edges.push_back(static_cast<double>(i) * bin_width);
  for (const auto& r : recs) {
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::floor(r.distance() / bin_width)));
    st.mass[bin] += r.abs_w;
  }
  st.records = std::move(recs);
  return st;
}

ScatterExport scatter_export(const Network& net, int layer, double retained_fraction) {
  const DauLayerParams& p = require_dau(net, layer).parameters();
  ScatterExport out;
  out.rows = ranked_units(net, layer);
  out.rows.resize(retained_count(out.rows.size(), retained_fraction));
  for (const auto& [x, y] : initial_displacement_grid(p.units)) {
    const double lim = p.max_displacement;
    out.init_points.emplace_back(std::clamp(x, -lim, lim), std::clamp(y, -lim, lim));
  }
  return out;
}

std::string histogram_csv(const DisplacementStats& stats) {
  std::string out = "bin_lo,bin_hi,mass\n";
  for (std::size_t i = 0; i < stats.mass.size(); ++i) {
    out += fmt::format("{:.6g},{:.6g},{:.9g}\n", stats.bin_edges[i], stats.bin_edges[i + 1], stats.mass[i]);
  }
  return out;
}

std::string scatter_csv(const ScatterExport& scatter) {
  std::string out = "layer,feature,channel,unit,mu_x,mu_y,abs_w\n";
  for (const auto& r : scatter.rows) {
    out += fmt::format("{},{},{},{},{:.9g},{:.9g},{:.9g}\n", r.layer, r.feature, r.channel, r.unit,
                       r.mu_x, r.mu_y, r.abs_w);
  }
  return out;
}

std::string init_points_csv(const ScatterExport& scatter) {
  std::string out = "mu_x,mu_y\n";
  for (const auto& [x, y] : scatter.init_points) out += fmt::format("{:.9g},{:.9g}\n", x, y);
  return out;
}

const char* threshold_policy_name(ThresholdPolicy p) noexcept {
  switch (p) {
    case ThresholdPolicy::kPerLayerMax: return "layer-max";
    case ThresholdPolicy::kGlobalMax: return "global-max";
    case ThresholdPolicy::kPerFilterMax: return "filter-max";
  }
  return "?";
}

ThresholdPolicy parse_threshold_policy(const std::string& name) {
  if (name == "layer-max") return ThresholdPolicy::kPerLayerMax;
  if (name == "global-max") return ThresholdPolicy::kGlobalMax;
  if (name == "filter-max") return ThresholdPolicy::kPerFilterMax;
  fail(ErrorCode::kInvalidArgument,
       "unknown threshold policy '" + name + "' (expected layer-max|global-max|filter-max)");
}

double LayerPruneStats::removed_pct() const {
  return units_before == 0 ? 0.0 : 100.0 * static_cast<double>(removed) / static_cast<double>(units_before);
}

double PruneReport::removed_pct() const {
  return units_before == 0 ? 0.0 : 100.0 * static_cast<double>(removed) / static_cast<double>(units_before);
}

std::string PruneReport::to_text() const {
  std::string out = fmt::format("relative threshold {} ({})\n", tau, threshold_policy_name(policy));
  out += fmt::format("{:>6} {:>12} {:>10} {:>10} {:>12}\n", "layer", "units", "removed", "removed%", "max|w|");
  for (const auto& l : layers) {
    out += fmt::format("{:>6} {:>12} {:>10} {:>10.2f} {:>12.6g}\n", l.layer, l.units_before, l.removed,
                       l.removed_pct(), l.reference);
  }
  out += fmt::format("{:>6} {:>12} {:>10} {:>10.2f}\n", "all", units_before, removed, removed_pct());
  return out;
}

std::string PruneReport::to_json() const {
  nlohmann::ordered_json j;
  j["tau"] = tau;
  j["policy"] = threshold_policy_name(policy);
  j["units_before"] = units_before;
  j["removed"] = removed;
  j["removed_pct"] = removed_pct();
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : layers) {
    j["layers"].push_back({{"layer", l.layer},
                           {"units_before", l.units_before},
                           {"removed", l.removed},
                           {"removed_pct", l.removed_pct()},
                           {"reference_abs_w", l.reference}});
  }
  return j.dump(2) + "\n";
}

PruneReport prune_by_relative_threshold(Network& net, double tau, ThresholdPolicy policy) {
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::kInvalidArgument,
          "relative threshold must be >= 0");
  PruneReport rep;
  rep.tau = tau;
  rep.policy = policy;

  const auto ids = net.dau_block_ids();
  double global_max = 0.0;
  std::vector<double> layer_max;
  for (int b : ids) {
    const DauLayerParams& p = net.dau_block(b)->parameters();
    double m = 0.0;
    for (std::size_t u = 0; u < p.unit_count(); ++u) {
      if (p.active[u]) m = std::max(m, std::fabs(static_cast<double>(p.w[u])));
    }
    layer_max.push_back(m);
    global_max = std::max(global_max, m);
  }

  for (std::size_t li = 0; li < ids.size(); ++li) {
    DauLayerParams& p = net.dau_block(ids[li])->mutable_parameters();
    LayerPruneStats ls;
    ls.layer = ids[li];
    ls.reference = layer_max[li];
    for (int f = 0; f < p.features; ++f) {
      for (int s = 0; s < p.channels; ++s) {
        double filter_max = 0.0;
        for (int k = 0; k < p.units; ++k) {
          const std::size_t u = p.index(f, s, k);
          if (p.active[u]) filter_max = std::max(filter_max, std::fabs(static_cast<double>(p.w[u])));
        }
        double ref = layer_max[li];
        if (policy == ThresholdPolicy::kGlobalMax) ref = global_max;
        if (policy == ThresholdPolicy::kPerFilterMax) ref = filter_max;
        const double cut = tau * ref;
        for (int k = 0; k < p.units; ++k) {
          const std::size_t u = p.index(f, s, k);
          if (!p.active[u]) continue;
          ++ls.units_before;
          if (std::fabs(static_cast<double>(p.w[u])) < cut) {
            p.active[u] = 0;
            p.w[u] = 0.0f;
            ++ls.removed;
          }
        }
      }
    }
    rep.units_before += ls.units_before;
    rep.removed += ls.removed;
    rep.layers.push_back(ls);
  }
  return rep;
}

std::pair<Model, PruneReport> prune_model(const Model& model, double tau, ThresholdPolicy policy) {
  Model out = model.clone();
  PruneReport rep = prune_by_relative_threshold(out.net, tau, policy);
  auto slots = out.net.params();
  for (int b : out.net.dau_block_ids()) {
    const DauLayerParams& p = out.net.dau_block(b)->parameters();
    const std::string prefix = "layer" + std::to_string(b);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].name == prefix + ".w") {
        for (std::size_t u = 0; u < p.unit_count(); ++u) {
          if (!p.active[u]) out.velocity[i][u] = 0.0f;
        }
      } else if (slots[i].name == prefix + ".mu") {
        for (std::size_t u = 0; u < p.unit_count(); ++u) {
          if (!p.active[u]) out.velocity[i][2 * u] = out.velocity[i][2 * u + 1] = 0.0f;
        }
      }
    }
  }
  return {std::move(out), rep};
}

ParameterReport parameter_report(const Network& net) {
  ParameterReport rep;
  const NetworkSpec& spec = net.spec();
  int block = 0;
  for (const auto& layer : net.layers()) {
    LayerParamRow row;
    if (const auto* d = dynamic_cast<const DauConvLayer*>(layer.get())) {
      const DauLayerParams& p = d->parameters();
      ++block;
      row.layer = block;
      row.kind = "dau";
      row.features = p.features;
      row.channels = p.channels;
      row.filters = static_cast<std::size_t>(p.features) * p.channels;
      for (auto a : p.active) row.units += a ? 1 : 0;
      row.params = 3 * row.units + static_cast<std::size_t>(p.features);
      row.params_per_filter = 3.0 * static_cast<double>(row.units) / static_cast<double>(row.filters);
      rep.conv_params += row.params;
    } else if (const auto* c = dynamic_cast<const ConvLayer*>(layer.get())) {
      const ConvParams& p = c->parameters();
      ++block;
      row.layer = block;
      row.kind = "conv";
      row.features = p.features;
      row.channels = p.channels;
      row.filters = static_cast<std::size_t>(p.features) * p.channels;
      row.units = static_cast<std::size_t>(p.kernel_h) * p.kernel_w * row.filters;
      row.params = row.units + static_cast<std::size_t>(p.features);
      row.params_per_filter = static_cast<double>(p.kernel_h * p.kernel_w);
      rep.conv_params += row.params;
    } else if (const auto* f = dynamic_cast<const FcLayer*>(layer.get())) {
      const FcParams& p = f->parameters();
      ++block;
      row.layer = block;
      row.kind = "fc";
      row.features = p.outputs;
      row.channels = p.inputs;
      row.filters = static_cast<std::size_t>(p.outputs);
      row.units = p.weights.size();
      row.params = p.weights.size() + p.bias.size();
      row.params_per_filter = static_cast<double>(p.inputs);
    } else if (layer->type() == "bn") {
      row.layer = block;
      row.kind = "bn";
      const int ch = block >= 1 ? spec.blocks[static_cast<std::size_t>(block - 1)].features : 0;
      row.features = ch;
      row.channels = ch;
      row.params = 2 * static_cast<std::size_t>(ch);
    } else {
      continue;
    }
    rep.total_params += row.params;
    rep.rows.push_back(row);
  }
  return rep;
}

std::string ParameterReport::to_text() const {
  std::string out = fmt::format("{:>6} {:>5} {:>9} {:>9} {:>10} {:>12} {:>12} {:>12}\n", "layer", "kind",
                                "features", "channels", "filters", "units", "params", "per-filter");
  for (const auto& r : rows) {
    out += fmt::format("{:>6} {:>5} {:>9} {:>9} {:>10} {:>12} {:>12} {:>12.6g}\n", r.layer, r.kind,
                       r.features, r.channels, r.filters, r.units, r.params, r.params_per_filter);
  }
  out += fmt::format("conv-layer parameters: {}\ntotal parameters: {}\n", conv_params, total_params);
  return out;
}

std::string ParameterReport::to_json() const {
  nlohmann::ordered_json j;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["layers"].push_back({{"layer", r.layer},
                           {"kind", r.kind},
                           {"features", r.features},
                           {"channels", r.channels},
                           {"filters", r.filters},
                           {"units", r.units},
                           {"params", r.params},
                           {"params_per_filter", r.params_per_filter}});
  }
  j["conv_params"] = conv_params;
  j["total_params"] = total_params;
  return j.dump(2) + "\n";
}

}  // namespace dau
