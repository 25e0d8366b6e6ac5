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

#include "dau/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace dau {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && ptr == v.data() + v.size(), ErrorCode::kInvalidArgument,
          "config key '" + key + "': expected integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && ptr == v.data() + v.size(), ErrorCode::kInvalidArgument,
          "config key '" + key + "': expected unsigned integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(out)) return out;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument, "config key '" + key + "': expected number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorCode::kInvalidArgument, "config key '" + key + "': expected boolean, got '" + v + "'");
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            fmt::format("{}:{}: expected key=value, got '{}'", origin, lineno, t));
    const std::string key = trim(std::string_view(t).substr(0, eq));
    require(!key.empty(), ErrorCode::kInvalidArgument,
            fmt::format("{}:{}: empty key", origin, lineno));
    cfg.entries_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string_view::npos && eq > 0, ErrorCode::kInvalidArgument,
          "override must be key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

const char* block_kind_name(BlockKind kind) noexcept {
  switch (kind) {
    case BlockKind::kDau: return "dau";
    case BlockKind::kConv: return "conv";
    case BlockKind::kFc: return "fc";
  }
  return "?";
}

void NetworkSpec::validate() const {
  require(in_channels >= 1 && in_height >= 1 && in_width >= 1, ErrorCode::kInvalidArgument,
          "network input dims must be >= 1");
  require(classes >= 2, ErrorCode::kInvalidArgument, "network needs >= 2 classes");
  require(!blocks.empty(), ErrorCode::kInvalidArgument, "network needs at least one layer");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const BlockSpec& b = blocks[i];
    const std::string id = "layer" + std::to_string(i + 1);
    require(b.features >= 1, ErrorCode::kInvalidArgument, id + ": features must be >= 1");
    if (b.kind == BlockKind::kFc) {
      require(i + 1 == blocks.size(), ErrorCode::kInvalidArgument,
              id + ": the fully connected head must be the last layer");
      require(b.features == classes, ErrorCode::kInvalidArgument,
              id + ": head features must equal net.classes");
    }
    if (b.kind == BlockKind::kDau) {
      require(b.units >= 1, ErrorCode::kInvalidArgument, id + ": units must be >= 1");
      require(b.sigma > 0, ErrorCode::kInvalidArgument, id + ": sigma must be > 0");
      require(b.max_disp > 0, ErrorCode::kInvalidArgument, id + ": max_disp must be > 0");
    }
    if (b.kind == BlockKind::kConv) {
      require(b.kernel >= 1 && b.kernel % 2 == 1, ErrorCode::kInvalidArgument,
              id + ": kernel must be odd and >= 1");
    }
  }
  require(blocks.back().kind == BlockKind::kFc, ErrorCode::kInvalidArgument,
          "network must end with exactly one fully connected loss head");
}

NetworkSpec NetworkSpec::cifar_dau(int units, double sigma, double max_disp) {
  NetworkSpec s;
  auto dau_block = [&](int features, int k) {
    BlockSpec b;
    b.kind = BlockKind::kDau;
    b.features = features;
    b.units = k;
    b.sigma = sigma;
    b.max_disp = max_disp;
    b.pool = true;
    return b;
  };
  s.blocks = {dau_block(32, 4), dau_block(32, units), dau_block(64, units)};
  BlockSpec head;
  head.kind = BlockKind::kFc;
  head.features = s.classes;
  s.blocks.push_back(head);
  return s;
}

NetworkSpec NetworkSpec::cifar_conv() {
  NetworkSpec s = cifar_dau();
  const int kernels[] = {5, 3, 3};
  for (int i = 0; i < 3; ++i) {
    s.blocks[static_cast<std::size_t>(i)].kind = BlockKind::kConv;
    s.blocks[static_cast<std::size_t>(i)].kernel = kernels[i];
  }
  return s;
}

double TrainConfig::lr_at(int epoch) const {
  double lr = base_lr;
  for (const auto& [start, value] : lr_steps) {
    if (epoch >= start) lr = value;
  }
  return lr;
}

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "train.batch_size must be >= 1");
  require(epochs >= 0, ErrorCode::kInvalidArgument, "train.epochs must be >= 0");
  require(base_lr > 0, ErrorCode::kInvalidArgument, "train.lr must be > 0");
  require(momentum >= 0 && momentum < 1, ErrorCode::kInvalidArgument,
          "train.momentum must be in [0, 1)");
  require(weight_decay >= 0, ErrorCode::kInvalidArgument, "train.weight_decay must be >= 0");
  require(displacement_lr_mult >= 0, ErrorCode::kInvalidArgument,
          "train.mu_lr_mult must be >= 0");
  require(checkpoint_every >= 0, ErrorCode::kInvalidArgument,
          "train.checkpoint_every must be >= 0");
  for (const auto& [e, lr] : lr_steps) {
    require(e >= 0 && lr >= 0, ErrorCode::kInvalidArgument, "train.lr_steps entries must be >= 0");
  }
}

namespace {

std::map<int, double> parse_lr_steps(const std::string& key, const std::string& v) {
  std::map<int, double> out;
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    require(colon != std::string::npos, ErrorCode::kInvalidArgument,
            "config key '" + key + "': expected epoch:lr list, got '" + v + "'");
    out[parse_int(key, trim(item.substr(0, colon)))] = parse_double(key, trim(item.substr(colon + 1)));
  }
  return out;
}

void parse_input_dims(NetworkSpec& s, const std::string& v) {
  int c = 0, h = 0, w = 0;
  char x1 = 0, x2 = 0;
  std::istringstream in(v);
  in >> c >> x1 >> h >> x2 >> w;
  require(!in.fail() && x1 == 'x' && x2 == 'x' && in.peek() == EOF, ErrorCode::kInvalidArgument,
          "config key 'net.input': expected CxHxW, got '" + v + "'");
  s.in_channels = c;
  s.in_height = h;
  s.in_width = w;
}

}  // namespace

RunSettings RunSettings::from_config(const Config& cfg) {
  RunSettings rs;
  std::set<std::string> used;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto v = cfg.get(key);
    if (v) used.insert(key);
    return v;
  };

  // Layers are net.layer1 .. net.layerN, contiguous.
  int max_layer = 0;
  for (const auto& [k, v] : cfg.entries()) {
    if (k.rfind("net.layer", 0) != 0) continue;
    const auto dot = k.find('.', 9);
    require(dot != std::string::npos, ErrorCode::kInvalidArgument, "unknown config key '" + k + "'");
    const int idx = parse_int(k, k.substr(9, dot - 9));
    require(idx >= 1 && idx <= 64, ErrorCode::kInvalidArgument,
            "config key '" + k + "': layer index must be in [1, 64]");
    max_layer = std::max(max_layer, idx);
  }
  if (max_layer == 0) {
    rs.net = NetworkSpec::cifar_dau();
  } else {
    rs.net.blocks.clear();
    for (int i = 1; i <= max_layer; ++i) {
      const std::string p = "net.layer" + std::to_string(i) + ".";
      BlockSpec b;
      const auto kind = take(p + "kind");
      require(kind.has_value(), ErrorCode::kInvalidArgument, "missing config key '" + p + "kind'");
      if (*kind == "dau") b.kind = BlockKind::kDau;
      else if (*kind == "conv") b.kind = BlockKind::kConv;
      else if (*kind == "fc") b.kind = BlockKind::kFc;
      else fail(ErrorCode::kInvalidArgument, "config key '" + p + "kind': unknown layer kind '" + *kind + "'");
      if (auto v = take(p + "features")) b.features = parse_int(p + "features", *v);
      if (auto v = take(p + "units")) b.units = parse_int(p + "units", *v);
      if (auto v = take(p + "sigma")) b.sigma = parse_double(p + "sigma", *v);
      if (auto v = take(p + "max_disp")) b.max_disp = parse_double(p + "max_disp", *v);
      if (auto v = take(p + "kernel")) b.kernel = parse_int(p + "kernel", *v);
      if (auto v = take(p + "bn")) b.batchnorm = parse_bool(p + "bn", *v);
      if (auto v = take(p + "relu")) b.relu = parse_bool(p + "relu", *v);
      if (auto v = take(p + "pool")) b.pool = parse_bool(p + "pool", *v);
      rs.net.blocks.push_back(b);
    }
  }
  if (auto v = take("net.input")) parse_input_dims(rs.net, *v);
  if (auto v = take("net.classes")) rs.net.classes = parse_int("net.classes", *v);
  if (max_layer == 0 && rs.net.classes != 10) rs.net.blocks.back().features = rs.net.classes;

  TrainConfig& t = rs.train;
  if (auto v = take("train.batch_size")) t.batch_size = parse_int("train.batch_size", *v);
  if (auto v = take("train.epochs")) t.epochs = parse_int("train.epochs", *v);
  if (auto v = take("train.lr")) t.base_lr = parse_double("train.lr", *v);
  if (auto v = take("train.lr_steps")) t.lr_steps = parse_lr_steps("train.lr_steps", *v);
  if (auto v = take("train.momentum")) t.momentum = parse_double("train.momentum", *v);
  if (auto v = take("train.weight_decay")) t.weight_decay = parse_double("train.weight_decay", *v);
  if (auto v = take("train.seed")) t.seed = parse_u64("train.seed", *v);
  if (auto v = take("train.dmu_mode")) {
    if (*v == "analytic") t.dmu_mode = DisplacementGradient::kAnalytic;
    else if (*v == "interp") t.dmu_mode = DisplacementGradient::kInterp;
    else fail(ErrorCode::kInvalidArgument, "config key 'train.dmu_mode': expected analytic|interp, got '" + *v + "'");
  }
  if (auto v = take("train.decay_on_displacements")) {
    t.decay_on_displacements = parse_bool("train.decay_on_displacements", *v);
  }
  if (auto v = take("train.mu_lr_mult")) t.displacement_lr_mult = parse_double("train.mu_lr_mult", *v);
  if (auto v = take("train.mirror")) t.mirror = parse_bool("train.mirror", *v);
  if (auto v = take("train.checkpoint_every")) {
    t.checkpoint_every = parse_int("train.checkpoint_every", *v);
  }
  if (auto v = take("data.train_limit")) rs.data.train_limit = parse_int("data.train_limit", *v);
  if (auto v = take("data.test_limit")) rs.data.test_limit = parse_int("data.test_limit", *v);

  for (const auto& [k, v] : cfg.entries()) {
    require(used.count(k) != 0, ErrorCode::kInvalidArgument, "unknown config key '" + k + "'");
  }
  require(rs.data.train_limit >= 0 && rs.data.test_limit >= 0, ErrorCode::kInvalidArgument,
          "data limits must be >= 0");
  rs.net.validate();
  rs.train.validate();
  return rs;
}

Config RunSettings::to_config() const {
  Config c;
  c.set("net.input", fmt::format("{}x{}x{}", net.in_channels, net.in_height, net.in_width));
  c.set("net.classes", std::to_string(net.classes));
  for (std::size_t i = 0; i < net.blocks.size(); ++i) {
    const BlockSpec& b = net.blocks[i];
    const std::string p = "net.layer" + std::to_string(i + 1) + ".";
    c.set(p + "kind", block_kind_name(b.kind));
    c.set(p + "features", std::to_string(b.features));
    if (b.kind == BlockKind::kDau) {
      c.set(p + "units", std::to_string(b.units));
      c.set(p + "sigma", fmt_double(b.sigma));
      c.set(p + "max_disp", fmt_double(b.max_disp));
    }
    if (b.kind == BlockKind::kConv) c.set(p + "kernel", std::to_string(b.kernel));
    if (b.kind != BlockKind::kFc) {
      c.set(p + "bn", b.batchnorm ? "1" : "0");
      c.set(p + "relu", b.relu ? "1" : "0");
      c.set(p + "pool", b.pool ? "1" : "0");
    }
  }
  c.set("train.batch_size", std::to_string(train.batch_size));
  c.set("train.epochs", std::to_string(train.epochs));
  c.set("train.lr", fmt_double(train.base_lr));
  std::string steps;
  for (const auto& [e, lr] : train.lr_steps) {
    if (!steps.empty()) steps += ",";
    steps += fmt::format("{}:{}", e, lr);
  }
  c.set("train.lr_steps", steps.empty() ? "none" : steps);
  c.set("train.momentum", fmt_double(train.momentum));
  c.set("train.weight_decay", fmt_double(train.weight_decay));
  c.set("train.seed", std::to_string(train.seed));
  c.set("train.dmu_mode", train.dmu_mode == DisplacementGradient::kAnalytic ? "analytic" : "interp");
  c.set("train.decay_on_displacements", train.decay_on_displacements ? "1" : "0");
  c.set("train.mu_lr_mult", fmt_double(train.displacement_lr_mult));
  c.set("train.mirror", train.mirror ? "1" : "0");
  c.set("train.checkpoint_every", std::to_string(train.checkpoint_every));
  c.set("data.train_limit", std::to_string(data.train_limit));
  c.set("data.test_limit", std::to_string(data.test_limit));
  return c;
}

}  // namespace dau
