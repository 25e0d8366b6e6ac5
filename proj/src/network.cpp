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

#include "dau/network.hpp"

#include <algorithm>
#include <cstring>

namespace dau {

// ---- DauConvLayer -----------------------------------------------------------

DauConvLayer::DauConvLayer(std::string name, DauLayerParams params)
    : name_(std::move(name)),
      params_(std::move(params)),
      bank_(GaussianKernelBank::build(params_.sigma)) {
  params_.validate();
}

Tensor DauConvLayer::forward(const Tensor& x, bool training) {
  return dau_forward(x, params_, bank_, training ? &cache_ : nullptr);
}

Tensor DauConvLayer::backward(const Tensor& dy) {
  DauGradients g = dau_backward(dy, cache_, params_, bank_, mode_);
  dw_ = std::move(g.dw);
  dmu_ = std::move(g.dmu);
  dbias_ = std::move(g.dbias);
  return std::move(g.dinput);
}

Dims DauConvLayer::output_dims(const Dims& in) const {
  require(in.c == params_.channels, ErrorCode::kShapeMismatch,
          name_ + ": input has " + std::to_string(in.c) + " channels, expected " +
              std::to_string(params_.channels));
  return {in.n, params_.features, in.h, in.w};
}

std::vector<ParamSlot> DauConvLayer::params() {
  dw_.resize(params_.w.size());
  dmu_.resize(params_.mu.size());
  dbias_.resize(params_.bias.size());
  return {{name_ + ".w", params_.w, dw_, ParamClass::kWeight},
          {name_ + ".mu", params_.mu, dmu_, ParamClass::kDisplacement},
          {name_ + ".bias", params_.bias, dbias_, ParamClass::kBias}};
}

std::vector<NamedArray> DauConvLayer::arrays() {
  scalars_ = {params_.sigma, params_.max_displacement};
  return {{name_ + ".w", std::span<float>(params_.w)},
          {name_ + ".mu", std::span<float>(params_.mu)},
          {name_ + ".bias", std::span<float>(params_.bias)},
          {name_ + ".active", std::span<std::uint8_t>(params_.active)},
          {name_ + ".sigma_maxdisp", std::span<double>(scalars_)}};
}

void DauConvLayer::refresh() {
  // Scalars written through arrays() since the last refresh take effect here.
  if (scalars_.size() == 2) {
    params_.sigma = scalars_[0];
    params_.max_displacement = scalars_[1];
    scalars_.clear();
  }
  if (bank_.sigma() != params_.sigma) bank_ = GaussianKernelBank::build(params_.sigma);
  params_.clamp_displacements();
  params_.validate();
}

// ---- ConvLayer --------------------------------------------------------------

ConvLayer::ConvLayer(std::string name, ConvParams params)
    : name_(std::move(name)), params_(std::move(params)) {
  params_.validate();
}

Tensor ConvLayer::forward(const Tensor& x, bool training) {
  if (training) input_ = x;
  return conv_forward(x, params_);
}

Tensor ConvLayer::backward(const Tensor& dy) {
  auto g = conv_backward(dy, input_, params_);
  dw_ = std::move(g.dweights);
  dbias_ = std::move(g.dbias);
  return std::move(g.dinput);
}

std::vector<ParamSlot> ConvLayer::params() {
  dw_.resize(params_.weights.size());
  dbias_.resize(params_.bias.size());
  return {{name_ + ".w", params_.weights, dw_, ParamClass::kWeight},
          {name_ + ".bias", params_.bias, dbias_, ParamClass::kBias}};
}

std::vector<NamedArray> ConvLayer::arrays() {
  return {{name_ + ".w", std::span<float>(params_.weights)},
          {name_ + ".bias", std::span<float>(params_.bias)}};
}

// ---- BatchNormLayer ---------------------------------------------------------

BatchNormLayer::BatchNormLayer(std::string name, int channels)
    : name_(std::move(name)), state_(BatchNormState::identity(channels)) {}

Tensor BatchNormLayer::forward(const Tensor& x, bool training) {
  return batchnorm_forward(x, state_, training, training ? &cache_ : nullptr);
}

Tensor BatchNormLayer::backward(const Tensor& dy) {
  auto g = batchnorm_backward(dy, cache_, state_);
  dscale_ = std::move(g.dscale);
  dshift_ = std::move(g.dshift);
  return std::move(g.dinput);
}

std::vector<ParamSlot> BatchNormLayer::params() {
  dscale_.resize(state_.scale.size());
  dshift_.resize(state_.shift.size());
  return {{name_ + ".scale", state_.scale, dscale_, ParamClass::kNormScale},
          {name_ + ".shift", state_.shift, dshift_, ParamClass::kNormShift}};
}

std::vector<NamedArray> BatchNormLayer::arrays() {
  return {{name_ + ".scale", std::span<float>(state_.scale)},
          {name_ + ".shift", std::span<float>(state_.shift)},
          {name_ + ".running_mean", std::span<float>(state_.running_mean)},
          {name_ + ".running_var", std::span<float>(state_.running_var)}};
}

// ---- ReLU / pooling ---------------------------------------------------------

Tensor ReluLayer::forward(const Tensor& x, bool training) {
  if (training) input_ = x;
  return elementwise_relu(x);
}

Tensor ReluLayer::backward(const Tensor& dy) { return relu_backward(dy, input_); }

Tensor MaxPoolLayer::forward(const Tensor& x, bool training) {
  return maxpool2_forward(x, training ? &cache_ : nullptr);
}

Tensor MaxPoolLayer::backward(const Tensor& dy) { return maxpool2_backward(dy, cache_); }

// ---- FcLayer ----------------------------------------------------------------

FcLayer::FcLayer(std::string name, FcParams params)
    : name_(std::move(name)), params_(std::move(params)) {
  params_.validate();
}

Tensor FcLayer::forward(const Tensor& x, bool training) {
  if (training) input_ = x;
  return fc_forward(x, params_);
}

Tensor FcLayer::backward(const Tensor& dy) {
  auto g = fc_backward(dy, input_, params_);
  dw_ = std::move(g.dweights);
  dbias_ = std::move(g.dbias);
  return std::move(g.dinput);
}

std::vector<ParamSlot> FcLayer::params() {
  dw_.resize(params_.weights.size());
  dbias_.resize(params_.bias.size());
  return {{name_ + ".w", params_.weights, dw_, ParamClass::kWeight},
          {name_ + ".bias", params_.bias, dbias_, ParamClass::kBias}};
}

std::vector<NamedArray> FcLayer::arrays() {
  return {{name_ + ".w", std::span<float>(params_.weights)},
          {name_ + ".bias", std::span<float>(params_.bias)}};
}

// ---- Network ----------------------------------------------------------------

Network Network::build(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec_ = spec;
  Rng rng(seed);
  Dims d{1, spec.in_channels, spec.in_height, spec.in_width};
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const BlockSpec& b = spec.blocks[i];
    const std::string name = "layer" + std::to_string(i + 1);
    std::unique_ptr<Layer> primary;
    switch (b.kind) {
      case BlockKind::kDau: {
        auto p = DauLayerParams::zeros(b.features, d.c, b.units, b.sigma, b.max_disp);
        initialize_dau_params(p, rng);
        primary = std::make_unique<DauConvLayer>(name, std::move(p));
        break;
      }
      case BlockKind::kConv: {
        auto p = ConvParams::zeros(b.features, d.c, b.kernel, b.kernel, b.kernel / 2, 1);
        initialize_conv_params(p, rng);
        primary = std::make_unique<ConvLayer>(name, std::move(p));
        break;
      }
      case BlockKind::kFc: {
        const auto in = static_cast<std::size_t>(d.c) * d.plane();
        require(in <= 1u << 28, ErrorCode::kInvalidArgument, name + ": too many inputs");
        auto p = FcParams::zeros(static_cast<int>(in), b.features);
        initialize_fc_params(p, rng);
        primary = std::make_unique<FcLayer>(name, std::move(p));
        break;
      }
    }
    d = primary->output_dims(d);
    net.block_layer_.push_back(primary.get());
    net.layers_.push_back(std::move(primary));
    if (b.kind == BlockKind::kFc) continue;
    if (b.batchnorm) net.layers_.push_back(std::make_unique<BatchNormLayer>(name + ".bn", d.c));
    if (b.relu) net.layers_.push_back(std::make_unique<ReluLayer>());
    if (b.pool) {
      net.layers_.push_back(std::make_unique<MaxPoolLayer>());
      d = maxpool2_output_dims(d);
    }
  }
  return net;
}

Network Network::clone() const {
  Network copy = build(spec_, 0);
  auto& self = const_cast<Network&>(*this);
  auto src = self.arrays();
  auto dst = copy.arrays();
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::visit(
        [&](auto s) {
          auto d = std::get<decltype(s)>(dst[i].data);
          std::copy(s.begin(), s.end(), d.begin());
        },
        src[i].data);
  }
  copy.refresh();
  return copy;
}

Tensor Network::forward(const Tensor& x, bool training) {
  const Dims want = input_dims(x.dims().n);
  require(x.dims() == want, ErrorCode::kShapeMismatch,
          "network input dims " + x.dims().str() + " expected " + want.str());
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, training);
  return h;
}

void Network::backward(const Tensor& dlogits) {
  Tensor g = dlogits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<ParamSlot> Network::params() {
  std::vector<ParamSlot> out;
  for (auto& l : layers_) {
    auto p = l->params();
    out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return out;
}

std::vector<NamedArray> Network::arrays() {
  std::vector<NamedArray> out;
  for (auto& l : layers_) {
    auto a = l->arrays();
    out.insert(out.end(), std::make_move_iterator(a.begin()), std::make_move_iterator(a.end()));
  }
  return out;
}

void Network::refresh() {
  for (auto& l : layers_) l->refresh();
}

void Network::set_displacement_gradient(DisplacementGradient mode) {
  for (auto& l : layers_) {
    if (auto* d = dynamic_cast<DauConvLayer*>(l.get())) d->set_displacement_gradient(mode);
  }
}

DauConvLayer* Network::dau_block(int block) {
  if (block < 1 || block > block_count()) return nullptr;
  return dynamic_cast<DauConvLayer*>(block_layer_[static_cast<std::size_t>(block - 1)]);
}

const DauConvLayer* Network::dau_block(int block) const {
  return const_cast<Network*>(this)->dau_block(block);
}

std::vector<int> Network::dau_block_ids() const {
  std::vector<int> ids;
  for (int b = 1; b <= block_count(); ++b) {
    if (dau_block(b) != nullptr) ids.push_back(b);
  }
  return ids;
}

}  // namespace dau
