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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dau/classic_layers.hpp"
#include "dau/config.hpp"
#include "dau/dau_layer.hpp"

namespace dau {

enum class ParamClass { kWeight, kDisplacement, kBias, kNormScale, kNormShift };

// A trainable array and its gradient buffer.
struct ParamSlot {
  std::string name;
  std::span<float> value;
  std::span<float> grad;
  ParamClass cls = ParamClass::kWeight;
};

// Any persistent array (parameters, running statistics, masks, scalars).
struct NamedArray {
  using Data = std::variant<std::span<float>, std::span<double>, std::span<std::uint8_t>>;
  std::string name;
  Data data;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string_view type() const = 0;
  // Caches whatever the following backward() call needs.
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  // Overwrites the parameter gradients and returns dL/dx.
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual Dims output_dims(const Dims& in) const = 0;
  virtual std::vector<ParamSlot> params() { return {}; }
  virtual std::vector<NamedArray> arrays() { return {}; }
  // Called after parameters were overwritten (checkpoint load, optimizer step).
  virtual void refresh() {}
};

class DauConvLayer final : public Layer {
 public:
  DauConvLayer(std::string name, DauLayerParams params);

  std::string_view type() const override { return "dau"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  Dims output_dims(const Dims& in) const override;
  std::vector<ParamSlot> params() override;
  std::vector<NamedArray> arrays() override;
  void refresh() override;

  const DauLayerParams& parameters() const noexcept { return params_; }
  DauLayerParams& mutable_parameters() noexcept { return params_; }
  const GaussianKernelBank& bank() const noexcept { return bank_; }
  void set_displacement_gradient(DisplacementGradient mode) noexcept { mode_ = mode; }

 private:
  std::string name_;
  DauLayerParams params_;
  GaussianKernelBank bank_;
  DauCache cache_;
  DisplacementGradient mode_ = DisplacementGradient::kAnalytic;
  std::vector<double> scalars_;  // sigma, max displacement (persisted as f64)
  std::vector<float> dw_, dmu_, dbias_;
};

class ConvLayer final : public Layer {
 public:
  ConvLayer(std::string name, ConvParams params);

  std::string_view type() const override { return "conv"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  Dims output_dims(const Dims& in) const override { return params_.output_dims(in); }
  std::vector<ParamSlot> params() override;
  std::vector<NamedArray> arrays() override;

  const ConvParams& parameters() const noexcept { return params_; }

 private:
  std::string name_;
  ConvParams params_;
  Tensor input_;
  std::vector<float> dw_, dbias_;
};

class BatchNormLayer final : public Layer {
 public:
  BatchNormLayer(std::string name, int channels);

  std::string_view type() const override { return "bn"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  Dims output_dims(const Dims& in) const override { return in; }
  std::vector<ParamSlot> params() override;
  std::vector<NamedArray> arrays() override;

 private:
  std::string name_;
  BatchNormState state_;
  BasicBatchNormCache<float> cache_;
  std::vector<float> dscale_, dshift_;
};

class ReluLayer final : public Layer {
 public:
  std::string_view type() const override { return "relu"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  Dims output_dims(const Dims& in) const override { return in; }

 private:
  Tensor input_;
};

class MaxPoolLayer final : public Layer {
 public:
  std::string_view type() const override { return "maxpool"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  Dims output_dims(const Dims& in) const override { return maxpool2_output_dims(in); }

 private:
  PoolCache cache_;
};

class FcLayer final : public Layer {
 public:
  FcLayer(std::string name, FcParams params);

  std::string_view type() const override { return "fc"; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  Dims output_dims(const Dims& in) const override { return {in.n, params_.outputs, 1, 1}; }
  std::vector<ParamSlot> params() override;
  std::vector<NamedArray> arrays() override;

  const FcParams& parameters() const noexcept { return params_; }

 private:
  std::string name_;
  FcParams params_;
  Tensor input_;
  std::vector<float> dw_, dbias_;
};

// Layer stack built from a NetworkSpec. Blocks are numbered from 1 in spec
// order; arrays are named "layer<block>.<field>".
class Network {
 public:
  static Network build(const NetworkSpec& spec, std::uint64_t seed);

  Network() = default;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Deep copy: same spec, every persistent array copied.
  Network clone() const;

  const NetworkSpec& spec() const noexcept { return spec_; }
  Dims input_dims(int batch) const {
    return {batch, spec_.in_channels, spec_.in_height, spec_.in_width};
  }

  Tensor forward(const Tensor& x, bool training);
  void backward(const Tensor& dlogits);

  std::vector<ParamSlot> params();
  std::vector<NamedArray> arrays();
  void refresh();

  void set_displacement_gradient(DisplacementGradient mode);

  int block_count() const noexcept { return static_cast<int>(spec_.blocks.size()); }
  // nullptr when the block is not a DAU block. Blocks are 1-based.
  DauConvLayer* dau_block(int block);
  const DauConvLayer* dau_block(int block) const;
  std::vector<int> dau_block_ids() const;

  const std::vector<std::unique_ptr<Layer>>& layers() const noexcept { return layers_; }

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Layer*> block_layer_;  // primary layer of each block
};

}  // namespace dau
