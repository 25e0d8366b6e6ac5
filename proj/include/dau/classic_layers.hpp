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
#include <vector>

#include "dau/rng.hpp"
#include "dau/tensor.hpp"

namespace dau {

// Dense convolution, implemented as correlation (no kernel flip).
// weights are [F][S][kh][kw].
template <typename T>
struct BasicConvParams {
  int features = 0;
  int channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int padding = 0;
  int stride = 1;
  std::vector<T> weights;
  std::vector<T> bias;

  static BasicConvParams zeros(int features, int channels, int kernel_h, int kernel_w,
                               int padding, int stride);
  void validate() const;
  Dims output_dims(const Dims& in) const;

  template <typename U>
  BasicConvParams<U> cast() const {
    BasicConvParams<U> p;
    p.features = features;
    p.channels = channels;
    p.kernel_h = kernel_h;
    p.kernel_w = kernel_w;
    p.padding = padding;
    p.stride = stride;
    p.weights.assign(weights.begin(), weights.end());
    p.bias.assign(bias.begin(), bias.end());
    return p;
  }
};
using ConvParams = BasicConvParams<float>;

template <typename T>
struct BasicConvGradients {
  std::vector<T> dweights;
  std::vector<T> dbias;
  BasicTensor<T> dinput;
};

template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& x, const BasicConvParams<T>& p);
template <typename T>
BasicConvGradients<T> conv_backward(const BasicTensor<T>& dldy, const BasicTensor<T>& x,
                                    const BasicConvParams<T>& p);
void initialize_conv_params(ConvParams& p, Rng& rng);

// 2x2 max pooling with stride 2. Odd extents behave as if padded with -inf on
// the right/bottom. Ties go to the lowest flat input index.
struct PoolCache {
  Dims input{};
  std::vector<std::uint32_t> argmax;
};

Dims maxpool2_output_dims(const Dims& in);
template <typename T>
BasicTensor<T> maxpool2_forward(const BasicTensor<T>& x, PoolCache* cache = nullptr);
template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& dldy, const PoolCache& cache);

template <typename T>
struct BasicBatchNormState {
  int channels = 0;
  std::vector<T> scale;
  std::vector<T> shift;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  double epsilon = 1e-5;
  double momentum = 0.1;

  static BasicBatchNormState identity(int channels);
  void validate() const;

  template <typename U>
  BasicBatchNormState<U> cast() const {
    BasicBatchNormState<U> s;
    s.channels = channels;
    s.scale.assign(scale.begin(), scale.end());
    s.shift.assign(shift.begin(), shift.end());
    s.running_mean.assign(running_mean.begin(), running_mean.end());
    s.running_var.assign(running_var.begin(), running_var.end());
    s.epsilon = epsilon;
    s.momentum = momentum;
    return s;
  }
};
using BatchNormState = BasicBatchNormState<float>;

template <typename T>
struct BasicBatchNormCache {
  BasicTensor<T> normalized;
  std::vector<double> inv_std;
  bool training = false;
};

template <typename T>
struct BasicBatchNormGradients {
  std::vector<T> dscale;
  std::vector<T> dshift;
  BasicTensor<T> dinput;
};

// Training mode normalizes with batch statistics and updates the running
// estimates; inference mode uses the running estimates.
template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, BasicBatchNormState<T>& state,
                                 bool training, BasicBatchNormCache<T>* cache = nullptr);
template <typename T>
BasicBatchNormGradients<T> batchnorm_backward(const BasicTensor<T>& dldy,
                                              const BasicBatchNormCache<T>& cache,
                                              const BasicBatchNormState<T>& state);

// Fully connected layer on the flattened (C, H, W) input. weights are [out][in].
template <typename T>
struct BasicFcParams {
  int inputs = 0;
  int outputs = 0;
  std::vector<T> weights;
  std::vector<T> bias;

  static BasicFcParams zeros(int inputs, int outputs);
  void validate() const;

  template <typename U>
  BasicFcParams<U> cast() const {
    BasicFcParams<U> p;
    p.inputs = inputs;
    p.outputs = outputs;
    p.weights.assign(weights.begin(), weights.end());
    p.bias.assign(bias.begin(), bias.end());
    return p;
  }
};
using FcParams = BasicFcParams<float>;

template <typename T>
struct BasicFcGradients {
  std::vector<T> dweights;
  std::vector<T> dbias;
  BasicTensor<T> dinput;
};

template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& x, const BasicFcParams<T>& p);
template <typename T>
BasicFcGradients<T> fc_backward(const BasicTensor<T>& dldy, const BasicTensor<T>& x,
                                const BasicFcParams<T>& p);
void initialize_fc_params(FcParams& p, Rng& rng);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& dldy, const BasicTensor<T>& x);

template <typename T>
struct XentResult {
  double loss = 0.0;
  BasicTensor<T> dlogits;
};

// Mean softmax cross-entropy over the batch; dlogits = (softmax - onehot) / N.
// logits are (N, classes, 1, 1).
template <typename T>
XentResult<T> softmax_xent(const BasicTensor<T>& logits, std::span<const int> labels);

}  // namespace dau
