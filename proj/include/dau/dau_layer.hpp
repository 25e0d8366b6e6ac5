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
#include <optional>
#include <utility>
#include <vector>

#include "dau/gaussian_bank.hpp"
#include "dau/rng.hpp"
#include "dau/tensor.hpp"

namespace dau {

// Parameters of a displaced-aggregation-unit convolution. Each (feature f,
// channel s) filter is a mixture of K Gaussians sharing sigma:
//   W_fs = sum_k w[f][s][k] * G(mu[f][s][k]; sigma).
// mu is stored as interleaved (x, y) pairs in pixels.
template <typename T>
struct BasicDauParams {
  int features = 0;
  int channels = 0;
  int units = 0;
  std::vector<T> w;
  std::vector<T> mu;
  std::vector<T> bias;
  // Pruned units have active == 0 and w == 0; they are skipped everywhere.
  std::vector<std::uint8_t> active;
  double sigma = 0.5;
  double max_displacement = 4.0;

  static BasicDauParams zeros(int features, int channels, int units, double sigma,
                              double max_displacement);

  std::size_t unit_count() const noexcept {
    return static_cast<std::size_t>(features) * channels * units;
  }
  std::size_t index(int f, int s, int k) const noexcept {
    return (static_cast<std::size_t>(f) * channels + s) * units + k;
  }
  T& mu_x(std::size_t u) noexcept { return mu[2 * u]; }
  T& mu_y(std::size_t u) noexcept { return mu[2 * u + 1]; }
  T mu_x(std::size_t u) const noexcept { return mu[2 * u]; }
  T mu_y(std::size_t u) const noexcept { return mu[2 * u + 1]; }

  // Projects every displacement component onto [-max_displacement, max_displacement].
  void clamp_displacements();
  // Throws on inconsistent array sizes or non-finite values.
  void validate() const;

  template <typename U>
  BasicDauParams<U> cast() const {
    BasicDauParams<U> p;
    p.features = features;
    p.channels = channels;
    p.units = units;
    p.w.assign(w.begin(), w.end());
    p.mu.assign(mu.begin(), mu.end());
    p.bias.assign(bias.begin(), bias.end());
    p.active = active;
    p.sigma = sigma;
    p.max_displacement = max_displacement;
    return p;
  }
};

using DauLayerParams = BasicDauParams<float>;

template <typename T>
struct BasicDauGradients {
  std::vector<T> dw;
  std::vector<T> dmu;
  std::vector<T> dbias;
  BasicTensor<T> dinput;
};

using DauGradients = BasicDauGradients<float>;

// Forward state kept for the backward pass. The derivative-blurred maps are
// only materialized by the first backward call that needs them.
template <typename T>
struct BasicDauCache {
  BasicTensor<T> input;
  BasicTensor<T> blurred;
  std::optional<BasicTensor<T>> dblur_x;
  std::optional<BasicTensor<T>> dblur_y;
};

using DauCache = BasicDauCache<float>;

// Sampling at a continuous offset mu reads the four pixels base + (i, j),
// i along x and j along y, with weights a[i][j].
struct BilinearTaps {
  int base_x = 0;
  int base_y = 0;
  double fx = 0.0;
  double fy = 0.0;
  double a[2][2] = {{0, 0}, {0, 0}};
};

BilinearTaps bilinear_weights(double mu_x, double mu_y);

enum class DisplacementGradient {
  kInterp,    // exact derivative of the bilinear-sampled forward pass
  kAnalytic,  // derivative of the continuous Gaussian model (X * dG/dmu)
};

// Pre-activation output. Output (y, x) gathers the blurred input at
// (y + mu_y, x + mu_x); samples outside the plane read zero.
template <typename T>
BasicTensor<T> dau_forward(const BasicTensor<T>& x, const BasicDauParams<T>& p,
                           const GaussianKernelBank& bank, BasicDauCache<T>* cache = nullptr);

// Reference path: materializes each W_fs as a dense kernel (bilinear splat of
// the units convolved with g) and applies plain zero-padded correlation.
template <typename T>
BasicTensor<T> dau_forward_oracle(const BasicTensor<T>& x, const BasicDauParams<T>& p,
                                  const GaussianKernelBank& bank);

template <typename T>
BasicDauGradients<T> dau_backward(const BasicTensor<T>& dldy, BasicDauCache<T>& cache,
                                  const BasicDauParams<T>& p, const GaussianKernelBank& bank,
                                  DisplacementGradient mode);

// Multiplies every displacement and the displacement bound by `factor`,
// e.g. 2 when the layer's input resolution doubles.
DauLayerParams scale_displacements(const DauLayerParams& p, double factor);

// Initial unit positions for K units per filter (centered grid).
std::vector<std::pair<double, double>> initial_displacement_grid(int units);

// Grid displacements, Xavier-uniform w with fan-in S*K, zero bias.
void initialize_dau_params(DauLayerParams& p, Rng& rng);

// Margin (pixels from each border) beyond which every bilinear tap of every
// active unit stays inside the plane; fast and oracle paths agree exactly there.
template <typename T>
int dau_exact_margin(const BasicDauParams<T>& p);

}  // namespace dau
