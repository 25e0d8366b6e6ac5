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

#include <vector>

#include "dau/tensor.hpp"

namespace dau {

enum class Axis { kX, kY };

// Discretized zero-mean Gaussian G(sigma) on the integer grid [-R, R]^2 with
// R = max(1, ceil(3 sigma)), plus its derivatives with respect to the mean.
//
// g sums to one. dgx(u, v) = (u / sigma^2) g(u, v) is dG/dmu_x (= -dG/dx) and
// sums to zero; dgy is the same along rows. All 2-D kernels are stored
// row-major as [v + R][u + R], v indexing rows (y) and u columns (x).
class GaussianKernelBank {
 public:
  static GaussianKernelBank build(double sigma);

  double sigma() const noexcept { return sigma_; }
  int radius() const noexcept { return radius_; }
  int size() const noexcept { return 2 * radius_ + 1; }

  const std::vector<double>& g() const noexcept { return g_; }
  const std::vector<double>& dgx() const noexcept { return dgx_; }
  const std::vector<double>& dgy() const noexcept { return dgy_; }

  double g_at(int u, int v) const noexcept { return g_[index(u, v)]; }
  double dgx_at(int u, int v) const noexcept { return dgx_[index(u, v)]; }
  double dgy_at(int u, int v) const noexcept { return dgy_[index(u, v)]; }

  // 1-D factors: g = g1 (x) g1, dgx = dg1 (x) g1 along (x, y).
  const std::vector<double>& g1() const noexcept { return g1_; }
  const std::vector<double>& dg1() const noexcept { return dg1_; }

 private:
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>((v + radius_) * size() + (u + radius_));
  }

  double sigma_ = 0.0;
  int radius_ = 0;
  std::vector<double> g1_, dg1_;
  std::vector<double> g_, dgx_, dgy_;
};

// Per-channel zero-padded correlation with g; spatial dims are preserved.
template <typename T>
BasicTensor<T> blur_channels(const BasicTensor<T>& x, const GaussianKernelBank& bank);

// Same as blur_channels with dgx (Axis::kX) or dgy (Axis::kY).
template <typename T>
BasicTensor<T> blur_derivative_channels(const BasicTensor<T>& x, const GaussianKernelBank& bank,
                                        Axis axis);

}  // namespace dau
