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

#include "dau/gaussian_bank.hpp"

#include <cmath>
#include <numeric>

#include "dau/parallel.hpp"

namespace dau {

GaussianKernelBank GaussianKernelBank::build(double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kInvalidArgument,
          "gaussian sigma must be finite and > 0, got " + std::to_string(sigma));
  GaussianKernelBank bank;
  bank.sigma_ = sigma;
  bank.radius_ = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const int r = bank.radius_;
  const int n = 2 * r + 1;
  const double var = sigma * sigma;

  bank.g1_.resize(static_cast<std::size_t>(n));
  for (int u = -r; u <= r; ++u) bank.g1_[static_cast<std::size_t>(u + r)] = std::exp(-u * u / (2 * var));
  const double sum1 = std::accumulate(bank.g1_.begin(), bank.g1_.end(), 0.0);
  for (double& v : bank.g1_) v /= sum1;

  bank.dg1_.resize(static_cast<std::size_t>(n));
  for (int u = -r; u <= r; ++u) {
    bank.dg1_[static_cast<std::size_t>(u + r)] = u / var * bank.g1_[static_cast<std::size_t>(u + r)];
  }
  const double mean1 = std::accumulate(bank.dg1_.begin(), bank.dg1_.end(), 0.0) / n;
  for (double& v : bank.dg1_) v -= mean1;

  const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  bank.g_.resize(nn);
  bank.dgx_.resize(nn);
  bank.dgy_.resize(nn);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const auto i = static_cast<std::size_t>(v * n + u);
      bank.g_[i] = bank.g1_[static_cast<std::size_t>(u)] * bank.g1_[static_cast<std::size_t>(v)];
      bank.dgx_[i] = bank.dg1_[static_cast<std::size_t>(u)] * bank.g1_[static_cast<std::size_t>(v)];
      bank.dgy_[i] = bank.g1_[static_cast<std::size_t>(u)] * bank.dg1_[static_cast<std::size_t>(v)];
    }
  }
  auto recenter = [nn](std::vector<double>& k) {
    const double m = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(nn);
    for (double& v : k) v -= m;
  };
  const double gsum = std::accumulate(bank.g_.begin(), bank.g_.end(), 0.0);
  for (double& v : bank.g_) v /= gsum;
  recenter(bank.dgx_);
  recenter(bank.dgy_);
  return bank;
}

namespace {

// Separable zero-padded correlation of every (n, c) plane.
template <typename T>
BasicTensor<T> correlate_separable(const BasicTensor<T>& x, const std::vector<double>& kx,
                                   const std::vector<double>& ky) {
  const Dims d = x.dims();
  auto out = BasicTensor<T>::zeros(d);
  const int r = static_cast<int>(kx.size() / 2);
  std::vector<T> cx(kx.begin(), kx.end());
  std::vector<T> cy(ky.begin(), ky.end());
  parallel_for(0, d.n * d.c, [&](int nc) {
    const int n = nc / d.c;
    const int c = nc % d.c;
    auto in = x.plane(n, c);
    auto dst = out.plane(n, c);
    std::vector<T> tmp(d.plane(), T{0});
    for (int y = 0; y < d.h; ++y) {
      const T* row = in.data() + static_cast<std::ptrdiff_t>(y) * d.w;
      T* trow = tmp.data() + static_cast<std::ptrdiff_t>(y) * d.w;
      for (int xx = 0; xx < d.w; ++xx) {
        T acc{0};
        const int u0 = std::max(-r, -xx);
        const int u1 = std::min(r, d.w - 1 - xx);
        for (int u = u0; u <= u1; ++u) acc += cx[static_cast<std::size_t>(u + r)] * row[xx + u];
        trow[xx] = acc;
      }
    }
    for (int y = 0; y < d.h; ++y) {
      T* orow = dst.data() + static_cast<std::ptrdiff_t>(y) * d.w;
      const int v0 = std::max(-r, -y);
      const int v1 = std::min(r, d.h - 1 - y);
      for (int v = v0; v <= v1; ++v) {
        const T c = cy[static_cast<std::size_t>(v + r)];
        const T* trow = tmp.data() + static_cast<std::ptrdiff_t>(y + v) * d.w;
        for (int xx = 0; xx < d.w; ++xx) orow[xx] += c * trow[xx];
      }
    }
  });
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> blur_channels(const BasicTensor<T>& x, const GaussianKernelBank& bank) {
  return correlate_separable(x, bank.g1(), bank.g1());
}

template <typename T>
BasicTensor<T> blur_derivative_channels(const BasicTensor<T>& x, const GaussianKernelBank& bank,
                                        Axis axis) {
  if (axis == Axis::kX) return correlate_separable(x, bank.dg1(), bank.g1());
  return correlate_separable(x, bank.g1(), bank.dg1());
}

template Tensor blur_channels(const Tensor&, const GaussianKernelBank&);
template TensorD blur_channels(const TensorD&, const GaussianKernelBank&);
template Tensor blur_derivative_channels(const Tensor&, const GaussianKernelBank&, Axis);
template TensorD blur_derivative_channels(const TensorD&, const GaussianKernelBank&, Axis);

}  // namespace dau
