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
#include <cstring>
#include <span>
#include <vector>

#include "dau/tensor.hpp"

namespace dau::detail {

// Every (n, c) plane of a tensor copied into a zero border of `pad` pixels,
// so bilinear taps within `pad` of the plane never need bounds checks.
template <typename T>
class PaddedPlanes {
 public:
  PaddedPlanes(const Dims& d, int pad)
      : pad_(pad), h_(d.h + 2 * pad), w_(d.w + 2 * pad),
        data_(static_cast<std::size_t>(d.n) * d.c * h_ * w_, T{0}), channels_(d.c) {}

  static PaddedPlanes from(const BasicTensor<T>& t, int pad) {
    const Dims& d = t.dims();
    PaddedPlanes p(d, pad);
    for (int n = 0; n < d.n; ++n) {
      for (int c = 0; c < d.c; ++c) {
        auto src = t.plane(n, c);
        T* dst = p.plane(n, c);
        for (int y = 0; y < d.h; ++y) {
          const T* row = src.data() + static_cast<std::ptrdiff_t>(y) * d.w;
          std::copy(row, row + d.w, dst + static_cast<std::ptrdiff_t>(y + pad) * p.w_ + pad);
        }
      }
    }
    return p;
  }

  int pad() const noexcept { return pad_; }
  int stride() const noexcept { return w_; }
  T* plane(int n, int c) noexcept { return data_.data() + plane_offset(n, c); }
  const T* plane(int n, int c) const noexcept { return data_.data() + plane_offset(n, c); }
  // Address of unpadded pixel (y, x) of a plane; valid for -pad <= y, x.
  T* at(T* plane, int y, int x) const noexcept {
    return plane + static_cast<std::ptrdiff_t>(y + pad_) * w_ + (x + pad_);
  }
  const T* at(const T* plane, int y, int x) const noexcept {
    return plane + static_cast<std::ptrdiff_t>(y + pad_) * w_ + (x + pad_);
  }

  // Drops the border.
  BasicTensor<T> crop(const Dims& d) const {
    auto t = BasicTensor<T>::zeros(d);
    for (int n = 0; n < d.n; ++n) {
      for (int c = 0; c < d.c; ++c) {
        auto dst = t.plane(n, c);
        const T* src = plane(n, c);
        for (int y = 0; y < d.h; ++y) {
          const T* row = at(src, y, 0);
          std::copy(row, row + d.w, dst.data() + static_cast<std::ptrdiff_t>(y) * d.w);
        }
      }
    }
    return t;
  }

 private:
  std::size_t plane_offset(int n, int c) const noexcept {
    return (static_cast<std::size_t>(n) * channels_ + c) * static_cast<std::size_t>(h_) * w_;
  }

  int pad_, h_, w_;
  std::vector<T> data_;
  int channels_;
};

// o[x] += c00 r0[x] + c10 r0[x+1] + c01 r1[x] + c11 r1[x+1]
template <typename T>
inline void bilinear_row_axpy(T* o, const T* r0, const T* r1, int w, T c00, T c10, T c01, T c11) {
  for (int x = 0; x < w; ++x) o[x] += c00 * r0[x] + c10 * r0[x + 1] + c01 * r1[x] + c11 * r1[x + 1];
}

// acc[i + 2j] += sum_{y,x} u[y][x] * r[y + j][x + i] over an h x w plane, where
// u is dense and r has row stride `stride`. Fixed-width lanes keep the
// reduction order independent of the compiler's vectorization choices.
template <typename T>
inline void bilinear_plane_dots(const T* u, const T* r, std::ptrdiff_t stride, int h, int w,
                                double acc[4]) {
  // Lanes are held as SSE-width parts so no target-specific vector ABI is
  // involved.
  constexpr int kLanes = 8;
  constexpr int kPart = static_cast<int>(16 / sizeof(T));
  constexpr int kParts = kLanes / kPart;
  typedef T Part __attribute__((vector_size(16)));
  Part l00[kParts] = {}, l10[kParts] = {}, l01[kParts] = {}, l11[kParts] = {};
  T t00{0}, t10{0}, t01{0}, t11{0};
  for (int y = 0; y < h; ++y) {
    const T* ur = u + static_cast<std::ptrdiff_t>(y) * w;
    const T* r0 = r + y * stride;
    const T* r1 = r0 + stride;
    int x = 0;
    for (; x + kLanes <= w; x += kLanes) {
      for (int q = 0; q < kParts; ++q) {
        const int o = x + q * kPart;
        Part uv, a, b, c, d;
        std::memcpy(&uv, ur + o, 16);
        std::memcpy(&a, r0 + o, 16);
        std::memcpy(&b, r0 + o + 1, 16);
        std::memcpy(&c, r1 + o, 16);
        std::memcpy(&d, r1 + o + 1, 16);
        l00[q] += uv * a;
        l10[q] += uv * b;
        l01[q] += uv * c;
        l11[q] += uv * d;
      }
    }
    for (; x < w; ++x) {
      t00 += ur[x] * r0[x];
      t10 += ur[x] * r0[x + 1];
      t01 += ur[x] * r1[x];
      t11 += ur[x] * r1[x + 1];
    }
  }
  for (int l = 0; l < kLanes; ++l) {
    t00 += l00[l / kPart][l % kPart];
    t10 += l10[l / kPart][l % kPart];
    t01 += l01[l / kPart][l % kPart];
    t11 += l11[l / kPart][l % kPart];
  }
  acc[0] += static_cast<double>(t00);
  acc[1] += static_cast<double>(t10);
  acc[2] += static_cast<double>(t01);
  acc[3] += static_cast<double>(t11);
}

}  // namespace dau::detail
