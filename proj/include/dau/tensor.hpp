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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dau/error.hpp"

namespace dau {

// (batch, channels, rows, cols).
struct Dims {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  bool operator==(const Dims&) const = default;
  std::string str() const;
};

// Throws kInvalidArgument unless every dim is >= 1 and the element count
// fits the address space for `element_size`-byte elements.
void validate_dims(const Dims& d, std::size_t element_size);

// Dense row-major NCHW tensor.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  static BasicTensor zeros(const Dims& d) {
    validate_dims(d, sizeof(T));
    BasicTensor t;
    t.dims_ = d;
    t.data_.assign(d.count(), T{0});
    return t;
  }

  BasicTensor(const Dims& d, std::vector<T> values) : dims_(d), data_(std::move(values)) {
    validate_dims(d, sizeof(T));
    require(data_.size() == d.count(), ErrorCode::kShapeMismatch,
            "tensor data length " + std::to_string(data_.size()) + " does not match dims " +
                d.str());
  }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  std::size_t offset(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * dims_.c + c) * dims_.h + y) * dims_.w + x;
  }

  T& at(int n, int c, int y, int x) noexcept { return data_[offset(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const noexcept { return data_[offset(n, c, y, x)]; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> plane(int n, int c) noexcept {
    return std::span<T>(data_).subspan(offset(n, c, 0, 0), dims_.plane());
  }
  std::span<const T> plane(int n, int c) const noexcept {
    return std::span<const T>(data_).subspan(offset(n, c, 0, 0), dims_.plane());
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

 private:
  Dims dims_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename T>
BasicTensor<T> elementwise_relu(const BasicTensor<T>& t) {
  BasicTensor<T> out = t;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

// Per-(n, c) sum over all spatial positions; result has dims (N, C, 1, 1).
template <typename T>
BasicTensor<T> reduce_sum_spatial(const BasicTensor<T>& t) {
  const Dims& d = t.dims();
  auto out = BasicTensor<T>::zeros({d.n, d.c, 1, 1});
  for (int n = 0; n < d.n; ++n) {
    for (int c = 0; c < d.c; ++c) {
      T acc{0};
      for (T v : t.plane(n, c)) acc += v;
      out.at(n, c, 0, 0) = acc;
    }
  }
  return out;
}

// Concatenates along the batch axis; channel and spatial dims must agree.
template <typename T>
BasicTensor<T> concat_batch(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Dims& da = a.dims();
  const Dims& db = b.dims();
  require(da.c == db.c && da.h == db.h && da.w == db.w, ErrorCode::kShapeMismatch,
          "concat_batch: " + da.str() + " vs " + db.str());
  std::vector<T> v(a.data().begin(), a.data().end());
  v.insert(v.end(), b.data().begin(), b.data().end());
  return BasicTensor<T>({da.n + db.n, da.c, da.h, da.w}, std::move(v));
}

}  // namespace dau
