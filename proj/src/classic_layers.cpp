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

#include "dau/classic_layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dau/parallel.hpp"

namespace dau {

namespace {

// Output index range [lo, hi) for which lo*stride - pad + k lies in [0, extent).
std::pair<int, int> valid_range(int out_extent, int in_extent, int stride, int pad, int k) {
  int lo = 0;
  while (lo < out_extent && lo * stride - pad + k < 0) ++lo;
  int hi = out_extent;
  while (hi > lo && (hi - 1) * stride - pad + k >= in_extent) --hi;
  return {lo, hi};
}

}  // namespace

// ---- dense convolution ----------------------------------------------------

template <typename T>
BasicConvParams<T> BasicConvParams<T>::zeros(int features, int channels, int kernel_h,
                                             int kernel_w, int padding, int stride) {
  BasicConvParams p;
  p.features = features;
  p.channels = channels;
  p.kernel_h = kernel_h;
  p.kernel_w = kernel_w;
  p.padding = padding;
  p.stride = stride;
  require(features >= 1 && channels >= 1 && kernel_h >= 1 && kernel_w >= 1 && padding >= 0 &&
              stride >= 1,
          ErrorCode::kInvalidArgument, "invalid convolution geometry");
  p.weights.assign(static_cast<std::size_t>(features) * channels * kernel_h * kernel_w, T{0});
  p.bias.assign(static_cast<std::size_t>(features), T{0});
  p.validate();
  return p;
}

template <typename T>
void BasicConvParams<T>::validate() const {
  require(kernel_h % 2 == 1 && kernel_w % 2 == 1, ErrorCode::kInvalidArgument,
          "convolution kernel extents must be odd");
  require(weights.size() == static_cast<std::size_t>(features) * channels * kernel_h * kernel_w &&
              bias.size() == static_cast<std::size_t>(features),
          ErrorCode::kShapeMismatch, "convolution parameter arrays have inconsistent sizes");
  for (T v : weights) require(std::isfinite(v), ErrorCode::kNumeric, "non-finite conv weight");
}

template <typename T>
Dims BasicConvParams<T>::output_dims(const Dims& in) const {
  const int ho = (in.h + 2 * padding - kernel_h) / stride + 1;
  const int wo = (in.w + 2 * padding - kernel_w) / stride + 1;
  require(in.h + 2 * padding >= kernel_h && in.w + 2 * padding >= kernel_w,
          ErrorCode::kShapeMismatch, "convolution kernel larger than padded input " + in.str());
  return {in.n, features, ho, wo};
}

template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& x, const BasicConvParams<T>& p) {
  const Dims d = x.dims();
  require(d.c == p.channels, ErrorCode::kShapeMismatch,
          "conv input has " + std::to_string(d.c) + " channels, expected " +
              std::to_string(p.channels));
  const Dims od = p.output_dims(d);
  auto y = BasicTensor<T>::zeros(od);
  parallel_for(0, d.n, [&](int n) {
    for (int f = 0; f < p.features; ++f) {
      auto out = y.plane(n, f);
      std::fill(out.begin(), out.end(), p.bias[static_cast<std::size_t>(f)]);
      for (int s = 0; s < p.channels; ++s) {
        auto in = x.plane(n, s);
        for (int ky = 0; ky < p.kernel_h; ++ky) {
          const auto [y0, y1] = valid_range(od.h, d.h, p.stride, p.padding, ky);
          for (int kx = 0; kx < p.kernel_w; ++kx) {
            const auto [x0, x1] = valid_range(od.w, d.w, p.stride, p.padding, kx);
            const T c = p.weights[((static_cast<std::size_t>(f) * p.channels + s) * p.kernel_h + ky) *
                                      p.kernel_w + kx];
            for (int oy = y0; oy < y1; ++oy) {
              const T* row = in.data() + static_cast<std::ptrdiff_t>(oy * p.stride - p.padding + ky) * d.w;
              T* orow = out.data() + static_cast<std::ptrdiff_t>(oy) * od.w;
              if (p.stride == 1) {
                const T* src = row - p.padding + kx;
                for (int ox = x0; ox < x1; ++ox) orow[ox] += c * src[ox];
              } else {
                for (int ox = x0; ox < x1; ++ox) orow[ox] += c * row[ox * p.stride - p.padding + kx];
              }
            }
          }
        }
      }
    }
  });
  return y;
}

template <typename T>
BasicConvGradients<T> conv_backward(const BasicTensor<T>& dldy, const BasicTensor<T>& x,
                                    const BasicConvParams<T>& p) {
  const Dims d = x.dims();
  const Dims od = p.output_dims(d);
  require(dldy.dims() == od, ErrorCode::kShapeMismatch,
          "conv backward: gradient dims " + dldy.dims().str() + " expected " + od.str());
  const std::size_t nw = p.weights.size();
  std::vector<double> part_dw(static_cast<std::size_t>(d.n) * nw, 0.0);
  std::vector<double> part_db(static_cast<std::size_t>(d.n) * p.features, 0.0);
  auto dx = BasicTensor<T>::zeros(d);

  parallel_for(0, d.n, [&](int n) {
    double* pdw = part_dw.data() + static_cast<std::size_t>(n) * nw;
    double* pdb = part_db.data() + static_cast<std::size_t>(n) * p.features;
    for (int f = 0; f < p.features; ++f) {
      auto up = dldy.plane(n, f);
      double sb = 0.0;
      for (T v : up) sb += static_cast<double>(v);
      pdb[f] = sb;
      for (int s = 0; s < p.channels; ++s) {
        auto in = x.plane(n, s);
        auto din = dx.plane(n, s);
        for (int ky = 0; ky < p.kernel_h; ++ky) {
          const auto [y0, y1] = valid_range(od.h, d.h, p.stride, p.padding, ky);
          for (int kx = 0; kx < p.kernel_w; ++kx) {
            const auto [x0, x1] = valid_range(od.w, d.w, p.stride, p.padding, kx);
            const std::size_t wi =
                ((static_cast<std::size_t>(f) * p.channels + s) * p.kernel_h + ky) * p.kernel_w + kx;
            const T c = p.weights[wi];
            double acc = 0.0;
            for (int oy = y0; oy < y1; ++oy) {
              const std::ptrdiff_t iy = oy * p.stride - p.padding + ky;
              const T* urow = up.data() + static_cast<std::ptrdiff_t>(oy) * od.w;
              const T* row = in.data() + iy * d.w;
              T* drow = din.data() + iy * d.w;
              for (int ox = x0; ox < x1; ++ox) {
                const int ix = ox * p.stride - p.padding + kx;
                acc += static_cast<double>(urow[ox]) * row[ix];
                drow[ix] += c * urow[ox];
              }
            }
            pdw[wi] = acc;
          }
        }
      }
    }
  });

  BasicConvGradients<T> g;
  g.dweights.assign(nw, T{0});
  g.dbias.assign(static_cast<std::size_t>(p.features), T{0});
  for (int n = 0; n < d.n; ++n) {
    for (std::size_t i = 0; i < nw; ++i) g.dweights[i] += static_cast<T>(part_dw[n * nw + i]);
    for (int f = 0; f < p.features; ++f) {
      g.dbias[static_cast<std::size_t>(f)] += static_cast<T>(part_db[static_cast<std::size_t>(n) * p.features + f]);
    }
  }
  g.dinput = std::move(dx);
  return g;
}

void initialize_conv_params(ConvParams& p, Rng& rng) {
  const double limit = std::sqrt(3.0 / (static_cast<double>(p.channels) * p.kernel_h * p.kernel_w));
  for (float& v : p.weights) v = static_cast<float>(rng.uniform(-limit, limit));
  std::fill(p.bias.begin(), p.bias.end(), 0.0f);
}

// ---- max pooling ----------------------------------------------------------

Dims maxpool2_output_dims(const Dims& in) { return {in.n, in.c, (in.h + 1) / 2, (in.w + 1) / 2}; }

template <typename T>
BasicTensor<T> maxpool2_forward(const BasicTensor<T>& x, PoolCache* cache) {
  const Dims d = x.dims();
  const Dims od = maxpool2_output_dims(d);
  auto y = BasicTensor<T>::zeros(od);
  std::vector<std::uint32_t> arg(od.count());
  for (int n = 0; n < d.n; ++n) {
    for (int c = 0; c < d.c; ++c) {
      for (int oy = 0; oy < od.h; ++oy) {
        for (int ox = 0; ox < od.w; ++ox) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_i = x.offset(n, c, 2 * oy, 2 * ox);
          bool first = true;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int iy = 2 * oy + dy;
              const int ix = 2 * ox + dx;
              if (iy >= d.h || ix >= d.w) continue;
              const std::size_t i = x.offset(n, c, iy, ix);
              if (first || x[i] > best) {
                best = x[i];
                best_i = i;
                first = false;
              }
            }
          }
          const std::size_t o = y.offset(n, c, oy, ox);
          y[o] = best;
          arg[o] = static_cast<std::uint32_t>(best_i);
        }
      }
    }
  }
  if (cache != nullptr) {
    cache->input = d;
    cache->argmax = std::move(arg);
  }
  return y;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& dldy, const PoolCache& cache) {
  require(dldy.dims() == maxpool2_output_dims(cache.input) && cache.argmax.size() == dldy.size(),
          ErrorCode::kShapeMismatch, "maxpool backward: gradient does not match cache");
  auto dx = BasicTensor<T>::zeros(cache.input);
  for (std::size_t o = 0; o < dldy.size(); ++o) dx[cache.argmax[o]] += dldy[o];
  return dx;
}

// ---- batch normalization --------------------------------------------------

template <typename T>
BasicBatchNormState<T> BasicBatchNormState<T>::identity(int channels) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "batchnorm needs >= 1 channel");
  BasicBatchNormState s;
  s.channels = channels;
  s.scale.assign(static_cast<std::size_t>(channels), T{1});
  s.shift.assign(static_cast<std::size_t>(channels), T{0});
  s.running_mean.assign(static_cast<std::size_t>(channels), T{0});
  s.running_var.assign(static_cast<std::size_t>(channels), T{1});
  return s;
}

template <typename T>
void BasicBatchNormState<T>::validate() const {
  const auto c = static_cast<std::size_t>(channels);
  require(scale.size() == c && shift.size() == c && running_mean.size() == c &&
              running_var.size() == c,
          ErrorCode::kShapeMismatch, "batchnorm state arrays have inconsistent sizes");
  require(epsilon > 0.0, ErrorCode::kInvalidArgument, "batchnorm epsilon must be > 0");
  for (T v : running_var) require(v >= T{0}, ErrorCode::kInvalidArgument, "negative running variance");
}

template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, BasicBatchNormState<T>& state,
                                 bool training, BasicBatchNormCache<T>* cache) {
  const Dims d = x.dims();
  require(d.c == state.channels, ErrorCode::kShapeMismatch, "batchnorm: channel mismatch");
  const std::size_t m = static_cast<std::size_t>(d.n) * d.plane();
  require(!training || m >= 2, ErrorCode::kInvalidArgument,
          "batchnorm training needs N*H*W >= 2 samples per channel, got " + std::to_string(m));
  auto y = BasicTensor<T>::zeros(d);
  auto xhat = BasicTensor<T>::zeros(d);
  std::vector<double> inv_std(static_cast<std::size_t>(d.c));
  for (int c = 0; c < d.c; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    double mean, var;
    if (training) {
      double s = 0.0;
      for (int n = 0; n < d.n; ++n) for (T v : x.plane(n, c)) s += static_cast<double>(v);
      mean = s / static_cast<double>(m);
      double ss = 0.0;
      for (int n = 0; n < d.n; ++n) {
        for (T v : x.plane(n, c)) ss += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
      }
      var = ss / static_cast<double>(m);
      const double mom = state.momentum;
      state.running_mean[ci] = static_cast<T>((1 - mom) * state.running_mean[ci] + mom * mean);
      state.running_var[ci] = static_cast<T>((1 - mom) * state.running_var[ci] +
                                             mom * ss / static_cast<double>(m - 1));
    } else {
      mean = static_cast<double>(state.running_mean[ci]);
      var = static_cast<double>(state.running_var[ci]);
    }
    const double is = 1.0 / std::sqrt(var + state.epsilon);
    inv_std[ci] = is;
    const double g = static_cast<double>(state.scale[ci]);
    const double b = static_cast<double>(state.shift[ci]);
    for (int n = 0; n < d.n; ++n) {
      auto src = x.plane(n, c);
      auto xh = xhat.plane(n, c);
      auto dst = y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double h = (static_cast<double>(src[i]) - mean) * is;
        xh[i] = static_cast<T>(h);
        dst[i] = static_cast<T>(g * h + b);
      }
    }
  }
  if (cache != nullptr) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->training = training;
  }
  return y;
}

template <typename T>
BasicBatchNormGradients<T> batchnorm_backward(const BasicTensor<T>& dldy,
                                              const BasicBatchNormCache<T>& cache,
                                              const BasicBatchNormState<T>& state) {
  const Dims d = cache.normalized.dims();
  require(dldy.dims() == d, ErrorCode::kShapeMismatch, "batchnorm backward: dims mismatch");
  BasicBatchNormGradients<T> g;
  g.dscale.assign(static_cast<std::size_t>(d.c), T{0});
  g.dshift.assign(static_cast<std::size_t>(d.c), T{0});
  g.dinput = BasicTensor<T>::zeros(d);
  const double m = static_cast<double>(d.n) * static_cast<double>(d.plane());
  for (int c = 0; c < d.c; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < d.n; ++n) {
      auto up = dldy.plane(n, c);
      auto xh = cache.normalized.plane(n, c);
      for (std::size_t i = 0; i < up.size(); ++i) {
        sum_dy += static_cast<double>(up[i]);
        sum_dy_xhat += static_cast<double>(up[i]) * xh[i];
      }
    }
    g.dscale[ci] = static_cast<T>(sum_dy_xhat);
    g.dshift[ci] = static_cast<T>(sum_dy);
    const double k = static_cast<double>(state.scale[ci]) * cache.inv_std[ci];
    for (int n = 0; n < d.n; ++n) {
      auto up = dldy.plane(n, c);
      auto xh = cache.normalized.plane(n, c);
      auto dx = g.dinput.plane(n, c);
      for (std::size_t i = 0; i < up.size(); ++i) {
        if (cache.training) {
          dx[i] = static_cast<T>(k * (static_cast<double>(up[i]) - sum_dy / m -
                                      static_cast<double>(xh[i]) * sum_dy_xhat / m));
        } else {
          dx[i] = static_cast<T>(k * static_cast<double>(up[i]));
        }
      }
    }
  }
  return g;
}

// ---- fully connected ------------------------------------------------------

template <typename T>
BasicFcParams<T> BasicFcParams<T>::zeros(int inputs, int outputs) {
  require(inputs >= 1 && outputs >= 1, ErrorCode::kInvalidArgument,
          "fully connected layer needs inputs, outputs >= 1");
  BasicFcParams p;
  p.inputs = inputs;
  p.outputs = outputs;
  p.weights.assign(static_cast<std::size_t>(inputs) * outputs, T{0});
  p.bias.assign(static_cast<std::size_t>(outputs), T{0});
  return p;
}

template <typename T>
void BasicFcParams<T>::validate() const {
  require(weights.size() == static_cast<std::size_t>(inputs) * outputs &&
              bias.size() == static_cast<std::size_t>(outputs),
          ErrorCode::kShapeMismatch, "fully connected parameter arrays have inconsistent sizes");
}

template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& x, const BasicFcParams<T>& p) {
  const Dims d = x.dims();
  const std::size_t in = static_cast<std::size_t>(d.c) * d.plane();
  require(in == static_cast<std::size_t>(p.inputs), ErrorCode::kShapeMismatch,
          "fully connected layer expects " + std::to_string(p.inputs) + " inputs, got " +
              std::to_string(in));
  auto y = BasicTensor<T>::zeros({d.n, p.outputs, 1, 1});
  parallel_for(0, d.n, [&](int n) {
    const T* xs = x.data().data() + static_cast<std::size_t>(n) * in;
    for (int o = 0; o < p.outputs; ++o) {
      const T* wr = p.weights.data() + static_cast<std::size_t>(o) * in;
      T acc = p.bias[static_cast<std::size_t>(o)];
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xs[i];
      y.at(n, o, 0, 0) = acc;
    }
  });
  return y;
}

template <typename T>
BasicFcGradients<T> fc_backward(const BasicTensor<T>& dldy, const BasicTensor<T>& x,
                                const BasicFcParams<T>& p) {
  const Dims d = x.dims();
  const std::size_t in = static_cast<std::size_t>(p.inputs);
  require(dldy.dims() == Dims{d.n, p.outputs, 1, 1}, ErrorCode::kShapeMismatch,
          "fully connected backward: gradient dims mismatch");
  BasicFcGradients<T> g;
  g.dweights.assign(p.weights.size(), T{0});
  g.dbias.assign(p.bias.size(), T{0});
  g.dinput = BasicTensor<T>::zeros(d);
  parallel_for(0, p.outputs, [&](int o) {
    T* gw = g.dweights.data() + static_cast<std::size_t>(o) * in;
    double db = 0.0;
    for (int n = 0; n < d.n; ++n) {
      const T up = dldy.at(n, o, 0, 0);
      db += static_cast<double>(up);
      const T* xs = x.data().data() + static_cast<std::size_t>(n) * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += up * xs[i];
    }
    g.dbias[static_cast<std::size_t>(o)] = static_cast<T>(db);
  });
  parallel_for(0, d.n, [&](int n) {
    T* dx = g.dinput.data().data() + static_cast<std::size_t>(n) * in;
    for (int o = 0; o < p.outputs; ++o) {
      const T up = dldy.at(n, o, 0, 0);
      const T* wr = p.weights.data() + static_cast<std::size_t>(o) * in;
      for (std::size_t i = 0; i < in; ++i) dx[i] += up * wr[i];
    }
  });
  return g;
}

void initialize_fc_params(FcParams& p, Rng& rng) {
  const double limit = std::sqrt(3.0 / static_cast<double>(p.inputs));
  for (float& v : p.weights) v = static_cast<float>(rng.uniform(-limit, limit));
  std::fill(p.bias.begin(), p.bias.end(), 0.0f);
}

// ---- activation and loss --------------------------------------------------

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& dldy, const BasicTensor<T>& x) {
  require(dldy.dims() == x.dims(), ErrorCode::kShapeMismatch, "relu backward: dims mismatch");
  BasicTensor<T> dx = dldy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > T{0})) dx[i] = T{0};
  }
  return dx;
}

template <typename T>
XentResult<T> softmax_xent(const BasicTensor<T>& logits, std::span<const int> labels) {
  const Dims d = logits.dims();
  require(d.h == 1 && d.w == 1, ErrorCode::kShapeMismatch, "softmax_xent expects (N, C, 1, 1) logits");
  require(labels.size() == static_cast<std::size_t>(d.n), ErrorCode::kShapeMismatch,
          "softmax_xent: label count does not match batch");
  XentResult<T> r;
  r.dlogits = BasicTensor<T>::zeros(d);
  double total = 0.0;
  std::vector<double> prob(static_cast<std::size_t>(d.c));
  for (int n = 0; n < d.n; ++n) {
    const int label = labels[static_cast<std::size_t>(n)];
    require(label >= 0 && label < d.c, ErrorCode::kInvalidArgument,
            "label " + std::to_string(label) + " outside [0, " + std::to_string(d.c) + ")");
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < d.c; ++c) mx = std::max(mx, static_cast<double>(logits.at(n, c, 0, 0)));
    double z = 0.0;
    for (int c = 0; c < d.c; ++c) {
      prob[static_cast<std::size_t>(c)] = std::exp(static_cast<double>(logits.at(n, c, 0, 0)) - mx);
      z += prob[static_cast<std::size_t>(c)];
    }
    total += std::log(z) + mx - static_cast<double>(logits.at(n, label, 0, 0));
    for (int c = 0; c < d.c; ++c) {
      const double pc = prob[static_cast<std::size_t>(c)] / z;
      r.dlogits.at(n, c, 0, 0) = static_cast<T>((pc - (c == label ? 1.0 : 0.0)) / d.n);
    }
  }
  r.loss = total / d.n;
  return r;
}

#define DAU_INSTANTIATE(T)                                                                      \
  template struct BasicConvParams<T>;                                                           \
  template BasicTensor<T> conv_forward(const BasicTensor<T>&, const BasicConvParams<T>&);       \
  template BasicConvGradients<T> conv_backward(const BasicTensor<T>&, const BasicTensor<T>&,    \
                                               const BasicConvParams<T>&);                      \
  template BasicTensor<T> maxpool2_forward(const BasicTensor<T>&, PoolCache*);                  \
  template BasicTensor<T> maxpool2_backward(const BasicTensor<T>&, const PoolCache&);           \
  template struct BasicBatchNormState<T>;                                                       \
  template BasicTensor<T> batchnorm_forward(const BasicTensor<T>&, BasicBatchNormState<T>&,     \
                                            bool, BasicBatchNormCache<T>*);                     \
  template BasicBatchNormGradients<T> batchnorm_backward(                                       \
      const BasicTensor<T>&, const BasicBatchNormCache<T>&, const BasicBatchNormState<T>&);     \
  template struct BasicFcParams<T>;                                                             \
  template BasicTensor<T> fc_forward(const BasicTensor<T>&, const BasicFcParams<T>&);           \
  template BasicFcGradients<T> fc_backward(const BasicTensor<T>&, const BasicTensor<T>&,        \
                                           const BasicFcParams<T>&);                            \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template XentResult<T> softmax_xent(const BasicTensor<T>&, std::span<const int>);

DAU_INSTANTIATE(float)
DAU_INSTANTIATE(double)

#undef DAU_INSTANTIATE

}  // namespace dau
