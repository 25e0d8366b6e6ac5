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

#include "dau/dau_layer.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <string>

#include "dau/detail/shift_ops.hpp"
#include "dau/parallel.hpp"

namespace dau {

using detail::PaddedPlanes;

template <typename T>
BasicDauParams<T> BasicDauParams<T>::zeros(int features, int channels, int units, double sigma,
                                           double max_displacement) {
  require(features >= 1 && channels >= 1 && units >= 1, ErrorCode::kInvalidArgument,
          "DAU layer needs features, channels and units >= 1");
  require(std::isfinite(max_displacement) && max_displacement > 0.0,
          ErrorCode::kInvalidArgument, "DAU max displacement must be > 0");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kInvalidArgument,
          "DAU sigma must be > 0");
  BasicDauParams p;
  p.features = features;
  p.channels = channels;
  p.units = units;
  const std::size_t n = p.unit_count();
  p.w.assign(n, T{0});
  p.mu.assign(2 * n, T{0});
  p.bias.assign(static_cast<std::size_t>(features), T{0});
  p.active.assign(n, 1);
  p.sigma = sigma;
  p.max_displacement = max_displacement;
  return p;
}

template <typename T>
void BasicDauParams<T>::clamp_displacements() {
  const T lim = static_cast<T>(max_displacement);
  for (T& m : mu) m = std::clamp(m, -lim, lim);
}

template <typename T>
void BasicDauParams<T>::validate() const {
  const std::size_t n = unit_count();
  require(w.size() == n && mu.size() == 2 * n && active.size() == n &&
              bias.size() == static_cast<std::size_t>(features),
          ErrorCode::kShapeMismatch, "DAU parameter arrays have inconsistent sizes");
  for (T v : w) require(std::isfinite(v), ErrorCode::kNumeric, "non-finite DAU weight");
  for (T v : mu) require(std::isfinite(v), ErrorCode::kNumeric, "non-finite DAU displacement");
}

BilinearTaps bilinear_weights(double mu_x, double mu_y) {
  BilinearTaps t;
  const double bx = std::floor(mu_x);
  const double by = std::floor(mu_y);
  t.base_x = static_cast<int>(bx);
  t.base_y = static_cast<int>(by);
  t.fx = mu_x - bx;
  t.fy = mu_y - by;
  t.a[0][0] = (1 - t.fx) * (1 - t.fy);
  t.a[1][0] = t.fx * (1 - t.fy);
  t.a[0][1] = (1 - t.fx) * t.fy;
  t.a[1][1] = t.fx * t.fy;
  return t;
}

namespace {

template <typename T>
void check_bank(const BasicDauParams<T>& p, const GaussianKernelBank& bank) {
  require(bank.sigma() == p.sigma, ErrorCode::kInvalidArgument,
          "gaussian bank sigma " + std::to_string(bank.sigma()) +
              " does not match layer sigma " + std::to_string(p.sigma));
}

// Border wide enough for every bilinear tap of every active unit.
template <typename T>
int tap_padding(const BasicDauParams<T>& p) {
  return std::max(1, dau_exact_margin(p));
}

}  // namespace

template <typename T>
BasicTensor<T> dau_forward(const BasicTensor<T>& x, const BasicDauParams<T>& p,
                           const GaussianKernelBank& bank, BasicDauCache<T>* cache) {
  const Dims d = x.dims();
  require(d.c == p.channels, ErrorCode::kShapeMismatch,
          "DAU input has " + std::to_string(d.c) + " channels, layer expects " +
              std::to_string(p.channels));
  check_bank(p, bank);
  BasicTensor<T> blurred = blur_channels(x, bank);
  auto y = BasicTensor<T>::zeros({d.n, p.features, d.h, d.w});
  const auto src = PaddedPlanes<T>::from(blurred, tap_padding(p));

  parallel_for(0, d.n, [&](int n) {
    for (int f = 0; f < p.features; ++f) {
      auto out = y.plane(n, f);
      std::fill(out.begin(), out.end(), p.bias[static_cast<std::size_t>(f)]);
      for (int s = 0; s < p.channels; ++s) {
        const T* plane = src.plane(n, s);
        for (int k = 0; k < p.units; ++k) {
          const std::size_t u = p.index(f, s, k);
          if (!p.active[u]) continue;
          const BilinearTaps t = bilinear_weights(p.mu_x(u), p.mu_y(u));
          const T w = p.w[u];
          const T c00 = w * static_cast<T>(t.a[0][0]), c10 = w * static_cast<T>(t.a[1][0]);
          const T c01 = w * static_cast<T>(t.a[0][1]), c11 = w * static_cast<T>(t.a[1][1]);
          for (int yy = 0; yy < d.h; ++yy) {
            const T* r0 = src.at(plane, yy + t.base_y, t.base_x);
            detail::bilinear_row_axpy(out.data() + static_cast<std::ptrdiff_t>(yy) * d.w, r0, r0 + src.stride(),
                                      d.w, c00, c10, c01, c11);
          }
        }
      }
    }
  });

  if (cache != nullptr) {
    cache->input = x;
    cache->blurred = std::move(blurred);
    cache->dblur_x.reset();
    cache->dblur_y.reset();
  }
  return y;
}

template <typename T>
BasicTensor<T> dau_forward_oracle(const BasicTensor<T>& x, const BasicDauParams<T>& p,
                                  const GaussianKernelBank& bank) {
  const Dims d = x.dims();
  require(d.c == p.channels, ErrorCode::kShapeMismatch, "DAU oracle: channel mismatch");
  check_bank(p, bank);

  int splat_r = static_cast<int>(std::ceil(p.max_displacement)) + 1;
  for (std::size_t u = 0; u < p.unit_count(); ++u) {
    const BilinearTaps t = bilinear_weights(p.mu_x(u), p.mu_y(u));
    for (int v : {t.base_x, t.base_x + 1, t.base_y, t.base_y + 1}) splat_r = std::max(splat_r, std::abs(v));
  }
  const int gr = bank.radius();
  const int kr = splat_r + gr;
  const int ks = 2 * kr + 1;
  const int ss = 2 * splat_r + 1;

  auto y = BasicTensor<T>::zeros({d.n, p.features, d.h, d.w});
  std::vector<double> splat(static_cast<std::size_t>(ss * ss));
  std::vector<double> kernel(static_cast<std::size_t>(ks * ks));
  for (int f = 0; f < p.features; ++f) {
    for (int n = 0; n < d.n; ++n) {
      for (int yy = 0; yy < d.h; ++yy) {
        for (int xx = 0; xx < d.w; ++xx) y.at(n, f, yy, xx) = p.bias[static_cast<std::size_t>(f)];
      }
    }
    for (int s = 0; s < p.channels; ++s) {
      std::fill(splat.begin(), splat.end(), 0.0);
      for (int k = 0; k < p.units; ++k) {
        const std::size_t u = p.index(f, s, k);
        if (!p.active[u]) continue;
        const BilinearTaps t = bilinear_weights(p.mu_x(u), p.mu_y(u));
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            const int ox = t.base_x + i + splat_r;
            const int oy = t.base_y + j + splat_r;
            splat[static_cast<std::size_t>(oy * ss + ox)] += static_cast<double>(p.w[u]) * t.a[i][j];
          }
        }
      }
      // Explicit filter: full convolution of the splat with g.
      std::fill(kernel.begin(), kernel.end(), 0.0);
      for (int ty = -splat_r; ty <= splat_r; ++ty) {
        for (int tx = -splat_r; tx <= splat_r; ++tx) {
          const double a = splat[static_cast<std::size_t>((ty + splat_r) * ss + tx + splat_r)];
          if (a == 0.0) continue;
          for (int v = -gr; v <= gr; ++v) {
            for (int uu = -gr; uu <= gr; ++uu) {
              kernel[static_cast<std::size_t>((ty + v + kr) * ks + tx + uu + kr)] += a * bank.g_at(uu, v);
            }
          }
        }
      }
      for (int n = 0; n < d.n; ++n) {
        for (int yy = 0; yy < d.h; ++yy) {
          for (int xx = 0; xx < d.w; ++xx) {
            double acc = 0.0;
            for (int oy = -kr; oy <= kr; ++oy) {
              const int sy = yy + oy;
              if (sy < 0 || sy >= d.h) continue;
              for (int ox = -kr; ox <= kr; ++ox) {
                const int sx = xx + ox;
                if (sx < 0 || sx >= d.w) continue;
                acc += kernel[static_cast<std::size_t>((oy + kr) * ks + ox + kr)] *
                       static_cast<double>(x.at(n, s, sy, sx));
              }
            }
            y.at(n, f, yy, xx) += static_cast<T>(acc);
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
BasicDauGradients<T> dau_backward(const BasicTensor<T>& dldy, BasicDauCache<T>& cache,
                                  const BasicDauParams<T>& p, const GaussianKernelBank& bank,
                                  DisplacementGradient mode) {
  const Dims xd = cache.blurred.dims();
  require(!cache.blurred.empty() && xd.c == p.channels, ErrorCode::kShapeMismatch,
          "DAU backward: cache does not belong to this layer");
  const Dims yd{xd.n, p.features, xd.h, xd.w};
  require(dldy.dims() == yd, ErrorCode::kShapeMismatch,
          "DAU backward: upstream gradient dims " + dldy.dims().str() + " expected " + yd.str());
  check_bank(p, bank);

  const bool analytic = mode == DisplacementGradient::kAnalytic;
  if (analytic && !cache.dblur_x) {
    cache.dblur_x = blur_derivative_channels(cache.input, bank, Axis::kX);
    cache.dblur_y = blur_derivative_channels(cache.input, bank, Axis::kY);
  }

  const std::size_t nu = p.unit_count();
  BasicDauGradients<T> g;
  g.dw.assign(nu, T{0});
  g.dmu.assign(2 * nu, T{0});
  g.dbias.assign(static_cast<std::size_t>(p.features), T{0});

  // Per-sample partial sums, reduced in batch order afterwards.
  std::vector<double> part_dw(static_cast<std::size_t>(xd.n) * nu, 0.0);
  std::vector<double> part_dmu(static_cast<std::size_t>(xd.n) * 2 * nu, 0.0);
  std::vector<double> part_db(static_cast<std::size_t>(xd.n) * p.features, 0.0);
  const int pad = tap_padding(p);
  const auto src = PaddedPlanes<T>::from(cache.blurred, pad);
  std::optional<PaddedPlanes<T>> srcx, srcy;
  if (analytic) {
    srcx = PaddedPlanes<T>::from(*cache.dblur_x, pad);
    srcy = PaddedPlanes<T>::from(*cache.dblur_y, pad);
  }
  PaddedPlanes<T> dpad(xd, pad);
  const auto upad = PaddedPlanes<T>::from(dldy, 1);

  parallel_for(0, xd.n, [&](int n) {
    double* pdw = part_dw.data() + static_cast<std::size_t>(n) * nu;
    double* pdmu = part_dmu.data() + static_cast<std::size_t>(n) * 2 * nu;
    double* pdb = part_db.data() + static_cast<std::size_t>(n) * p.features;
    for (int f = 0; f < p.features; ++f) {
      double sb = 0.0;
      for (T v : dldy.plane(n, f)) sb += static_cast<double>(v);
      pdb[f] = sb;
    }
    // Channel-outer order keeps one input plane set hot across all features;
    // each dpad plane still accumulates in (f, k) order.
    for (int s = 0; s < p.channels; ++s) {
      const T* plane = src.plane(n, s);
      T* dplane = dpad.plane(n, s);
      for (int f = 0; f < p.features; ++f) {
        auto up = dldy.plane(n, f);
        for (int k = 0; k < p.units; ++k) {
          const std::size_t u = p.index(f, s, k);
          if (!p.active[u]) continue;
          const BilinearTaps t = bilinear_weights(p.mu_x(u), p.mu_y(u));
          const T w = p.w[u];
          const T c00 = w * static_cast<T>(t.a[0][0]), c10 = w * static_cast<T>(t.a[1][0]);
          const T c01 = w * static_cast<T>(t.a[0][1]), c11 = w * static_cast<T>(t.a[1][1]);
          // dot[i + 2j] = sum over the plane of dldy * blurred shifted by base + (i, j).
          double dot[4] = {0, 0, 0, 0}, dx[4] = {0, 0, 0, 0}, dy[4] = {0, 0, 0, 0};
          detail::bilinear_plane_dots(up.data(), src.at(plane, t.base_y, t.base_x), src.stride(), xd.h,
                                      xd.w, dot);
          if (analytic) {
            detail::bilinear_plane_dots(up.data(), srcx->at(srcx->plane(n, s), t.base_y, t.base_x),
                                        src.stride(), xd.h, xd.w, dx);
            detail::bilinear_plane_dots(up.data(), srcy->at(srcy->plane(n, s), t.base_y, t.base_x),
                                        src.stride(), xd.h, xd.w, dy);
          }
          // Adjoint of the gather: output row y of the shifted sample takes
          // upstream rows y and y - 1, so it is again a bilinear gather.
          const T* ubase = upad.at(upad.plane(n, f), -1, -1);
          for (int yy = 0; yy <= xd.h; ++yy) {
            const T* r0 = ubase + static_cast<std::ptrdiff_t>(yy) * upad.stride();
            detail::bilinear_row_axpy(dpad.at(dplane, yy + t.base_y, t.base_x), r0, r0 + upad.stride(),
                                      xd.w + 1, c11, c01, c10, c00);
          }
          pdw[u] = t.a[0][0] * dot[0] + t.a[1][0] * dot[1] + t.a[0][1] * dot[2] + t.a[1][1] * dot[3];
          const double wk = static_cast<double>(w);
          if (analytic) {
            pdmu[2 * u] = wk * (t.a[0][0] * dx[0] + t.a[1][0] * dx[1] + t.a[0][1] * dx[2] + t.a[1][1] * dx[3]);
            pdmu[2 * u + 1] = wk * (t.a[0][0] * dy[0] + t.a[1][0] * dy[1] + t.a[0][1] * dy[2] + t.a[1][1] * dy[3]);
          } else {
            const double fx = t.fx, fy = t.fy;
            pdmu[2 * u] = wk * (-(1 - fy) * dot[0] + (1 - fy) * dot[1] - fy * dot[2] + fy * dot[3]);
            pdmu[2 * u + 1] = wk * (-(1 - fx) * dot[0] - fx * dot[1] + (1 - fx) * dot[2] + fx * dot[3]);
          }
        }
      }
    }
  });

  for (int n = 0; n < xd.n; ++n) {
    const double* pdw = part_dw.data() + static_cast<std::size_t>(n) * nu;
    const double* pdmu = part_dmu.data() + static_cast<std::size_t>(n) * 2 * nu;
    const double* pdb = part_db.data() + static_cast<std::size_t>(n) * p.features;
    for (std::size_t u = 0; u < nu; ++u) g.dw[u] += static_cast<T>(pdw[u]);
    for (std::size_t u = 0; u < 2 * nu; ++u) g.dmu[u] += static_cast<T>(pdmu[u]);
    for (int f = 0; f < p.features; ++f) g.dbias[static_cast<std::size_t>(f)] += static_cast<T>(pdb[f]);
  }
  // g is symmetric, so zero-padded correlation with g is its own adjoint.
  // The border collects taps that fell outside the plane; those samples read
  // zero in the forward pass, so cropping is the adjoint.
  g.dinput = blur_channels(dpad.crop(xd), bank);
  return g;
}

DauLayerParams scale_displacements(const DauLayerParams& p, double factor) {
  require(std::isfinite(factor) && factor > 0.0, ErrorCode::kInvalidArgument,
          "displacement scale factor must be > 0, got " + std::to_string(factor));
  DauLayerParams out = p;
  for (float& m : out.mu) m = static_cast<float>(m * factor);
  out.max_displacement = p.max_displacement * factor;
  return out;
}

std::vector<std::pair<double, double>> initial_displacement_grid(int units) {
  require(units >= 1, ErrorCode::kInvalidArgument, "units per filter must be >= 1");
  constexpr double h = 1.25;
  switch (units) {
    case 1: return {{0.0, 0.0}};
    case 2: return {{-h, 0.0}, {h, 0.0}};
    case 4: return {{-h, -h}, {h, -h}, {-h, h}, {h, h}};
    case 6: return {{-h, -h}, {0.0, -h}, {h, -h}, {-h, h}, {0.0, h}, {h, h}};
    default: break;
  }
  // Row-major centered grid with 2.5 px spacing; the last row may be partial.
  const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(units))));
  const int cols = (units + rows - 1) / rows;
  std::vector<std::pair<double, double>> pts;
  for (int r = 0; r < rows && static_cast<int>(pts.size()) < units; ++r) {
    for (int c = 0; c < cols && static_cast<int>(pts.size()) < units; ++c) {
      pts.emplace_back((c - (cols - 1) / 2.0) * 2 * h, (r - (rows - 1) / 2.0) * 2 * h);
    }
  }
  return pts;
}

void initialize_dau_params(DauLayerParams& p, Rng& rng) {
  const auto grid = initial_displacement_grid(p.units);
  const double limit = std::sqrt(3.0 / (static_cast<double>(p.channels) * p.units));
  for (int f = 0; f < p.features; ++f) {
    for (int s = 0; s < p.channels; ++s) {
      for (int k = 0; k < p.units; ++k) {
        const std::size_t u = p.index(f, s, k);
        p.w[u] = static_cast<float>(rng.uniform(-limit, limit));
        p.mu_x(u) = static_cast<float>(grid[static_cast<std::size_t>(k)].first);
        p.mu_y(u) = static_cast<float>(grid[static_cast<std::size_t>(k)].second);
        p.active[u] = 1;
      }
    }
  }
  std::fill(p.bias.begin(), p.bias.end(), 0.0f);
  p.clamp_displacements();
}

template <typename T>
int dau_exact_margin(const BasicDauParams<T>& p) {
  int m = 0;
  for (std::size_t u = 0; u < p.unit_count(); ++u) {
    if (!p.active[u]) continue;
    const BilinearTaps t = bilinear_weights(p.mu_x(u), p.mu_y(u));
    for (int v : {t.base_x, t.base_x + 1, t.base_y, t.base_y + 1}) m = std::max(m, std::abs(v));
  }
  return m;
}

template struct BasicDauParams<float>;
template struct BasicDauParams<double>;
template Tensor dau_forward(const Tensor&, const DauLayerParams&, const GaussianKernelBank&, DauCache*);
template TensorD dau_forward(const TensorD&, const BasicDauParams<double>&, const GaussianKernelBank&,
                             BasicDauCache<double>*);
template Tensor dau_forward_oracle(const Tensor&, const DauLayerParams&, const GaussianKernelBank&);
template TensorD dau_forward_oracle(const TensorD&, const BasicDauParams<double>&,
                                    const GaussianKernelBank&);
template DauGradients dau_backward(const Tensor&, DauCache&, const DauLayerParams&,
                                   const GaussianKernelBank&, DisplacementGradient);
template BasicDauGradients<double> dau_backward(const TensorD&, BasicDauCache<double>&,
                                                const BasicDauParams<double>&,
                                                const GaussianKernelBank&, DisplacementGradient);
template int dau_exact_margin(const DauLayerParams&);
template int dau_exact_margin(const BasicDauParams<double>&);

}  // namespace dau
