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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dau/gaussian_bank.hpp"
#include "test_util.hpp"

namespace dau {
namespace {

// Direct 2-D summation, independent of the bank's separable construction.
std::vector<double> oracle_g(double sigma, int r) {
  std::vector<double> k;
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u) k.push_back(std::exp(-(u * u + v * v) / (2 * sigma * sigma)));
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& x : k) x /= s;
  return k;
}

TensorD naive_correlate(const TensorD& x, const std::vector<double>& k, int r) {
  const Dims d = x.dims();
  auto out = TensorD::zeros(d);
  const int n = 2 * r + 1;
  for (int b = 0; b < d.n; ++b)
    for (int c = 0; c < d.c; ++c)
      for (int y = 0; y < d.h; ++y)
        for (int xx = 0; xx < d.w; ++xx) {
          double acc = 0;
          for (int v = -r; v <= r; ++v)
            for (int u = -r; u <= r; ++u) {
              const int sy = y + v, sx = xx + u;
              if (sy < 0 || sy >= d.h || sx < 0 || sx >= d.w) continue;
              acc += k[static_cast<std::size_t>((v + r) * n + u + r)] * x.at(b, c, sy, sx);
            }
          out.at(b, c, y, xx) = acc;
        }
  return out;
}

TEST(GaussianBank, RadiusRule) {
  EXPECT_EQ(GaussianKernelBank::build(0.5).radius(), 2);
  EXPECT_EQ(GaussianKernelBank::build(0.3).radius(), 1);
  EXPECT_EQ(GaussianKernelBank::build(0.2).radius(), 1);
  EXPECT_EQ(GaussianKernelBank::build(0.8).radius(), 3);
  EXPECT_EQ(GaussianKernelBank::build(1.0).radius(), 3);
  EXPECT_EQ(GaussianKernelBank::build(0.5).size(), 5);
}

TEST(GaussianBank, CenterValueSigmaHalf) {
  auto bank = GaussianKernelBank::build(0.5);
  const auto ref = oracle_g(0.5, 2);
  EXPECT_NEAR(bank.g_at(0, 0), ref[12], 1e-12);
  EXPECT_NEAR(bank.g_at(0, 0), 0.61869, 1e-5);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(bank.g()[i], ref[i], 1e-12);
}

TEST(GaussianBank, SumsAndSymmetry) {
  for (double sigma : {0.3, 0.4, 0.5, 0.7, 0.8, 1.0, 2.0}) {
    auto b = GaussianKernelBank::build(sigma);
    const int r = b.radius();
    EXPECT_NEAR(std::accumulate(b.g().begin(), b.g().end(), 0.0), 1.0, 1e-6);
    EXPECT_NEAR(std::accumulate(b.dgx().begin(), b.dgx().end(), 0.0), 0.0, 1e-6);
    EXPECT_NEAR(std::accumulate(b.dgy().begin(), b.dgy().end(), 0.0), 0.0, 1e-6);
    for (int v = -r; v <= r; ++v)
      for (int u = -r; u <= r; ++u) {
        EXPECT_NEAR(b.g_at(u, v), b.g_at(-u, v), 1e-15);
        EXPECT_NEAR(b.g_at(u, v), b.g_at(u, -v), 1e-15);
        EXPECT_NEAR(b.dgx_at(u, v), -b.dgx_at(-u, v), 1e-15);
        EXPECT_NEAR(b.dgx_at(u, v), b.dgx_at(u, -v), 1e-15);
        EXPECT_NEAR(b.dgy_at(u, v), -b.dgy_at(u, -v), 1e-15);
        EXPECT_NEAR(b.dgy_at(u, v), b.dgx_at(v, u), 1e-15);
      }
  }
  auto b = GaussianKernelBank::build(0.5);
  EXPECT_GT(b.dgx_at(1, 0), 0.0);
  EXPECT_EQ(b.dgx_at(-1, 0), -b.dgx_at(1, 0));
}

TEST(GaussianBank, DerivativeKernelIsMeanDerivative) {
  auto b = GaussianKernelBank::build(0.7);
  const auto g = oracle_g(0.7, b.radius());
  const int r = b.radius(), n = 2 * r + 1;
  for (int v = -r; v <= r; ++v)
    for (int u = -r; u <= r; ++u)
      EXPECT_NEAR(b.dgx_at(u, v), u / 0.49 * g[static_cast<std::size_t>((v + r) * n + u + r)], 1e-12);
}

TEST(GaussianBank, Separable) {
  for (double sigma : {0.4, 0.5, 1.3}) {
    auto b = GaussianKernelBank::build(sigma);
    const int n = b.size();
    for (int v = 0; v < n; ++v)
      for (int u = 0; u < n; ++u)
        EXPECT_NEAR(b.g()[static_cast<std::size_t>(v * n + u)],
                    b.g1()[static_cast<std::size_t>(u)] * b.g1()[static_cast<std::size_t>(v)], 1e-6);
  }
}

TEST(GaussianBank, RejectsBadSigma) {
  for (double s : {0.0, -1.0, std::nan(""), static_cast<double>(INFINITY)}) {
    try {
      GaussianKernelBank::build(s);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    }
  }
}

TEST(Blur, ImpulseResponse) {
  auto b = GaussianKernelBank::build(0.5);
  auto x = Tensor::zeros({1, 1, 9, 9});
  x.at(0, 0, 4, 4) = 1.0f;
  auto y = blur_channels(x, b);
  auto dx = blur_derivative_channels(x, b, Axis::kX);
  for (int v = -2; v <= 2; ++v)
    for (int u = -2; u <= 2; ++u) {
      // Correlation flips the impulse: output (4+v, 4+u) sees kernel tap (-u, -v).
      EXPECT_NEAR(y.at(0, 0, 4 + v, 4 + u), b.g_at(-u, -v), 1e-7);
      EXPECT_NEAR(dx.at(0, 0, 4 + v, 4 + u), b.dgx_at(-u, -v), 1e-7);
    }
  EXPECT_EQ(y.at(0, 0, 0, 0), 0.0f);
}

TEST(Blur, ConstantPlane) {
  auto b = GaussianKernelBank::build(0.5);
  auto x = Tensor::zeros({1, 1, 10, 10});
  for (auto& v : x.data()) v = 1.0f;
  auto y = blur_channels(x, b);
  auto dx = blur_derivative_channels(x, b, Axis::kX);
  auto dy = blur_derivative_channels(x, b, Axis::kY);
  for (int yy = 0; yy < 10; ++yy)
    for (int xx = 0; xx < 10; ++xx) {
      const bool interior = yy >= 2 && yy < 8 && xx >= 2 && xx < 8;
      if (interior) {
        EXPECT_NEAR(y.at(0, 0, yy, xx), 1.0, 1e-6);
        EXPECT_NEAR(dx.at(0, 0, yy, xx), 0.0, 1e-5);
        EXPECT_NEAR(dy.at(0, 0, yy, xx), 0.0, 1e-5);
      } else {
        EXPECT_LT(y.at(0, 0, yy, xx), 1.0f);
      }
    }
}

TEST(Blur, MatchesNaiveCorrelation) {
  Rng rng(5);
  for (double sigma : {0.4, 0.5, 0.7}) {
    auto b = GaussianKernelBank::build(sigma);
    auto x = test::random_tensor(Dims{1, 1, 9, 9}, rng);
    auto y = blur_channels(x, b);
    auto ref = naive_correlate(x.cast<double>(), oracle_g(sigma, b.radius()), b.radius());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6);
    auto dyx = blur_derivative_channels(x, b, Axis::kX);
    auto refx = naive_correlate(x.cast<double>(), b.dgx(), b.radius());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(dyx[i], refx[i], 1e-6);
  }
}

TEST(Blur, RampDerivativeIsKernelMoment) {
  for (double sigma : {0.5, 1.0}) {
    auto b = GaussianKernelBank::build(sigma);
    const int r = b.radius();
    double moment = 0;
    for (int u = -r; u <= r; ++u) moment += u * (u / (sigma * sigma)) * b.g1()[static_cast<std::size_t>(u + r)];
    auto x = Tensor::zeros({1, 1, 16, 16});
    for (int y = 0; y < 16; ++y)
      for (int xx = 0; xx < 16; ++xx) x.at(0, 0, y, xx) = static_cast<float>(xx);
    auto d = blur_derivative_channels(x, b, Axis::kX);
    for (int y = r; y < 16 - r; ++y)
      for (int xx = r; xx < 16 - r; ++xx) EXPECT_NEAR(d.at(0, 0, y, xx), moment, 1e-4);
  }
}

// Central difference of the blur over a sub-pixel shift, on a band-limited image.
TEST(Blur, DerivativeMatchesShiftDifference) {
  const double sigma = 1.0, h = 1e-3;
  auto b = GaussianKernelBank::build(sigma);
  const int r = b.radius(), n = 32;
  auto img = [](double x, double y) { return std::sin(0.35 * x + 0.2) * std::cos(0.25 * y - 0.4); };
  auto shifted_blur = [&](int x, int y, double mu) {
    double acc = 0;
    for (int v = -r; v <= r; ++v)
      for (int u = -r; u <= r; ++u) acc += b.g_at(u, v) * img(x + u + mu, y + v);
    return acc;
  };
  auto x = TensorD::zeros({1, 1, n, n});
  for (int y = 0; y < n; ++y)
    for (int xx = 0; xx < n; ++xx) x.at(0, 0, y, xx) = img(xx, y);
  auto d = blur_derivative_channels(x, b, Axis::kX);
  double num = 0, den = 0;
  for (int y = r; y < n - r; ++y)
    for (int xx = r; xx < n - r; ++xx) {
      const double fd = (shifted_blur(xx, y, h) - shifted_blur(xx, y, -h)) / (2 * h);
      num += (fd - d.at(0, 0, y, xx)) * (fd - d.at(0, 0, y, xx));
      den += fd * fd;
    }
  EXPECT_LE(std::sqrt(num / den), 5e-2);
}

}  // namespace
}  // namespace dau
