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

#include "dau/dau_layer.hpp"
#include "dau/gaussian_bank.hpp"
#include "dau/parallel.hpp"
#include "test_util.hpp"

namespace dau {
namespace {

// Straight from the definition: y(x) = b + sum_k w_k * bilinear(blur(x), p + mu_k),
// with the blur and the bilinear read done by hand in double.
TensorD naive_dau(const TensorD& x, const BasicDauParams<double>& p, double sigma) {
  const Dims d = x.dims();
  const int r = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<double> g1;
  for (int u = -r; u <= r; ++u) g1.push_back(std::exp(-u * u / (2 * sigma * sigma)));
  double s = 0;
  for (double v : g1) s += v;
  for (double& v : g1) v /= s;
  auto blurred = TensorD::zeros(d);
  for (int n = 0; n < d.n; ++n)
    for (int c = 0; c < d.c; ++c)
      for (int y = 0; y < d.h; ++y)
        for (int xx = 0; xx < d.w; ++xx) {
          double acc = 0;
          for (int v = -r; v <= r; ++v)
            for (int u = -r; u <= r; ++u) {
              const int sy = y + v, sx = xx + u;
              if (sy >= 0 && sy < d.h && sx >= 0 && sx < d.w)
                acc += g1[static_cast<std::size_t>(u + r)] * g1[static_cast<std::size_t>(v + r)] * x.at(n, c, sy, sx);
            }
          blurred.at(n, c, y, xx) = acc;
        }
  auto read = [&](int n, int c, int y, int xx) {
    return (y < 0 || y >= d.h || xx < 0 || xx >= d.w) ? 0.0 : blurred.at(n, c, y, xx);
  };
  auto out = TensorD::zeros({d.n, p.features, d.h, d.w});
  for (int n = 0; n < d.n; ++n)
    for (int f = 0; f < p.features; ++f)
      for (int y = 0; y < d.h; ++y)
        for (int xx = 0; xx < d.w; ++xx) {
          double acc = p.bias[static_cast<std::size_t>(f)];
          for (int c = 0; c < p.channels; ++c)
            for (int k = 0; k < p.units; ++k) {
              const std::size_t u = p.index(f, c, k);
              if (!p.active[u]) continue;
              const double mx = p.mu[2 * u], my = p.mu[2 * u + 1];
              const int bx = static_cast<int>(std::floor(mx)), by = static_cast<int>(std::floor(my));
              const double fx = mx - bx, fy = my - by;
              const double v = (1 - fx) * (1 - fy) * read(n, c, y + by, xx + bx) +
                               fx * (1 - fy) * read(n, c, y + by, xx + bx + 1) +
                               (1 - fx) * fy * read(n, c, y + by + 1, xx + bx) +
                               fx * fy * read(n, c, y + by + 1, xx + bx + 1);
              acc += p.w[u] * v;
            }
          out.at(n, f, y, xx) = acc;
        }
  return out;
}

template <typename T>
BasicDauParams<T> random_params(int f, int s, int k, double sigma, double rd, double mu_bound, Rng& rng) {
  auto p = BasicDauParams<T>::zeros(f, s, k, sigma, rd);
  for (auto& w : p.w) w = static_cast<T>(rng.uniform(-1, 1));
  for (auto& m : p.mu) m = static_cast<T>(rng.uniform(-mu_bound, mu_bound));
  for (auto& b : p.bias) b = static_cast<T>(rng.uniform(-0.5, 0.5));
  return p;
}

TEST(Bilinear, Examples) {
  auto t = bilinear_weights(0, 0);
  EXPECT_EQ(t.base_x, 0);
  EXPECT_EQ(t.base_y, 0);
  EXPECT_EQ(t.a[0][0], 1.0);
  EXPECT_EQ(t.a[1][0], 0.0);
  EXPECT_EQ(t.a[0][1], 0.0);
  EXPECT_EQ(t.a[1][1], 0.0);

  t = bilinear_weights(0.5, 0.5);
  for (auto& row : t.a)
    for (double v : row) EXPECT_EQ(v, 0.25);

  t = bilinear_weights(-1.25, 2.0);
  EXPECT_EQ(t.base_x, -2);
  EXPECT_EQ(t.base_y, 2);
  EXPECT_EQ(t.fx, 0.75);
  EXPECT_EQ(t.a[0][0], 0.25);
  EXPECT_EQ(t.a[0][1], 0.0);
  EXPECT_EQ(t.a[1][0], 0.75);
  EXPECT_EQ(t.a[1][1], 0.0);
}

TEST(Bilinear, WeightsSumToOne) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto t = bilinear_weights(rng.uniform(-8, 8), rng.uniform(-8, 8));
    EXPECT_NEAR(t.a[0][0] + t.a[0][1] + t.a[1][0] + t.a[1][1], 1.0, 1e-15);
    EXPECT_GE(t.fx, 0.0);
    EXPECT_LT(t.fx, 1.0);
  }
}

TEST(DauForward, IdentityUnitIsBlur) {
  Rng rng(1);
  auto x = test::random_tensor(Dims{2, 1, 7, 8}, rng);
  auto p = DauLayerParams::zeros(1, 1, 1, 0.5, 4.0);
  p.w[0] = 1.0f;
  auto bank = GaussianKernelBank::build(0.5);
  EXPECT_EQ(dau_forward(x, p, bank).storage(), blur_channels(x, bank).storage());
}

TEST(DauForward, BiasOnly) {
  Rng rng(1);
  auto x = test::random_tensor(Dims{1, 2, 6, 6}, rng);
  auto p = random_params<float>(3, 2, 4, 0.5, 4.0, 3.0, rng);
  for (auto& w : p.w) w = 0.0f;
  p.bias = {0.5f, -2.0f, 0.25f};
  auto y = dau_forward(x, p, GaussianKernelBank::build(0.5));
  for (int f = 0; f < 3; ++f)
    for (float v : y.plane(0, f)) EXPECT_EQ(v, p.bias[static_cast<std::size_t>(f)]);
}

TEST(DauForward, MatchesNaiveEverywhere) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const double sigma = std::vector<double>{0.4, 0.5, 0.7}[static_cast<std::size_t>(trial % 3)];
    auto x = test::random_tensor(Dims{2, 2, 9, 9}, rng);
    auto p = random_params<float>(3, 2, 4, sigma, 4.0, 4.0, rng);
    auto y = dau_forward(x, p, GaussianKernelBank::build(sigma));
    auto ref = naive_dau(x.cast<double>(), p.cast<double>(), sigma);
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-5) << trial << " " << i;
  }
}

TEST(DauForward, MatchesExplicitFilterOracleInInterior) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const double sigma = std::vector<double>{0.4, 0.5, 0.7}[static_cast<std::size_t>(trial % 3)];
    auto x = test::random_tensor(Dims{1, 2, 16, 16}, rng);
    auto p = random_params<float>(3, 2, 4, sigma, 4.0, 4.0, rng);
    auto bank = GaussianKernelBank::build(sigma);
    auto y = dau_forward(x, p, bank);
    auto o = dau_forward_oracle(x, p, bank);
    const int m = dau_exact_margin(p);
    ASSERT_LT(2 * m, 16);
    for (int f = 0; f < 3; ++f)
      for (int yy = m; yy < 16 - m; ++yy)
        for (int xx = m; xx < 16 - m; ++xx) ASSERT_NEAR(y.at(0, f, yy, xx), o.at(0, f, yy, xx), 1e-5);
  }
}

TEST(DauOracle, IntegerShift) {
  Rng rng(4);
  auto x = test::random_tensor(Dims{1, 1, 10, 10}, rng);
  auto p = DauLayerParams::zeros(1, 1, 1, 0.5, 4.0);
  p.w[0] = 1.0f;
  p.mu_x(0) = 2.0f;
  auto bank = GaussianKernelBank::build(0.5);
  auto b = blur_channels(x, bank);
  auto o = dau_forward_oracle(x, p, bank);
  auto y = dau_forward(x, p, bank);
  for (int yy = 0; yy < 10; ++yy)
    for (int xx = 0; xx < 10; ++xx) {
      const float want = xx + 2 < 10 ? b.at(0, 0, yy, xx + 2) : 0.0f;
      EXPECT_EQ(y.at(0, 0, yy, xx), want);
      if (xx >= 3 && xx < 7 && yy >= 3 && yy < 7) EXPECT_NEAR(o.at(0, 0, yy, xx), want, 1e-6);
    }
}

TEST(DauOracle, OpposingUnitsCancel) {
  Rng rng(6);
  auto x = test::random_tensor(Dims{1, 1, 8, 8}, rng);
  auto p = DauLayerParams::zeros(1, 1, 2, 0.5, 4.0);
  p.w = {0.7f, -0.7f};
  p.mu = {1.3f, -0.6f, 1.3f, -0.6f};
  p.bias = {0.125f};
  auto bank = GaussianKernelBank::build(0.5);
  const auto o = dau_forward_oracle(x, p, bank);
  const auto y = dau_forward(x, p, bank);
  for (float v : o.data()) EXPECT_EQ(v, 0.125f);
  for (float v : y.data()) EXPECT_NEAR(v, 0.125f, 1e-6);
}

TEST(DauForward, IntegerDisplacementIsShiftedBlur) {
  Rng rng(8);
  auto x = test::random_tensor(Dims{1, 1, 9, 9}, rng);
  auto bank = GaussianKernelBank::build(0.7);
  auto b = blur_channels(x, bank);
  for (int mx = -3; mx <= 3; ++mx)
    for (int my = -3; my <= 3; ++my) {
      auto p = DauLayerParams::zeros(1, 1, 1, 0.7, 4.0);
      p.w[0] = 1.0f;
      p.mu = {static_cast<float>(mx), static_cast<float>(my)};
      auto t = bilinear_weights(mx, my);
      EXPECT_EQ(t.a[0][0], 1.0);
      auto y = dau_forward(x, p, bank);
      for (int yy = 0; yy < 9; ++yy)
        for (int xx = 0; xx < 9; ++xx) {
          const int sy = yy + my, sx = xx + mx;
          const float want = (sy >= 0 && sy < 9 && sx >= 0 && sx < 9) ? b.at(0, 0, sy, sx) : 0.0f;
          ASSERT_EQ(y.at(0, 0, yy, xx), want);
        }
    }
}

TEST(DauForward, Linearity) {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    auto x1 = test::random_tensor(Dims{1, 2, 8, 8}, rng);
    auto x2 = test::random_tensor(Dims{1, 2, 8, 8}, rng);
    auto p = random_params<float>(2, 2, 3, 0.5, 4.0, 3.0, rng);
    auto bank = GaussianKernelBank::build(0.5);
    const float a = static_cast<float>(rng.uniform(-2, 2)), b = static_cast<float>(rng.uniform(-2, 2));
    auto mix = Tensor::zeros(x1.dims());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x1[i] + b * x2[i];
    auto y = dau_forward(mix, p, bank), y1 = dau_forward(x1, p, bank), y2 = dau_forward(x2, p, bank);
    const Dims d = y.dims();
    for (int f = 0; f < d.c; ++f)
      for (int i = 0; i < d.h * d.w; ++i) {
        const double bias = p.bias[static_cast<std::size_t>(f)];
        const double want = a * y1.plane(0, f)[i] + b * y2.plane(0, f)[i] - (a + b - 1) * bias;
        EXPECT_NEAR(y.plane(0, f)[i], want, 1e-5);
      }
  }
}

TEST(DauForward, RejectsChannelMismatch) {
  auto p = DauLayerParams::zeros(1, 2, 1, 0.5, 4.0);
  try {
    dau_forward(Tensor::zeros({1, 3, 4, 4}), p, GaussianKernelBank::build(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(DauBackward, ZeroUpstream) {
  Rng rng(3);
  auto x = test::random_tensor(Dims{2, 2, 7, 7}, rng);
  auto p = random_params<float>(3, 2, 4, 0.5, 4.0, 3.0, rng);
  auto bank = GaussianKernelBank::build(0.5);
  DauCache cache;
  auto y = dau_forward(x, p, bank, &cache);
  for (auto mode : {DisplacementGradient::kInterp, DisplacementGradient::kAnalytic}) {
    auto g = dau_backward(Tensor::zeros(y.dims()), cache, p, bank, mode);
    for (float v : g.dw) EXPECT_EQ(v, 0.0f);
    for (float v : g.dmu) EXPECT_EQ(v, 0.0f);
    for (float v : g.dbias) EXPECT_EQ(v, 0.0f);
    for (float v : g.dinput.data()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(DauBackward, ImpulseWeightGradientIsSample) {
  Rng rng(5);
  auto x = test::random_tensor(Dims{1, 1, 9, 9}, rng);
  auto p = DauLayerParams::zeros(1, 1, 1, 0.5, 4.0);
  p.w[0] = 0.8f;
  p.mu = {1.25f, -0.5f};
  auto bank = GaussianKernelBank::build(0.5);
  DauCache cache;
  auto y = dau_forward(x, p, bank, &cache);
  auto b = blur_channels(x, bank);
  const int y0 = 4, x0 = 3;
  auto dl = Tensor::zeros(y.dims());
  dl.at(0, 0, y0, x0) = 1.0f;
  auto g = dau_backward(dl, cache, p, bank, DisplacementGradient::kInterp);
  // Sample of the blurred map at (x0 + 1.25, y0 - 0.5).
  const double fx = 0.25, fy = 0.5;
  const double want = (1 - fx) * (1 - fy) * b.at(0, 0, y0 - 1, x0 + 1) + fx * (1 - fy) * b.at(0, 0, y0 - 1, x0 + 2) +
                      (1 - fx) * fy * b.at(0, 0, y0, x0 + 1) + fx * fy * b.at(0, 0, y0, x0 + 2);
  EXPECT_NEAR(g.dw[0], want, 1e-6);
  EXPECT_EQ(g.dbias[0], 1.0f);
}

double half_sq(const TensorD& y) {
  double s = 0;
  for (double v : y.data()) s += 0.5 * v * v;
  return s;
}

double rel(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(std::max(na, nb));
  return den == 0 ? 0 : std::sqrt(num) / den;
}

// Interp-mode gradients against central differences of 0.5 * ||y||^2.
TEST(DauBackward, FiniteDifferences) {
  Rng rng(21);
  const double h = 1e-3;
  for (int trial = 0; trial < 5; ++trial) {
    auto x = test::random_tensor<double>(Dims{2, 2, 6, 7}, rng);
    auto p = random_params<double>(2, 2, 3, 0.5, 4.0, 2.5, rng);
    // Keep fractions away from the bilinear kinks at integers.
    for (auto& m : p.mu) {
      const double f = m - std::floor(m);
      if (f < 0.05 || f > 0.95) m += 0.1;
    }
    auto bank = GaussianKernelBank::build(0.5);
    BasicDauCache<double> cache;
    auto y = dau_forward(x, p, bank, &cache);
    auto g = dau_backward(y, cache, p, bank, DisplacementGradient::kInterp);
    auto loss = [&](const BasicDauParams<double>& q, const TensorD& in) { return half_sq(dau_forward(in, q, bank)); };
    auto fd_vec = [&](std::vector<double> BasicDauParams<double>::*field) {
      std::vector<double> out;
      for (std::size_t i = 0; i < (p.*field).size(); ++i) {
        auto a = p, b = p;
        (a.*field)[i] += h;
        (b.*field)[i] -= h;
        out.push_back((loss(a, x) - loss(b, x)) / (2 * h));
      }
      return out;
    };
    EXPECT_LE(rel(g.dw, fd_vec(&BasicDauParams<double>::w)), 1e-3);
    EXPECT_LE(rel(g.dmu, fd_vec(&BasicDauParams<double>::mu)), 1e-3);
    EXPECT_LE(rel(g.dbias, fd_vec(&BasicDauParams<double>::bias)), 1e-3);
    std::vector<double> fdx;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto a = x, b = x;
      a[i] += h;
      b[i] -= h;
      fdx.push_back((loss(p, a) - loss(p, b)) / (2 * h));
    }
    EXPECT_LE(rel(g.dinput.storage(), fdx), 1e-3);
  }
}

TEST(DauBackward, AdjointIdentity) {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = test::random_tensor(Dims{2, 3, 8, 9}, rng);
    auto p = random_params<float>(2, 3, 4, 0.5, 4.0, 4.0, rng);
    for (auto& b : p.bias) b = 0;
    auto bank = GaussianKernelBank::build(0.5);
    DauCache cache;
    auto y = dau_forward(x, p, bank, &cache);
    auto u = test::random_tensor(y.dims(), rng);
    auto g = dau_backward(u, cache, p, bank, DisplacementGradient::kInterp);
    double lhs = 0, rhs = 0, scale = 0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += static_cast<double>(y[i]) * u[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += static_cast<double>(x[i]) * g.dinput[i];
    for (std::size_t i = 0; i < y.size(); ++i) scale += std::abs(static_cast<double>(y[i]) * u[i]);
    EXPECT_LE(std::abs(lhs - rhs) / scale, 1e-4);
  }
}

TEST(DauBackward, InactiveUnitsGetNoGradient) {
  Rng rng(41);
  auto x = test::random_tensor(Dims{1, 1, 8, 8}, rng);
  auto p = random_params<float>(1, 1, 3, 0.5, 4.0, 2.0, rng);
  p.active[1] = 0;
  p.w[1] = 0;
  auto bank = GaussianKernelBank::build(0.5);
  DauCache cache;
  auto y = dau_forward(x, p, bank, &cache);
  auto g = dau_backward(y, cache, p, bank, DisplacementGradient::kAnalytic);
  EXPECT_EQ(g.dw[1], 0.0f);
  EXPECT_EQ(g.dmu[2], 0.0f);
  EXPECT_EQ(g.dmu[3], 0.0f);
}

TEST(DauBackward, ThreadCountDoesNotChangeResults) {
  Rng rng(50);
  auto x = test::random_tensor(Dims{5, 3, 8, 8}, rng);
  auto p = random_params<float>(4, 3, 4, 0.5, 4.0, 4.0, rng);
  auto bank = GaussianKernelBank::build(0.5);
  auto run = [&](int threads) {
    set_num_threads(threads);
    DauCache cache;
    auto y = dau_forward(x, p, bank, &cache);
    auto g = dau_backward(y, cache, p, bank, DisplacementGradient::kAnalytic);
    set_num_threads(1);
    return std::make_pair(y, g);
  };
  auto [y1, g1] = run(1);
  auto [y3, g3] = run(3);
  EXPECT_EQ(y1.storage(), y3.storage());
  EXPECT_EQ(g1.dw, g3.dw);
  EXPECT_EQ(g1.dmu, g3.dmu);
  EXPECT_EQ(g1.dinput.storage(), g3.dinput.storage());
}

TEST(ScaleDisplacements, Examples) {
  auto p = DauLayerParams::zeros(1, 1, 1, 0.5, 4.0);
  p.w[0] = 0.3f;
  p.bias[0] = 0.1f;
  p.mu = {1.5f, -0.5f};
  auto q = scale_displacements(p, 2.0);
  EXPECT_EQ(q.mu, (std::vector<float>{3.0f, -1.0f}));
  EXPECT_EQ(q.max_displacement, 8.0);
  EXPECT_EQ(q.w, p.w);
  EXPECT_EQ(q.bias, p.bias);

  auto same = scale_displacements(p, 1.0);
  EXPECT_EQ(same.mu, p.mu);
  EXPECT_EQ(same.max_displacement, p.max_displacement);

  Rng rng(2);
  auto r = random_params<float>(4, 3, 4, 0.5, 4.0, 4.0, rng);
  auto r4 = scale_displacements(r, 4.0);
  for (std::size_t i = 0; i < r.mu.size(); ++i) EXPECT_EQ(r4.mu[i], 4.0f * r.mu[i]);
  EXPECT_EQ(r4.max_displacement, 16.0);

  EXPECT_THROW(scale_displacements(p, 0.0), Error);
  EXPECT_THROW(scale_displacements(p, -2.0), Error);
}

TEST(DauParams, ClampToBound) {
  auto p = DauLayerParams::zeros(1, 1, 2, 0.5, 4.0);
  p.mu = {5.0f, -4.5f, 3.9f, -9.0f};
  p.clamp_displacements();
  EXPECT_EQ(p.mu, (std::vector<float>{4.0f, -4.0f, 3.9f, -4.0f}));
}

TEST(DauInit, GridPositions) {
  using G = std::vector<std::pair<double, double>>;
  EXPECT_EQ(initial_displacement_grid(1), (G{{0, 0}}));
  EXPECT_EQ(initial_displacement_grid(2), (G{{-1.25, 0}, {1.25, 0}}));
  EXPECT_EQ(initial_displacement_grid(4), (G{{-1.25, -1.25}, {1.25, -1.25}, {-1.25, 1.25}, {1.25, 1.25}}));
  EXPECT_EQ(initial_displacement_grid(6),
            (G{{-1.25, -1.25}, {0, -1.25}, {1.25, -1.25}, {-1.25, 1.25}, {0, 1.25}, {1.25, 1.25}}));
  EXPECT_EQ(initial_displacement_grid(9).size(), 9u);

  Rng rng(1);
  auto p = DauLayerParams::zeros(8, 3, 4, 0.5, 4.0);
  initialize_dau_params(p, rng);
  const double limit = std::sqrt(3.0 / 12.0);
  const auto grid = initial_displacement_grid(4);
  for (int f = 0; f < 8; ++f)
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 4; ++k) {
        const auto u = p.index(f, s, k);
        EXPECT_EQ(p.mu_x(u), static_cast<float>(grid[static_cast<std::size_t>(k)].first));
        EXPECT_EQ(p.mu_y(u), static_cast<float>(grid[static_cast<std::size_t>(k)].second));
        EXPECT_LE(std::abs(p.w[u]), limit);
      }
  for (float b : p.bias) EXPECT_EQ(b, 0.0f);
}

}  // namespace
}  // namespace dau
