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

#include "dau/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <fmt/format.h>

#include "dau/classic_layers.hpp"
#include "dau/dau_layer.hpp"
#include "dau/rng.hpp"

namespace dau {

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch, "relative_error: length mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

bool GradcheckReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass(); });
}

std::string GradcheckReport::to_text() const {
  std::string out = fmt::format("{:<22} {:>10} {:>12} {:>10}  {}\n", "check", "instances", "worst", "tol",
                                "status");
  for (const auto& c : checks) {
    out += fmt::format("{:<22} {:>10} {:>12.3e} {:>10.1e}  {}\n", c.name, c.instances, c.worst, c.tolerance,
                       c.pass() ? "ok" : "FAIL");
  }
  return out;
}

namespace {

constexpr double kDauTol = 1e-3;
constexpr double kAnalyticTol = 5e-2;
constexpr double kAdjointTol = 1e-4;
constexpr double kCorruption = 1.25;

using Vec = std::vector<double>;

Vec to_vec(std::span<const double> s) { return Vec(s.begin(), s.end()); }

// Central differences of loss() with respect to every entry of v.
Vec numeric_gradient(std::span<double> v, double h, const std::function<double()>& loss) {
  Vec g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double lp = loss();
    v[i] = keep - h;
    const double lm = loss();
    v[i] = keep;
    g[i] = (lp - lm) / (2.0 * h);
  }
  return g;
}

double half_square(const TensorD& y) {
  double s = 0.0;
  for (double v : y.data()) s += v * v;
  return 0.5 * s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TensorD random_tensor(Rng& rng, const Dims& d, double lo = -1.0, double hi = 1.0) {
  auto t = TensorD::zeros(d);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

void corrupt(Vec& g, bool on) {
  if (on) {
    for (double& v : g) v *= kCorruption;
  }
}

class Tracker {
 public:
  CheckResult& get(const std::string& name, double tol) {
    for (auto& c : checks_) {
      if (c.name == name) return c;
    }
    checks_.push_back({name, 0.0, tol, 0});
    return checks_.back();
  }
  void record(const std::string& name, double tol, double err) {
    CheckResult& c = get(name, tol);
    c.worst = std::max(c.worst, std::isfinite(err) ? err : INFINITY);
    ++c.instances;
  }
  std::vector<CheckResult> take() { return std::move(checks_); }

 private:
  std::vector<CheckResult> checks_;
};

// Sub-pixel displacement whose fractional part stays away from the bilinear
// kinks at integers, so central differences never straddle one.
double kink_free_mu(Rng& rng, int max_int) {
  const auto span = static_cast<std::uint64_t>(2 * max_int + 1);
  const double base = static_cast<double>(static_cast<int>(rng.below(span)) - max_int);
  return base + rng.uniform(0.05, 0.95) * (base >= max_int ? -1.0 : 1.0);
}

BasicDauParams<double> random_dau_params(Rng& rng, int features, int channels, int units, double sigma,
                                         int max_int) {
  auto p = BasicDauParams<double>::zeros(features, channels, units, sigma, 4.0);
  for (double& v : p.w) v = rng.uniform(-1.0, 1.0);
  for (double& v : p.bias) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.mu) v = kink_free_mu(rng, max_int);
  return p;
}

void check_dau_interp(Rng& rng, bool corrupt_grads, Tracker& t) {
  const double sigmas[] = {0.4, 0.5, 0.7};
  const double sigma = sigmas[rng.below(3)];
  const auto bank = GaussianKernelBank::build(sigma);
  const Dims d{1 + static_cast<int>(rng.below(2)), 1 + static_cast<int>(rng.below(3)),
               6 + static_cast<int>(rng.below(4)), 6 + static_cast<int>(rng.below(4))};
  auto p = random_dau_params(rng, 1 + static_cast<int>(rng.below(3)), d.c, 1 + static_cast<int>(rng.below(4)),
                             sigma, 2);
  TensorD x = random_tensor(rng, d);

  BasicDauCache<double> cache;
  const TensorD y = dau_forward(x, p, bank, &cache);
  auto g = dau_backward(y, cache, p, bank, DisplacementGradient::kInterp);
  auto loss = [&] { return half_square(dau_forward(x, p, bank)); };

  Vec dw = g.dw, dmu = g.dmu, dbias = g.dbias, dx = to_vec(g.dinput.data());
  corrupt(dw, corrupt_grads);
  corrupt(dmu, corrupt_grads);
  corrupt(dbias, corrupt_grads);
  corrupt(dx, corrupt_grads);
  t.record("dau.dw", kDauTol, relative_error(dw, numeric_gradient(p.w, 1e-3, loss)));
  t.record("dau.dmu", kDauTol, relative_error(dmu, numeric_gradient(p.mu, 1e-3, loss)));
  t.record("dau.dbias", kDauTol, relative_error(dbias, numeric_gradient(p.bias, 1e-3, loss)));
  t.record("dau.dinput", kDauTol, relative_error(dx, numeric_gradient(x.data(), 1e-3, loss)));

  // <A x, r> = <x, A^T r> for the bias-free (linear) layer.
  auto lin = p;
  std::fill(lin.bias.begin(), lin.bias.end(), 0.0);
  BasicDauCache<double> c2;
  const TensorD ay = dau_forward(x, lin, bank, &c2);
  const TensorD r = random_tensor(rng, ay.dims());
  const auto gr = dau_backward(r, c2, lin, bank, DisplacementGradient::kInterp);
  const double lhs = dot(ay.data(), r.data());
  double rhs = dot(x.data(), gr.dinput.data());
  if (corrupt_grads) rhs *= kCorruption;
  const double scale = std::max({std::fabs(lhs), std::fabs(rhs), 1e-300});
  t.record("dau.adjoint", kAdjointTol, std::fabs(lhs - rhs) / scale);
}

// Smooth, compactly supported input: noise blurred at sigma 3 then tapered to
// zero well inside the plane so border handling never matters.
TensorD smooth_windowed_input(Rng& rng, const Dims& d, int margin) {
  const auto pre = GaussianKernelBank::build(3.0);
  TensorD x = blur_channels(random_tensor(rng, d), pre);
  auto taper = [margin](int i, int len) {
    const int inner = len - 1 - 2 * margin;
    if (i < margin || i > len - 1 - margin) return 0.0;
    const double s = std::sin(std::numbers::pi * (i - margin) / inner);
    return s * s;
  };
  for (int n = 0; n < d.n; ++n) {
    for (int c = 0; c < d.c; ++c) {
      for (int yy = 0; yy < d.h; ++yy) {
        for (int xx = 0; xx < d.w; ++xx) x.at(n, c, yy, xx) *= 10.0 * taper(yy, d.h) * taper(xx, d.w);
      }
    }
  }
  return x;
}

// The continuous mixture the analytic displacement gradient differentiates:
// each unit is a Gaussian sampled at its exact (sub-pixel) center, scaled by
// the bank's normalization. Separable, zero padded.
TensorD continuous_dau_forward(const TensorD& x, const BasicDauParams<double>& p,
                               const GaussianKernelBank& bank) {
  const Dims d = x.dims();
  const double var = p.sigma * p.sigma;
  const int r = bank.radius();
  double z1 = 0.0;
  for (int u = -r; u <= r; ++u) z1 += std::exp(-u * u / (2 * var));
  auto y = TensorD::zeros({d.n, p.features, d.h, d.w});
  std::vector<double> tmp(d.plane());
  for (int n = 0; n < d.n; ++n) {
    for (int f = 0; f < p.features; ++f) {
      for (double& v : y.plane(n, f)) v = p.bias[static_cast<std::size_t>(f)];
      for (int s = 0; s < p.channels; ++s) {
        auto in = x.plane(n, s);
        for (int k = 0; k < p.units; ++k) {
          const std::size_t u = p.index(f, s, k);
          const double mx = p.mu_x(u), my = p.mu_y(u);
          const int rx = r + static_cast<int>(std::ceil(std::fabs(mx)));
          const int ry = r + static_cast<int>(std::ceil(std::fabs(my)));
          std::vector<double> kx, ky;
          for (int t = -rx; t <= rx; ++t) kx.push_back(std::exp(-(t - mx) * (t - mx) / (2 * var)) / z1);
          for (int t = -ry; t <= ry; ++t) ky.push_back(std::exp(-(t - my) * (t - my) / (2 * var)) / z1);
          for (int yy = 0; yy < d.h; ++yy) {
            for (int xx = 0; xx < d.w; ++xx) {
              double acc = 0.0;
              for (int t = -rx; t <= rx; ++t) {
                if (xx + t >= 0 && xx + t < d.w) acc += kx[static_cast<std::size_t>(t + rx)] * in[yy * d.w + xx + t];
              }
              tmp[static_cast<std::size_t>(yy * d.w + xx)] = acc;
            }
          }
          auto out = y.plane(n, f);
          for (int yy = 0; yy < d.h; ++yy) {
            for (int xx = 0; xx < d.w; ++xx) {
              double acc = 0.0;
              for (int t = -ry; t <= ry; ++t) {
                if (yy + t >= 0 && yy + t < d.h) acc += ky[static_cast<std::size_t>(t + ry)] * tmp[static_cast<std::size_t>((yy + t) * d.w + xx)];
              }
              out[static_cast<std::size_t>(yy * d.w + xx)] += p.w[u] * acc;
            }
          }
        }
      }
    }
  }
  return y;
}

void check_dau_analytic(Rng& rng, bool corrupt_grads, Tracker& t) {
  const double sigmas[] = {0.7, 1.0};
  const double sigma = sigmas[rng.below(2)];
  const auto bank = GaussianKernelBank::build(sigma);
  const int margin = 3 + bank.radius() + 1;
  const Dims d{1, 2 + static_cast<int>(rng.below(2)), 2 * margin + 20, 2 * margin + 20};
  // Enough units per instance that the normwise error is not dominated by a
  // single near-cancelling component.
  auto p = random_dau_params(rng, 2 + static_cast<int>(rng.below(2)), d.c, 4, sigma, 1);
  std::fill(p.bias.begin(), p.bias.end(), 0.0);
  TensorD x = smooth_windowed_input(rng, d, margin);

  // Smooth projection loss. Differences are taken on the continuous model;
  // the bilinear forward deviates from it at first order in frequency.
  const TensorD r = smooth_windowed_input(rng, {1, p.features, d.h, d.w}, margin);
  BasicDauCache<double> cache;
  dau_forward(x, p, bank, &cache);
  auto g = dau_backward(r, cache, p, bank, DisplacementGradient::kAnalytic);
  auto loss = [&] { return dot(continuous_dau_forward(x, p, bank).data(), r.data()); };
  Vec dmu = g.dmu;
  corrupt(dmu, corrupt_grads);
  t.record("dau.dmu_analytic", kAnalyticTol, relative_error(dmu, numeric_gradient(p.mu, 1e-3, loss)));
}

void check_conv(Rng& rng, bool corrupt_grads, Tracker& t) {
  const int ks[] = {1, 3, 5};
  const int k = ks[rng.below(3)];
  auto p = BasicConvParams<double>::zeros(1 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(3)),
                                          k, k, rng.below(2) ? (k - 1) / 2 : 0, 1 + static_cast<int>(rng.below(2)));
  for (double& v : p.weights) v = rng.uniform(-1.0, 1.0);
  for (double& v : p.bias) v = rng.uniform(-1.0, 1.0);
  TensorD x = random_tensor(rng, {1 + static_cast<int>(rng.below(2)), p.channels, 7, 8});
  const TensorD r = random_tensor(rng, p.output_dims(x.dims()));
  auto loss = [&] { return dot(conv_forward(x, p).data(), r.data()); };
  auto g = conv_backward(r, x, p);
  Vec dw = g.dweights, db = g.dbias, dx = to_vec(g.dinput.data());
  corrupt(dw, corrupt_grads);
  corrupt(db, corrupt_grads);
  corrupt(dx, corrupt_grads);
  t.record("conv.dw", kDauTol, relative_error(dw, numeric_gradient(p.weights, 1e-3, loss)));
  t.record("conv.dbias", kDauTol, relative_error(db, numeric_gradient(p.bias, 1e-3, loss)));
  t.record("conv.dinput", kDauTol, relative_error(dx, numeric_gradient(x.data(), 1e-3, loss)));
}

void check_pool_relu(Rng& rng, bool corrupt_grads, Tracker& t) {
  TensorD x = random_tensor(rng, {1 + static_cast<int>(rng.below(2)), 1 + static_cast<int>(rng.below(3)),
                                  4 + static_cast<int>(rng.below(4)), 4 + static_cast<int>(rng.below(4))});
  {
    PoolCache cache;
    const TensorD y = maxpool2_forward(x, &cache);
    const TensorD r = random_tensor(rng, y.dims());
    auto loss = [&] { return dot(maxpool2_forward(x).data(), r.data()); };
    Vec dx = to_vec(maxpool2_backward(r, cache).data());
    corrupt(dx, corrupt_grads);
    t.record("maxpool.dinput", 1e-6, relative_error(dx, numeric_gradient(x.data(), 1e-6, loss)));
  }
  {
    // Keep inputs away from the kink at zero.
    for (double& v : x.data()) v = v >= 0 ? v + 0.01 : v - 0.01;
    const TensorD r = random_tensor(rng, x.dims());
    auto loss = [&] { return dot(elementwise_relu(x).data(), r.data()); };
    Vec dx = to_vec(relu_backward(r, x).data());
    corrupt(dx, corrupt_grads);
    t.record("relu.dinput", kDauTol, relative_error(dx, numeric_gradient(x.data(), 1e-3, loss)));
  }
}

void check_batchnorm(Rng& rng, bool corrupt_grads, Tracker& t) {
  const int ch = 1 + static_cast<int>(rng.below(3));
  auto state = BasicBatchNormState<double>::identity(ch);
  for (double& v : state.scale) v = rng.uniform(0.5, 1.5);
  for (double& v : state.shift) v = rng.uniform(-0.5, 0.5);
  TensorD x = random_tensor(rng, {2 + static_cast<int>(rng.below(2)), ch, 3, 4}, -2.0, 2.0);
  BasicBatchNormCache<double> cache;
  auto scratch = state;
  const TensorD y = batchnorm_forward(x, scratch, true, &cache);
  const TensorD r = random_tensor(rng, y.dims());
  auto loss = [&] {
    auto s = state;
    return dot(batchnorm_forward(x, s, true).data(), r.data());
  };
  auto g = batchnorm_backward(r, cache, state);
  Vec ds = g.dscale, dsh = g.dshift, dx = to_vec(g.dinput.data());
  corrupt(ds, corrupt_grads);
  corrupt(dsh, corrupt_grads);
  corrupt(dx, corrupt_grads);
  t.record("bn.dscale", kDauTol, relative_error(ds, numeric_gradient(state.scale, 1e-4, loss)));
  t.record("bn.dshift", kDauTol, relative_error(dsh, numeric_gradient(state.shift, 1e-4, loss)));
  t.record("bn.dinput", kDauTol, relative_error(dx, numeric_gradient(x.data(), 1e-4, loss)));
}

void check_fc_xent(Rng& rng, bool corrupt_grads, Tracker& t) {
  const Dims d{1 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(3)), 2, 2};
  auto p = BasicFcParams<double>::zeros(d.c * d.h * d.w, 2 + static_cast<int>(rng.below(5)));
  for (double& v : p.weights) v = rng.uniform(-1.0, 1.0);
  for (double& v : p.bias) v = rng.uniform(-1.0, 1.0);
  TensorD x = random_tensor(rng, d);
  const TensorD r = random_tensor(rng, {d.n, p.outputs, 1, 1});
  auto loss = [&] { return dot(fc_forward(x, p).data(), r.data()); };
  auto g = fc_backward(r, x, p);
  Vec dw = g.dweights, db = g.dbias, dx = to_vec(g.dinput.data());
  corrupt(dw, corrupt_grads);
  corrupt(db, corrupt_grads);
  corrupt(dx, corrupt_grads);
  t.record("fc.dw", kDauTol, relative_error(dw, numeric_gradient(p.weights, 1e-3, loss)));
  t.record("fc.dbias", kDauTol, relative_error(db, numeric_gradient(p.bias, 1e-3, loss)));
  t.record("fc.dinput", kDauTol, relative_error(dx, numeric_gradient(x.data(), 1e-3, loss)));

  TensorD logits = random_tensor(rng, {d.n, p.outputs, 1, 1}, -3.0, 3.0);
  std::vector<int> labels;
  for (int n = 0; n < d.n; ++n) labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(p.outputs))));
  auto xent = [&] { return softmax_xent(logits, labels).loss; };
  Vec dl = to_vec(softmax_xent(logits, labels).dlogits.data());
  corrupt(dl, corrupt_grads);
  t.record("xent.dlogits", 1e-5, relative_error(dl, numeric_gradient(logits.data(), 1e-5, xent)));
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
  require(opts.instances >= 1, ErrorCode::kInvalidArgument, "gradcheck needs at least one instance");
  Rng rng(derive_seed(opts.seed, 0x6772616463686bULL));
  Tracker t;
  for (int i = 0; i < opts.instances; ++i) check_dau_interp(rng, opts.corrupt, t);
  if (opts.analytic) {
    for (int i = 0; i < opts.instances; ++i) check_dau_analytic(rng, opts.corrupt, t);
  }
  for (int i = 0; i < opts.instances; ++i) {
    check_conv(rng, opts.corrupt, t);
    check_pool_relu(rng, opts.corrupt, t);
    check_batchnorm(rng, opts.corrupt, t);
    check_fc_xent(rng, opts.corrupt, t);
  }
  return {t.take()};
}

bool OraclecheckReport::pass() const {
  return max_diff <= tolerance && max_diff_integer <= integer_tolerance;
}

std::string OraclecheckReport::to_text() const {
  std::size_t integer_cases = 0;
  const OracleCase* worst = nullptr;
  for (const auto& c : cases) {
    integer_cases += c.integer_mu ? 1 : 0;
    if (worst == nullptr || c.max_diff > worst->max_diff) worst = &c;
  }
  std::string out = fmt::format("cases: {} ({} integer-displacement)\n", cases.size(), integer_cases);
  out += fmt::format("max |fast - oracle| sub-pixel: {:.3e} (tol {:.1e})\n", max_diff, tolerance);
  out += fmt::format("max |fast - oracle| integer:   {:.3e} (tol {:.1e})\n", max_diff_integer,
                     integer_tolerance);
  if (worst != nullptr) {
    out += fmt::format("worst case: input {} F={} K={} sigma={} |mu|<={} margin={} diff={:.3e}\n",
                       worst->input.str(), worst->features, worst->units, worst->sigma, worst->mu_bound,
                       worst->margin, worst->max_diff);
  }
  out += pass() ? "PASS\n" : "FAIL\n";
  return out;
}

OraclecheckReport run_oraclecheck(const OraclecheckOptions& opts) {
  require(opts.cases >= 1, ErrorCode::kInvalidArgument, "oraclecheck needs at least one case");
  Rng rng(derive_seed(opts.seed, 0x6f7261636c65ULL));
  OraclecheckReport rep;
  rep.tolerance = opts.tolerance;
  rep.integer_tolerance = opts.integer_tolerance;
  const double sigmas[] = {0.4, 0.5, 0.7};
  for (int i = 0; i < opts.cases; ++i) {
    OracleCase oc;
    oc.integer_mu = opts.integer_only || i % 4 == 3;
    oc.sigma = sigmas[rng.below(3)];
    oc.input = {1 + static_cast<int>(rng.below(2)), 1 + static_cast<int>(rng.below(4)),
                6 + static_cast<int>(rng.below(7)), 6 + static_cast<int>(rng.below(7))};
    oc.features = 1 + static_cast<int>(rng.below(4));
    oc.units = 1 + static_cast<int>(rng.below(6));
    // Every tap of a unit with |mu| <= limit - 1 lies within `limit` pixels,
    // which leaves a non-empty interior.
    const int limit = (std::min(oc.input.h, oc.input.w) - 1) / 2;
    oc.mu_bound = std::min(4.0, static_cast<double>(limit - 1));

    auto p = DauLayerParams::zeros(oc.features, oc.input.c, oc.units, oc.sigma, 4.0);
    for (float& v : p.w) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (float& v : p.bias) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    for (float& v : p.mu) {
      if (oc.integer_mu) {
        const auto b = static_cast<int>(oc.mu_bound);
        v = static_cast<float>(static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * b + 1))) - b);
      } else {
        v = static_cast<float>(rng.uniform(-oc.mu_bound, oc.mu_bound));
      }
    }
    auto x = Tensor::zeros(oc.input);
    for (float& v : x.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    const auto bank = GaussianKernelBank::build(oc.sigma);
    const Tensor fast = dau_forward(x, p, bank);
    const Tensor slow = dau_forward_oracle(x, p, bank);
    oc.margin = dau_exact_margin(p);
    const Dims od = fast.dims();
    for (int n = 0; n < od.n; ++n) {
      for (int f = 0; f < od.c; ++f) {
        for (int yy = oc.margin; yy < od.h - oc.margin; ++yy) {
          for (int xx = oc.margin; xx < od.w - oc.margin; ++xx) {
            const double diff = std::fabs(static_cast<double>(fast.at(n, f, yy, xx)) -
                                          static_cast<double>(slow.at(n, f, yy, xx)));
            oc.max_diff = std::max(oc.max_diff, diff);
          }
        }
      }
    }
    double& agg = oc.integer_mu ? rep.max_diff_integer : rep.max_diff;
    agg = std::max(agg, oc.max_diff);
    rep.cases.push_back(oc);
  }
  return rep;
}

}  // namespace dau
