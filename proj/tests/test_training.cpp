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

#include "dau/checkpoint.hpp"
#include "dau/trainer.hpp"
#include "test_util.hpp"

namespace dau {
namespace {

NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.in_channels = 2;
  s.in_height = 8;
  s.in_width = 8;
  s.classes = 3;
  BlockSpec d;
  d.kind = BlockKind::kDau;
  d.features = 4;
  d.units = 2;
  d.pool = true;
  BlockSpec c;
  c.kind = BlockKind::kConv;
  c.features = 4;
  c.kernel = 3;
  c.pool = true;
  BlockSpec head;
  head.kind = BlockKind::kFc;
  head.features = 3;
  s.blocks = {d, c, head};
  return s;
}

RunSettings tiny_settings(int epochs) {
  RunSettings rs;
  rs.net = tiny_spec();
  rs.train.batch_size = 8;
  rs.train.epochs = epochs;
  rs.train.lr_steps = {{2, 0.005}};
  rs.train.seed = 17;
  return rs;
}

DatasetSplit tiny_split(int n, std::uint64_t seed) {
  Rng rng(seed);
  DatasetSplit ds;
  ds.images = test::random_tensor(Dims{n, 2, 8, 8}, rng, -0.5, 0.5);
  for (int i = 0; i < n; ++i) {
    const int cls = static_cast<int>(rng.below(3));
    ds.labels.push_back(cls);
    // A class-dependent bright patch makes the task learnable.
    for (int y = 2 * cls; y < 2 * cls + 3; ++y)
      for (int x = 2; x < 6; ++x) ds.images.at(i, cls % 2, y, x) += 1.5f;
  }
  ds.channel_mean = {0.0f, 0.0f};
  return ds;
}

std::vector<std::vector<float>> snapshot(Network& net) {
  std::vector<std::vector<float>> out;
  for (auto& s : net.params()) out.emplace_back(s.value.begin(), s.value.end());
  return out;
}

std::vector<std::uint8_t> state_bytes(const Model& m) { return serialize_checkpoint(m); }

TEST(Build, CifarDauParameterCountClosedForm) {
  auto net = Network::build(NetworkSpec::cifar_dau(4, 0.5), 1);
  const int F[] = {32, 32, 64}, S[] = {3, 32, 32};
  std::size_t dau_params = 0;
  for (int b = 1; b <= 3; ++b) {
    auto* l = net.dau_block(b);
    ASSERT_NE(l, nullptr);
    std::size_t n = 0;
    for (auto& s : l->params()) n += s.value.size();
    EXPECT_EQ(n, static_cast<std::size_t>(3 * 4 * F[b - 1] * S[b - 1] + F[b - 1]));
    dau_params += n;
  }
  EXPECT_EQ(dau_params, 3u * 4 * (32 * 3 + 32 * 32 + 64 * 32) + 32 + 32 + 64);
  EXPECT_EQ(net.dau_block(4), nullptr);
}

TEST(Build, SingleFcIsLogisticRegression) {
  NetworkSpec s;
  s.in_channels = 5;
  s.in_height = 1;
  s.in_width = 1;
  s.classes = 2;
  BlockSpec head;
  head.kind = BlockKind::kFc;
  head.features = 2;
  s.blocks = {head};
  auto net = Network::build(s, 3);
  ASSERT_EQ(net.layers().size(), 1u);
  auto* fc = dynamic_cast<FcLayer*>(net.layers()[0].get());
  ASSERT_NE(fc, nullptr);
  Rng rng(1);
  auto x = test::random_tensor(Dims{4, 5, 1, 1}, rng);
  auto y = net.forward(x, false);
  const auto& p = fc->parameters();
  for (int n = 0; n < 4; ++n)
    for (int o = 0; o < 2; ++o) {
      double acc = p.bias[static_cast<std::size_t>(o)];
      for (int i = 0; i < 5; ++i) acc += p.weights[static_cast<std::size_t>(o * 5 + i)] * x[static_cast<std::size_t>(n * 5 + i)];
      EXPECT_NEAR(y.at(n, o, 0, 0), acc, 1e-6);
    }
}

TEST(Build, SameSeedSameParameters) {
  auto a = Network::build(NetworkSpec::cifar_dau(), 42);
  auto b = Network::build(NetworkSpec::cifar_dau(), 42);
  auto c = Network::build(NetworkSpec::cifar_dau(), 43);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(Build, RejectsIncompatibleSpecs) {
  auto s = tiny_spec();
  s.blocks.back().features = 4;  // head must equal classes
  EXPECT_THROW(Network::build(s, 1), Error);
  s = tiny_spec();
  s.blocks.pop_back();
  EXPECT_THROW(Network::build(s, 1), Error);
  s = tiny_spec();
  s.blocks.clear();
  EXPECT_THROW(Network::build(s, 1), Error);
}

TEST(Sgd, ZeroGradientZeroDecayIsNoOp) {
  auto m = build_model(tiny_settings(1));
  auto before = snapshot(m.net);
  for (auto& s : m.net.params()) std::fill(s.grad.begin(), s.grad.end(), 0.0f);
  TrainConfig cfg;
  cfg.weight_decay = 0;
  sgd_step(m.net, m.velocity, cfg, 0.1);
  EXPECT_EQ(snapshot(m.net), before);
}

TEST(Sgd, SingleStepFormula) {
  auto m = build_model(tiny_settings(1));
  Rng rng(2);
  auto slots = m.net.params();
  for (auto& s : slots)
    for (auto& g : s.grad) g = static_cast<float>(rng.uniform(-0.01, 0.01));
  auto before = snapshot(m.net);
  std::vector<std::vector<float>> grads;
  for (auto& s : slots) grads.emplace_back(s.grad.begin(), s.grad.end());
  TrainConfig cfg;
  cfg.weight_decay = 0.01;
  const double lr = 0.05;
  sgd_step(m.net, m.velocity, cfg, lr);
  auto after = m.net.params();
  for (std::size_t i = 0; i < after.size(); ++i) {
    const bool disp = after[i].cls == ParamClass::kDisplacement;
    for (std::size_t j = 0; j < after[i].value.size(); ++j) {
      const double th = before[i][j];
      const double want = th - lr * (grads[i][j] + (disp ? 0.0 : 0.01 * th));
      EXPECT_NEAR(after[i].value[j], want, 1e-6) << after[i].name;
    }
  }
}

TEST(Sgd, DisplacementsAreClamped) {
  auto m = build_model(tiny_settings(1));
  for (auto& s : m.net.params()) {
    std::fill(s.grad.begin(), s.grad.end(), 0.0f);
    if (s.cls == ParamClass::kDisplacement) {
      s.grad[0] = -1000.0f;
      s.grad[1] = 1000.0f;
    }
  }
  TrainConfig cfg;
  sgd_step(m.net, m.velocity, cfg, 0.1);
  const auto& p = m.net.dau_block(1)->parameters();
  EXPECT_EQ(p.mu[0], 4.0f);
  EXPECT_EQ(p.mu[1], -4.0f);
}

TEST(Sgd, DecayNeverTouchesDisplacements) {
  auto m = build_model(tiny_settings(1));
  const auto& p = m.net.dau_block(1)->parameters();
  const auto mu0 = p.mu;
  const auto w0 = p.w;
  TrainConfig cfg;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.1;
  const double lr = 0.5;
  for (int step = 1; step <= 5; ++step) {
    for (auto& s : m.net.params()) std::fill(s.grad.begin(), s.grad.end(), 0.0f);
    sgd_step(m.net, m.velocity, cfg, lr);
    EXPECT_EQ(p.mu, mu0);
    for (std::size_t u = 0; u < w0.size(); ++u)
      EXPECT_NEAR(p.w[u], w0[u] * std::pow(1 - lr * 0.1, step), 1e-6);
  }
  cfg.decay_on_displacements = true;
  for (auto& s : m.net.params()) std::fill(s.grad.begin(), s.grad.end(), 0.0f);
  sgd_step(m.net, m.velocity, cfg, lr);
  EXPECT_NE(p.mu, mu0);
}

TEST(Sgd, NonFiniteGradientAborts) {
  auto m = build_model(tiny_settings(1));
  auto slots = m.net.params();
  for (auto& s : slots) std::fill(s.grad.begin(), s.grad.end(), 0.0f);
  slots[0].grad[0] = std::nanf("");
  try {
    sgd_step(m.net, m.velocity, TrainConfig{}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  auto m = build_model(tiny_settings(0));
  auto before = state_bytes(m);
  auto log = train(m, tiny_split(16, 1), nullptr);
  EXPECT_TRUE(log.empty());
  EXPECT_EQ(state_bytes(m), before);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  auto rs = tiny_settings(2);
  rs.train.lr_steps = {{0, 0.0}};
  auto m = build_model(rs);
  auto before = snapshot(m.net);
  auto log = train(m, tiny_split(24, 2), nullptr);
  EXPECT_EQ(log.size(), 2u);
  EXPECT_EQ(snapshot(m.net), before);
}

TEST(Train, LogsOneRowPerEpoch) {
  auto m = build_model(tiny_settings(3));
  auto train_set = tiny_split(20, 3), eval_set = tiny_split(10, 4);
  int calls = 0;
  auto log = train(m, train_set, &eval_set, [&](const EpochMetrics& e, const Model& mm) {
    ++calls;
    EXPECT_EQ(e.epoch, mm.epochs_done);
  });
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(log[0].iter, 3u);
  EXPECT_EQ(log[2].iter, 9u);
  EXPECT_EQ(log[0].lr, 0.01);
  EXPECT_EQ(log[2].lr, 0.005);
  for (const auto& e : log) {
    EXPECT_GE(e.eval_acc, 0.0);
    EXPECT_LE(e.eval_acc, 1.0);
  }
  EXPECT_EQ(metrics_csv(log).substr(0, 30), "epoch,iter,train_loss,eval_acc");
}

TEST(Train, Deterministic) {
  auto a = build_model(tiny_settings(3));
  auto b = build_model(tiny_settings(3));
  auto ds = tiny_split(30, 5);
  auto la = train(a, ds, &ds);
  auto lb = train(b, ds, &ds);
  EXPECT_EQ(metrics_csv(la), metrics_csv(lb));
  EXPECT_EQ(state_bytes(a), state_bytes(b));
}

TEST(Train, MirroringIsDeterministicAndDiffers) {
  auto rs = tiny_settings(2);
  rs.train.mirror = true;
  auto a = build_model(rs), b = build_model(rs), c = build_model(tiny_settings(2));
  auto ds = tiny_split(24, 6);
  EXPECT_EQ(metrics_csv(train(a, ds, nullptr)), metrics_csv(train(b, ds, nullptr)));
  train(c, ds, nullptr);
  EXPECT_EQ(state_bytes(a), state_bytes(b));
  EXPECT_NE(snapshot(a.net), snapshot(c.net));
}

TEST(Train, ResumeFromCheckpointIsBitIdentical) {
  test::TempDir dir("resume");
  auto ds = tiny_split(26, 7);
  auto whole = build_model(tiny_settings(4));
  auto full_log = train(whole, ds, &ds);

  auto first = build_model(tiny_settings(4));
  first.settings.train.epochs = 2;
  auto head = train(first, ds, &ds);
  save_checkpoint(first, dir.str("mid.ckpt"));
  auto resumed = load_checkpoint(dir.str("mid.ckpt"));
  resumed.settings.train.epochs = 4;
  auto tail = train(resumed, ds, &ds);

  head.insert(head.end(), tail.begin(), tail.end());
  EXPECT_EQ(metrics_csv(head), metrics_csv(full_log));
  EXPECT_EQ(snapshot(resumed.net), snapshot(whole.net));
  EXPECT_EQ(resumed.velocity, whole.velocity);
  EXPECT_EQ(resumed.iterations, whole.iterations);
}

TEST(Train, LossDecreasesOnLearnableTask) {
  auto m = build_model(tiny_settings(6));
  auto ds = tiny_split(48, 8);
  auto log = train(m, ds, &ds);
  EXPECT_LT(log.back().train_loss, log.front().train_loss);
}

TEST(Evaluate, AccuracyCounting) {
  // Five samples, three classes; rows 0, 2, 3 correct.
  Tensor logits({5, 3, 1, 1}, {2, 1, 0, 0, 1, 2, 0, 3, 1, 5, 5, 1, 0, 0, 0});
  std::vector<int> labels{0, 1, 1, 0, 2};
  EXPECT_DOUBLE_EQ(top1_accuracy(logits, labels), 3.0 / 5.0);
  std::vector<int> right{0, 2, 1, 0, 0};
  EXPECT_DOUBLE_EQ(top1_accuracy(logits, right), 1.0);
}

TEST(Evaluate, ConstantLogitsPickLowestClass) {
  auto logits = Tensor::zeros({100, 10, 1, 1});
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i % 10);
  EXPECT_DOUBLE_EQ(top1_accuracy(logits, labels), 0.1);
}

TEST(LrSchedule, Steps) {
  TrainConfig cfg;
  cfg.base_lr = 0.01;
  cfg.lr_steps = {{75, 0.001}};
  EXPECT_EQ(cfg.lr_at(0), 0.01);
  EXPECT_EQ(cfg.lr_at(74), 0.01);
  EXPECT_EQ(cfg.lr_at(75), 0.001);
  EXPECT_EQ(cfg.lr_at(99), 0.001);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.base_lr = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace dau
