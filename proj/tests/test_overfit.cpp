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

#include "dau/trainer.hpp"
#include "test_util.hpp"

namespace dau {
namespace {

// 64 random-noise images with random labels can only be fit by memorization.
TEST(Overfit, SixtyFourImagesTwoHundredEpochs) {
  Rng rng(12);
  DatasetSplit ds;
  ds.images = test::random_tensor(Dims{64, 3, 32, 32}, rng, -0.5, 0.5);
  for (int i = 0; i < 64; ++i) ds.labels.push_back(static_cast<int>(rng.below(10)));
  ds.channel_mean = {0, 0, 0};

  RunSettings rs;
  rs.net = NetworkSpec::cifar_dau(4, 0.5);
  rs.train.batch_size = 16;
  rs.train.epochs = 200;
  rs.train.weight_decay = 0.0;
  rs.train.seed = 4;
  auto m = build_model(rs);
  const auto log = train(m, ds, nullptr);
  ASSERT_EQ(log.size(), 200u);
  const double acc = evaluate(m.net, ds);
  EXPECT_GE(acc, 0.99) << "final train loss " << log.back().train_loss;
}

}  // namespace
}  // namespace dau
