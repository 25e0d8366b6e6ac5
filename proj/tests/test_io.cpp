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
#include <cstring>
#include <functional>

#include "dau/checkpoint.hpp"
#include "dau/config.hpp"
#include "dau/dataset.hpp"
#include "test_util.hpp"

namespace dau {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInternal;
}

TEST(Cifar, FullSizeSplitsAndZeroMean) {
  test::TempDir dir("cifar_full");
  test::write_synthetic_cifar(dir.str(), 10000, 11);
  auto [train, test_split] = load_cifar10(dir.str());
  EXPECT_EQ(train.size(), 50000u);
  EXPECT_EQ(test_split.size(), 10000u);
  EXPECT_EQ(train.images.dims(), (Dims{50000, 3, 32, 32}));
  for (double m : channel_means(train.images)) EXPECT_NEAR(m, 0.0, 1e-6);
  EXPECT_EQ(test_split.channel_mean, train.channel_mean);
  for (int l : train.labels) ASSERT_TRUE(l >= 0 && l < 10);
}

TEST(Cifar, PixelScalingAndLayout) {
  test::TempDir dir("cifar_layout");
  std::vector<std::uint8_t> px(2 * kCifarPixels);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i % 251);
  std::vector<std::uint8_t> labels{7, 0};
  write_cifar10_file(dir.str("b.bin"), px, labels);
  EXPECT_EQ(test::read_bytes(dir.str("b.bin")).size(), 2 * kCifarRecordBytes);
  auto ds = read_cifar10_file(dir.str("b.bin"));
  EXPECT_EQ(ds.labels, (std::vector<int>{7, 0}));
  // record 1, green plane, row 3, column 5
  const std::size_t off = kCifarPixels + 1024 + 3 * 32 + 5;
  EXPECT_FLOAT_EQ(ds.images.at(1, 1, 3, 5), static_cast<float>(px[off]) / 255.0f);
  EXPECT_EQ(read_cifar10_file(dir.str("b.bin"), 1).size(), 1u);
}

TEST(Cifar, LimitsApply) {
  test::TempDir dir("cifar_limit");
  test::write_synthetic_cifar(dir.str(), 20, 3);
  auto [train, test_split] = load_cifar10(dir.str(), 30, 7);
  EXPECT_EQ(train.size(), 30u);
  EXPECT_EQ(test_split.size(), 7u);
}

TEST(Cifar, TruncatedFileIsFormatError) {
  test::TempDir dir("cifar_trunc");
  test::write_bytes(dir.str("t.bin"), std::vector<std::uint8_t>(3072, 1));
  EXPECT_EQ(code_of([&] { read_cifar10_file(dir.str("t.bin")); }), ErrorCode::kFormat);
}

TEST(Cifar, LabelOutOfRange) {
  test::TempDir dir("cifar_label");
  std::vector<std::uint8_t> rec(kCifarRecordBytes, 0);
  rec[0] = 11;
  test::write_bytes(dir.str("l.bin"), rec);
  EXPECT_EQ(code_of([&] { read_cifar10_file(dir.str("l.bin")); }), ErrorCode::kFormat);
}

TEST(Cifar, MissingFileIsIoError) {
  test::TempDir dir("cifar_missing");
  EXPECT_EQ(code_of([&] { read_cifar10_file(dir.str("nope.bin")); }), ErrorCode::kIo);
  EXPECT_EQ(code_of([&] { load_cifar10(dir.str()); }), ErrorCode::kIo);
}

TEST(Cifar, Slice) {
  test::TempDir dir("cifar_slice");
  test::write_synthetic_cifar(dir.str(), 10, 4);
  auto ds = read_cifar10_file(dir.str("data_batch_1.bin"));
  auto s = slice(ds, 3, 4);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(s.labels[0], ds.labels[3]);
  EXPECT_EQ(s.images.at(2, 2, 10, 11), ds.images.at(5, 2, 10, 11));
  EXPECT_THROW(slice(ds, 8, 5), Error);
}

Model trained_model() {
  RunSettings rs;
  rs.net = NetworkSpec::cifar_dau(2);
  auto m = build_model(rs);
  Rng rng(8);
  for (auto& v : m.velocity)
    for (auto& x : v) x = static_cast<float>(rng.uniform(-0.1, 0.1));
  for (int b : m.net.dau_block_ids()) {
    auto& p = m.net.dau_block(b)->mutable_parameters();
    p.active[3] = 0;
    p.w[3] = 0.0f;
  }
  m.epochs_done = 3;
  m.iterations = 123;
  return m;
}

TEST(Checkpoint, RoundTripIsBitwise) {
  test::TempDir dir("ckpt");
  auto m = trained_model();
  save_checkpoint(m, dir.str("m.ckpt"));
  auto r = load_checkpoint(dir.str("m.ckpt"));
  auto a = m.net.params(), b = r.net.params();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    ASSERT_EQ(a[i].value.size(), b[i].value.size());
    EXPECT_EQ(std::memcmp(a[i].value.data(), b[i].value.data(), a[i].value.size() * sizeof(float)), 0);
  }
  EXPECT_EQ(r.velocity, m.velocity);
  EXPECT_EQ(r.epochs_done, 3);
  EXPECT_EQ(r.iterations, 123u);
  EXPECT_EQ(r.net.dau_block(2)->parameters().active, m.net.dau_block(2)->parameters().active);
  EXPECT_EQ(serialize_checkpoint(r), serialize_checkpoint(m));
}

TEST(Checkpoint, FlippedByteFailsChecksum) {
  auto bytes = serialize_checkpoint(trained_model());
  for (std::size_t pos : {bytes.size() / 2, bytes.size() - 20, std::size_t{40}}) {
    auto bad = bytes;
    bad[pos] ^= 0x10;
    EXPECT_EQ(code_of([&] { deserialize_checkpoint(bad); }), ErrorCode::kChecksum) << pos;
  }
}

TEST(Checkpoint, OlderVersionRejected) {
  auto bytes = serialize_checkpoint(trained_model());
  const std::uint32_t old = kCheckpointVersion - 1;
  std::memcpy(bytes.data() + 8, &old, 4);
  const std::size_t body = bytes.size() - 8;
  const std::uint64_t sum = fnv1a64(bytes.data(), body);
  std::memcpy(bytes.data() + body, &sum, 8);
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(bytes); }), ErrorCode::kVersion);
}

TEST(Checkpoint, GarbageAndMissing) {
  EXPECT_EQ(code_of([] { deserialize_checkpoint({1, 2, 3}); }), ErrorCode::kFormat);
  std::vector<std::uint8_t> junk(64, 0x41);
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(junk); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { load_checkpoint("/nonexistent/dir/x.ckpt"); }), ErrorCode::kIo);
}

TEST(Checkpoint, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(nullptr, 0), 0xcbf29ce484222325ULL);
  const std::uint8_t a = 'a';
  EXPECT_EQ(fnv1a64(&a, 1), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, RoundTripsThroughText) {
  RunSettings rs;
  rs.net = NetworkSpec::cifar_dau();
  rs.train.epochs = 7;
  rs.train.lr_steps = {{3, 0.002}};
  rs.train.dmu_mode = DisplacementGradient::kInterp;
  auto back = RunSettings::from_config(rs.to_config());
  EXPECT_EQ(back.to_config().to_text(), rs.to_config().to_text());
  EXPECT_EQ(back.train.epochs, 7);
  EXPECT_EQ(back.train.lr_at(5), 0.002);
}

TEST(Config, UnknownKeyIsError) {
  auto cfg = RunSettings{}.to_config();
  cfg.set("train.learning_rat", "0.1");
  EXPECT_EQ(code_of([&] { RunSettings::from_config(cfg); }), ErrorCode::kInvalidArgument);
  EXPECT_THROW(Config::parse("no equals sign here"), Error);
}

}  // namespace
}  // namespace dau
