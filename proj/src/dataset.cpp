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

#include "dau/dataset.hpp"

#include <filesystem>
#include <fstream>

namespace dau {

void DatasetSplit::validate(int classes) const {
  require(!labels.empty() && images.dims().n == static_cast<int>(labels.size()),
          ErrorCode::kShapeMismatch, "dataset image count does not match label count");
  for (int l : labels) {
    require(l >= 0 && l < classes, ErrorCode::kFormat,
            "dataset label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
  }
}

DatasetSplit read_cifar10_file(const std::string& path, std::size_t limit) {
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), ErrorCode::kIo,
          "CIFAR-10 file not found: " + path);
  const auto bytes = static_cast<std::size_t>(std::filesystem::file_size(path, ec));
  require(!ec, ErrorCode::kIo, "cannot stat " + path);
  require(bytes > 0 && bytes % kCifarRecordBytes == 0, ErrorCode::kFormat,
          path + ": size " + std::to_string(bytes) + " is not a positive multiple of the " +
              std::to_string(kCifarRecordBytes) + "-byte record size");
  std::size_t records = bytes / kCifarRecordBytes;
  if (limit > 0) records = std::min(records, limit);

  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open " + path);
  DatasetSplit ds;
  ds.images = Tensor::zeros({static_cast<int>(records), 3, kCifarSide, kCifarSide});
  ds.labels.resize(records);
  std::vector<unsigned char> rec(kCifarRecordBytes);
  for (std::size_t r = 0; r < records; ++r) {
    in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    require(in.gcount() == static_cast<std::streamsize>(rec.size()), ErrorCode::kIo,
            path + ": short read at record " + std::to_string(r));
    require(rec[0] < kCifarClasses, ErrorCode::kFormat,
            path + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]) +
                " outside [0, 10)");
    ds.labels[r] = rec[0];
    float* dst = ds.images.data().data() + r * kCifarPixels;
    for (std::size_t i = 0; i < kCifarPixels; ++i) dst[i] = static_cast<float>(rec[1 + i]) / 255.0f;
  }
  return ds;
}

namespace {

DatasetSplit concat(std::vector<DatasetSplit>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  DatasetSplit out;
  std::vector<float> data;
  data.reserve(total * kCifarPixels);
  for (auto& p : parts) {
    data.insert(data.end(), p.images.data().begin(), p.images.data().end());
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    p = DatasetSplit{};
  }
  out.images = Tensor({static_cast<int>(total), 3, kCifarSide, kCifarSide}, std::move(data));
  return out;
}

void subtract_mean(DatasetSplit& ds, const std::vector<double>& mean) {
  const Dims d = ds.images.dims();
  for (int n = 0; n < d.n; ++n) {
    for (int c = 0; c < d.c; ++c) {
      const auto m = static_cast<float>(mean[static_cast<std::size_t>(c)]);
      for (float& v : ds.images.plane(n, c)) v -= m;
    }
  }
  ds.channel_mean.assign(mean.begin(), mean.end());
}

}  // namespace

std::vector<double> channel_means(const Tensor& images) {
  const Dims d = images.dims();
  std::vector<double> mean(static_cast<std::size_t>(d.c), 0.0);
  for (int c = 0; c < d.c; ++c) {
    double s = 0.0;
    for (int n = 0; n < d.n; ++n) {
      for (float v : images.plane(n, c)) s += v;
    }
    mean[static_cast<std::size_t>(c)] = s / (static_cast<double>(d.n) * d.plane());
  }
  return mean;
}

std::pair<DatasetSplit, DatasetSplit> load_cifar10(const std::string& dir, std::size_t train_limit,
                                                   std::size_t test_limit) {
  namespace fs = std::filesystem;
  std::error_code ec;
  require(fs::is_directory(dir, ec), ErrorCode::kIo, "data directory not found: " + dir);
  std::vector<std::string> train_files;
  for (int i = 1; i <= 5; ++i) {
    train_files.push_back((fs::path(dir) / ("data_batch_" + std::to_string(i) + ".bin")).string());
  }
  const std::string test_file = (fs::path(dir) / "test_batch.bin").string();
  for (const auto& f : train_files) {
    require(fs::is_regular_file(f, ec), ErrorCode::kIo, "CIFAR-10 file not found: " + f);
  }
  require(fs::is_regular_file(test_file, ec), ErrorCode::kIo, "CIFAR-10 file not found: " + test_file);

  std::vector<DatasetSplit> parts;
  std::size_t have = 0;
  for (const auto& f : train_files) {
    if (train_limit > 0 && have >= train_limit) break;
    parts.push_back(read_cifar10_file(f, train_limit > 0 ? train_limit - have : 0));
    have += parts.back().size();
  }
  DatasetSplit train = concat(parts);
  DatasetSplit test = read_cifar10_file(test_file, test_limit);

  const auto mean = channel_means(train.images);
  subtract_mean(train, mean);
  subtract_mean(test, mean);
  return {std::move(train), std::move(test)};
}

void write_cifar10_file(const std::string& path, std::span<const std::uint8_t> pixels,
                        std::span<const std::uint8_t> labels) {
  require(pixels.size() == labels.size() * kCifarPixels, ErrorCode::kInvalidArgument,
          "write_cifar10_file: pixel count does not match label count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    out.put(static_cast<char>(labels[r]));
    out.write(reinterpret_cast<const char*>(pixels.data() + r * kCifarPixels),
              static_cast<std::streamsize>(kCifarPixels));
  }
  require(out.good(), ErrorCode::kIo, "write failed: " + path);
}

DatasetSplit slice(const DatasetSplit& ds, std::size_t first, std::size_t count) {
  require(first + count <= ds.size() && count > 0, ErrorCode::kInvalidArgument,
          "dataset slice out of range");
  const Dims d = ds.images.dims();
  const std::size_t per = static_cast<std::size_t>(d.c) * d.plane();
  DatasetSplit out;
  std::vector<float> data(ds.images.data().begin() + static_cast<std::ptrdiff_t>(first * per),
                          ds.images.data().begin() + static_cast<std::ptrdiff_t>((first + count) * per));
  out.images = Tensor({static_cast<int>(count), d.c, d.h, d.w}, std::move(data));
  out.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(first),
                    ds.labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  out.channel_mean = ds.channel_mean;
  return out;
}

}  // namespace dau
