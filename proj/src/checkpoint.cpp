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

#include "dau/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

namespace dau {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'U', 'C', 'K', 'P', 'T', '\0'};

enum Dtype : std::uint8_t { kF32 = 0, kF64 = 1, kU8 = 2 };

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32s(std::span<const float> v) {
    for (float f : v) u32(std::bit_cast<std::uint32_t>(f));
  }
  void f64s(std::span<const double> v) {
    for (double f : v) u64(std::bit_cast<std::uint64_t>(f));
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

  void need(std::size_t n) const {
    require(static_cast<std::size_t>(end_ - p_) >= n, ErrorCode::kFormat,
            "checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return *p_++;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
    p_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += 8;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* at = p_;
    p_ += n;
    return at;
  }
  bool done() const { return p_ == end_; }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

struct Blob {
  std::uint8_t dtype = 0;
  std::uint64_t count = 0;
  const std::uint8_t* payload = nullptr;
};

void write_blob(Writer& w, const std::string& name, const NamedArray::Data& data) {
  w.str(name);
  std::visit(
      [&](auto span) {
        using E = typename decltype(span)::element_type;
        if constexpr (std::is_same_v<E, float>) {
          w.u8(kF32);
          w.u64(span.size());
          w.f32s(span);
        } else if constexpr (std::is_same_v<E, double>) {
          w.u8(kF64);
          w.u64(span.size());
          w.f64s(span);
        } else {
          w.u8(kU8);
          w.u64(span.size());
          w.bytes(span.data(), span.size());
        }
      },
      data);
}

void read_blob_into(const std::string& name, const Blob& b, std::span<float> dst) {
  require(b.dtype == kF32 && b.count == dst.size(), ErrorCode::kFormat,
          "checkpoint blob '" + name + "' has unexpected type or length");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b.payload[4 * i + k]) << (8 * k);
    dst[i] = std::bit_cast<float>(v);
  }
}

void read_blob_into(const std::string& name, const Blob& b, std::span<double> dst) {
  require(b.dtype == kF64 && b.count == dst.size(), ErrorCode::kFormat,
          "checkpoint blob '" + name + "' has unexpected type or length");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b.payload[8 * i + k]) << (8 * k);
    dst[i] = std::bit_cast<double>(v);
  }
}

void read_blob_into(const std::string& name, const Blob& b, std::span<std::uint8_t> dst) {
  require(b.dtype == kU8 && b.count == dst.size(), ErrorCode::kFormat,
          "checkpoint blob '" + name + "' has unexpected type or length");
  std::memcpy(dst.data(), b.payload, dst.size());
}

std::size_t dtype_size(std::uint8_t dtype) {
  switch (dtype) {
    case kF32: return 4;
    case kF64: return 8;
    case kU8: return 1;
    default: fail(ErrorCode::kFormat, "checkpoint blob has unknown dtype " + std::to_string(dtype));
  }
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
  Model& m = const_cast<Model&>(model);
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.str(model.settings.to_config().to_text());
  w.u32(static_cast<std::uint32_t>(model.epochs_done));
  w.u64(model.iterations);
  w.u64(model.settings.train.seed);

  auto arrays = m.net.arrays();
  auto slots = m.net.params();
  require(slots.size() == model.velocity.size(), ErrorCode::kInternal,
          "optimizer state does not match network parameters");
  w.u32(static_cast<std::uint32_t>(arrays.size() + slots.size()));
  for (const auto& a : arrays) write_blob(w, a.name, a.data);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    write_blob(w, "opt." + slots[i].name, std::span<float>(m.velocity[i]));
  }
  const std::uint64_t sum = fnv1a64(w.buffer().data(), w.buffer().size());
  w.u64(sum);
  return std::move(w.buffer());
}

Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= sizeof(kMagic) + 4 + 8, ErrorCode::kFormat, "checkpoint is truncated");
  require(std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0, ErrorCode::kFormat,
          "not a DAU checkpoint (bad magic)");
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes.data() + body, 8);
  require(tail.u64() == fnv1a64(bytes.data(), body), ErrorCode::kChecksum,
          "checkpoint checksum mismatch (file is corrupted)");

  Reader r(bytes.data() + sizeof(kMagic), body - sizeof(kMagic));
  const std::uint32_t version = r.u32();
  require(version == kCheckpointVersion, ErrorCode::kVersion,
          "unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
              std::to_string(kCheckpointVersion) + ")");
  const std::string config_text = r.str();
  const std::uint32_t epochs_done = r.u32();
  const std::uint64_t iterations = r.u64();
  r.u64();  // seed; also present in the config text

  RunSettings settings = RunSettings::from_config(Config::parse(config_text, "<checkpoint>"));
  Model model = build_model(settings);
  model.epochs_done = static_cast<int>(epochs_done);
  model.iterations = iterations;

  std::map<std::string, Blob> blobs;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    Blob b;
    b.dtype = r.u8();
    b.count = r.u64();
    const std::size_t esize = dtype_size(b.dtype);
    require(b.count <= (1ULL << 40) / esize, ErrorCode::kFormat, "checkpoint blob too large");
    b.payload = r.take(static_cast<std::size_t>(b.count) * esize);
    require(blobs.emplace(name, b).second, ErrorCode::kFormat, "duplicate checkpoint blob '" + name + "'");
  }
  require(r.done(), ErrorCode::kFormat, "trailing bytes in checkpoint");

  auto find = [&](const std::string& name) -> const Blob& {
    const auto it = blobs.find(name);
    require(it != blobs.end(), ErrorCode::kFormat, "checkpoint is missing blob '" + name + "'");
    return it->second;
  };
  std::size_t used = 0;
  for (auto& a : model.net.arrays()) {
    const Blob& b = find(a.name);
    std::visit([&](auto span) { read_blob_into(a.name, b, span); }, a.data);
    ++used;
  }
  auto slots = model.net.params();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const std::string name = "opt." + slots[i].name;
    read_blob_into(name, find(name), std::span<float>(model.velocity[i]));
    ++used;
  }
  require(used == blobs.size(), ErrorCode::kFormat, "checkpoint has unknown blobs");
  model.net.refresh();
  return model;
}

void save_checkpoint(const Model& model, const std::string& path) {
  const auto bytes = serialize_checkpoint(model);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::kIo, "cannot write checkpoint: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorCode::kIo, "write failed: " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::kIo, "cannot move checkpoint into place: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot read checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace dau
