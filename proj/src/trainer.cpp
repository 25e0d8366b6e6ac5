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

#include "dau/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace dau {

Model Model::clone() const {
  Model m;
  m.settings = settings;
  m.net = net.clone();
  m.velocity = velocity;
  m.epochs_done = epochs_done;
  m.iterations = iterations;
  return m;
}

Model build_model(const RunSettings& settings) {
  settings.train.validate();
  Model m;
  m.settings = settings;
  m.net = Network::build(settings.net, settings.train.seed);
  m.net.set_displacement_gradient(settings.train.dmu_mode);
  for (const auto& slot : m.net.params()) m.velocity.emplace_back(slot.value.size(), 0.0f);
  return m;
}

void sgd_step(Network& net, std::vector<std::vector<float>>& velocity, const TrainConfig& cfg,
              double lr) {
  auto slots = net.params();
  require(slots.size() == velocity.size(), ErrorCode::kShapeMismatch,
          "optimizer state does not match the network parameters");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const ParamSlot& s = slots[i];
    require(velocity[i].size() == s.value.size(), ErrorCode::kShapeMismatch,
            "optimizer state size mismatch for " + s.name);
    for (std::size_t j = 0; j < s.grad.size(); ++j) {
      if (!std::isfinite(s.grad[j])) {
        fail(ErrorCode::kNumeric, fmt::format("non-finite gradient {} in {}[{}]", s.grad[j], s.name, j));
      }
    }
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const ParamSlot& s = slots[i];
    const bool disp = s.cls == ParamClass::kDisplacement;
    const double decay = disp && !cfg.decay_on_displacements ? 0.0 : cfg.weight_decay;
    const double rate = disp ? lr * cfg.displacement_lr_mult : lr;
    auto& v = velocity[i];
    for (std::size_t j = 0; j < s.value.size(); ++j) {
      const double g = static_cast<double>(s.grad[j]) + decay * s.value[j];
      v[j] = static_cast<float>(cfg.momentum * v[j] - rate * g);
      s.value[j] += v[j];
    }
  }
  for (int b : net.dau_block_ids()) {
    DauLayerParams& p = net.dau_block(b)->mutable_parameters();
    p.clamp_displacements();
    for (std::size_t u = 0; u < p.unit_count(); ++u) {
      if (!p.active[u]) p.w[u] = 0.0f;
    }
  }
}

namespace {

Tensor gather_batch(const DatasetSplit& ds, const std::vector<std::size_t>& order,
                    std::size_t first, std::size_t count, const std::vector<std::uint8_t>* mirror,
                    std::vector<int>& labels) {
  const Dims d = ds.images.dims();
  const std::size_t per = static_cast<std::size_t>(d.c) * d.plane();
  auto batch = Tensor::zeros({static_cast<int>(count), d.c, d.h, d.w});
  labels.resize(count);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t idx = order[first + b];
    labels[b] = ds.labels[idx];
    const float* src = ds.images.data().data() + idx * per;
    float* dst = batch.data().data() + b * per;
    if (mirror != nullptr && (*mirror)[first + b]) {
      for (int c = 0; c < d.c; ++c) {
        for (int y = 0; y < d.h; ++y) {
          const float* row = src + (static_cast<std::size_t>(c) * d.h + y) * d.w;
          float* out = dst + (static_cast<std::size_t>(c) * d.h + y) * d.w;
          for (int x = 0; x < d.w; ++x) out[x] = row[d.w - 1 - x];
        }
      }
    } else {
      std::copy(src, src + per, dst);
    }
  }
  return batch;
}

}  // namespace

std::vector<EpochMetrics> train(Model& model, const DatasetSplit& train_set,
                                const DatasetSplit* eval_set, const EpochCallback& on_epoch) {
  const TrainConfig& cfg = model.settings.train;
  cfg.validate();
  std::vector<EpochMetrics> log;
  if (model.epochs_done >= cfg.epochs) return log;
  require(train_set.size() > 0, ErrorCode::kInvalidArgument, "training set is empty");
  train_set.validate(model.settings.net.classes);
  model.net.set_displacement_gradient(cfg.dmu_mode);

  const std::size_t n = train_set.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<int> labels;
  for (int epoch = model.epochs_done; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    std::vector<std::uint8_t> mirror;
    if (cfg.mirror) {
      Rng mirror_rng(derive_seed(cfg.seed ^ 0x6d6972726f72ULL, static_cast<std::uint64_t>(epoch)));
      mirror.resize(n);
      for (auto& m : mirror) m = mirror_rng.uniform() < 0.5 ? 1 : 0;
    }

    double loss_sum = 0.0;
    for (std::size_t first = 0; first < n; first += bs) {
      const std::size_t count = std::min(bs, n - first);
      Tensor batch = gather_batch(train_set, order, first, count, cfg.mirror ? &mirror : nullptr, labels);
      Tensor logits = model.net.forward(batch, true);
      auto loss = softmax_xent(logits, labels);
      require(std::isfinite(loss.loss), ErrorCode::kNumeric,
              fmt::format("non-finite training loss at epoch {} iteration {}", epoch + 1,
                          model.iterations + 1));
      model.net.backward(loss.dlogits);
      sgd_step(model.net, model.velocity, cfg, lr);
      loss_sum += loss.loss * static_cast<double>(count);
      ++model.iterations;
    }
    model.epochs_done = epoch + 1;

    EpochMetrics m;
    m.epoch = model.epochs_done;
    m.iter = model.iterations;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.eval_acc = eval_set != nullptr ? evaluate(model.net, *eval_set)
                                     : std::numeric_limits<double>::quiet_NaN();
    m.lr = lr;
    log.push_back(m);
    if (on_epoch) on_epoch(m, model);
  }
  return log;
}

Tensor predict_logits(Network& net, const Tensor& images, int batch_size) {
  const Dims d = images.dims();
  const std::size_t per = static_cast<std::size_t>(d.c) * d.plane();
  std::vector<float> out;
  int classes = 0;
  for (int first = 0; first < d.n; first += batch_size) {
    const int count = std::min(batch_size, d.n - first);
    std::vector<float> chunk(images.data().begin() + static_cast<std::ptrdiff_t>(first * per),
                             images.data().begin() + static_cast<std::ptrdiff_t>((first + count) * per));
    Tensor logits = net.forward(Tensor({count, d.c, d.h, d.w}, std::move(chunk)), false);
    classes = logits.dims().c;
    out.insert(out.end(), logits.data().begin(), logits.data().end());
  }
  return Tensor({d.n, classes, 1, 1}, std::move(out));
}

double top1_accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const Dims d = logits.dims();
  require(static_cast<std::size_t>(d.n) == labels.size(), ErrorCode::kShapeMismatch,
          "accuracy: label count does not match logits");
  std::size_t correct = 0;
  for (int n = 0; n < d.n; ++n) {
    int best = 0;
    for (int c = 1; c < d.c; ++c) {
      if (logits.at(n, c, 0, 0) > logits.at(n, best, 0, 0)) best = c;
    }
    if (best == labels[static_cast<std::size_t>(n)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.n);
}

double evaluate(Network& net, const DatasetSplit& ds, int batch_size) {
  require(ds.size() > 0, ErrorCode::kInvalidArgument, "evaluation set is empty");
  return top1_accuracy(predict_logits(net, ds.images, batch_size), ds.labels);
}

std::string metrics_csv_header() { return "epoch,iter,train_loss,eval_acc,lr\n"; }

std::string metrics_csv_row(const EpochMetrics& m) {
  return fmt::format("{},{},{:.9g},{:.9g},{:.9g}\n", m.epoch, m.iter, m.train_loss, m.eval_acc, m.lr);
}

std::string metrics_csv(const std::vector<EpochMetrics>& log) {
  std::string out = metrics_csv_header();
  for (const auto& m : log) out += metrics_csv_row(m);
  return out;
}

}  // namespace dau
