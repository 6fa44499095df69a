// Copyright 2026 The ds2ta-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "ds2ta/train.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ds2ta/error.h"
#include "ds2ta/parallel.h"
#include "ds2ta/rng.h"
#include "json.hpp"

namespace ds2ta {

void TrainConfig::Validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr >= 0)) throw ConfigError("lr must be >= 0");
  if (!(lr_min >= 0)) throw ConfigError("lr_min must be >= 0");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) throw ConfigError("adam_eps must be positive");
  if (!(special_lr_mult >= 0)) throw ConfigError("special_lr_mult must be >= 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

KeyValueText TrainConfig::ToText() const {
  KeyValueText kv;
  kv.SetInt("epochs", epochs);
  kv.SetInt("batch_size", batch_size);
  kv.SetDouble("lr", lr);
  kv.SetDouble("lr_min", lr_min);
  kv.SetDouble("weight_decay", weight_decay);
  kv.SetDouble("beta1", beta1);
  kv.SetDouble("beta2", beta2);
  kv.SetDouble("adam_eps", adam_eps);
  kv.SetDouble("special_lr_mult", special_lr_mult);
  kv.SetDouble("clip_norm", clip_norm);
  kv.Set("train_seed", std::to_string(seed));
  kv.SetInt("eval_every", eval_every);
  return kv;
}

void TrainConfig::ApplyText(const KeyValueText& kv) {
  if (kv.Has("epochs")) epochs = static_cast<int>(kv.GetInt("epochs"));
  if (kv.Has("batch_size")) batch_size = static_cast<int>(kv.GetInt("batch_size"));
  if (kv.Has("lr")) lr = kv.GetDouble("lr");
  if (kv.Has("lr_min")) lr_min = kv.GetDouble("lr_min");
  if (kv.Has("weight_decay")) weight_decay = kv.GetDouble("weight_decay");
  if (kv.Has("beta1")) beta1 = kv.GetDouble("beta1");
  if (kv.Has("beta2")) beta2 = kv.GetDouble("beta2");
  if (kv.Has("adam_eps")) adam_eps = kv.GetDouble("adam_eps");
  if (kv.Has("special_lr_mult")) special_lr_mult = kv.GetDouble("special_lr_mult");
  if (kv.Has("clip_norm")) clip_norm = kv.GetDouble("clip_norm");
  if (kv.Has("train_seed")) seed = std::stoull(kv.Get("train_seed"));
  if (kv.Has("eval_every")) eval_every = static_cast<int>(kv.GetInt("eval_every"));
}

double CosineLr(std::int64_t step, std::int64_t total_steps, double lr_init, double lr_min) {
  if (total_steps <= 1) return lr_init;
  const double frac = static_cast<double>(std::clamp<std::int64_t>(step, 0, total_steps - 1)) /
                      static_cast<double>(total_steps - 1);
  return lr_min + 0.5 * (lr_init - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

template <typename Real>
void AdamWUpdate(Tensor<Real>& param, const Tensor<Real>& grad, Tensor<Real>& m, Tensor<Real>& v,
                 std::int64_t step, double lr, double weight_decay, const AdamWOptions& opts) {
  if (grad.shape() != param.shape() || m.shape() != param.shape() ||
      v.shape() != param.shape()) {
    throw DimensionError("AdamW state shape mismatch for " + ShapeString(param.shape()));
  }
  if (step < 1) throw ConfigError("AdamW step counts from 1");
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
  for (std::int64_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = opts.beta1 * static_cast<double>(m[i]) + (1.0 - opts.beta1) * g;
    const double vi = opts.beta2 * static_cast<double>(v[i]) + (1.0 - opts.beta2) * g * g;
    m[i] = static_cast<Real>(mi);
    v[i] = static_cast<Real>(vi);
    const double p = param[i];
    const double update = (mi / bc1) / (std::sqrt(vi / bc2) + opts.eps) + weight_decay * p;
    param[i] = static_cast<Real>(p - lr * update);
  }
}

std::string EpochMetrics::ToJson() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["train_loss"] = train_loss;
  j["train_acc"] = train_acc;
  if (eval_acc >= 0) {
    j["eval_acc"] = eval_acc;
  } else {
    j["eval_acc"] = nullptr;
  }
  j["sparsity"] = sparsity;
  return j.dump();
}

namespace {

int ArgMax(const float* row, std::int64_t n) {
  int best = 0;
  for (std::int64_t c = 1; c < n; ++c) {
    if (row[c] > row[best]) best = static_cast<int>(c);
  }
  return best;
}

std::int64_t CountZeros(const Tensor<float>& t) {
  return std::count(t.data().begin(), t.data().end(), 0.0f);
}

}  // namespace

EvalResult Evaluate(const Model<float>& model, const EventDataset& data, int batch_size,
                    int threads) {
  if (data.count() == 0) throw InputError("cannot evaluate on an empty dataset");
  const ModelConfig& cfg = model.config();
  if (data.classes > cfg.classes) {
    throw InputError("dataset has " + std::to_string(data.classes) + " classes, model head has " +
                     std::to_string(cfg.classes));
  }
  batch_size = std::max(batch_size, 1);
  const std::int64_t n = static_cast<std::int64_t>(data.count());
  const std::int64_t batches = (n + batch_size - 1) / batch_size;
  const int blocks = cfg.blocks;
  std::vector<int> pred(n);
  std::vector<std::vector<std::int64_t>> raw_zero(batches, std::vector<std::int64_t>(blocks));
  std::vector<std::vector<std::int64_t>> den_zero(batches, std::vector<std::int64_t>(blocks));
  std::vector<std::int64_t> map_size(batches);
  ParallelFor(batches, threads, [&](std::int64_t b) {
    const std::int64_t begin = b * batch_size, end = std::min(n, begin + batch_size);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), static_cast<std::size_t>(begin));
    Tape<float> tape;
    const auto r = model.Forward(tape, data.Batch<float>(idx), false);
    const auto& logits = r.logits.value();
    const std::int64_t classes = logits.dim(1);
    for (std::int64_t j = 0; j < end - begin; ++j) {
      pred[begin + j] = ArgMax(logits.raw() + j * classes, classes);
    }
    for (int l = 0; l < blocks; ++l) {
      raw_zero[b][l] = CountZeros(r.scores[l].value());
      den_zero[b][l] = CountZeros(r.maps[l].value());
    }
    map_size[b] = r.scores.empty() ? 0 : r.scores[0].value().size();
  });
  EvalResult out;
  out.count = static_cast<std::size_t>(n);
  out.predictions = pred;
  std::vector<std::int64_t> hit(cfg.classes), total(cfg.classes);
  std::int64_t correct = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int y = data.labels[i];
    ++total[y];
    if (pred[i] == y) {
      ++hit[y];
      ++correct;
    }
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  for (int c = 0; c < cfg.classes; ++c) {
    out.per_class_accuracy.push_back(total[c] ? static_cast<double>(hit[c]) / total[c] : 0.0);
  }
  const std::int64_t entries = std::accumulate(map_size.begin(), map_size.end(), std::int64_t{0});
  for (int l = 0; l < blocks; ++l) {
    std::int64_t rz = 0, dz = 0;
    for (std::int64_t b = 0; b < batches; ++b) {
      rz += raw_zero[b][l];
      dz += den_zero[b][l];
    }
    out.raw_sparsity.push_back(static_cast<double>(rz) / static_cast<double>(entries));
    out.denoised_sparsity.push_back(static_cast<double>(dz) / static_cast<double>(entries));
  }
  return out;
}

Trainer::Trainer(Model<float>& model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
  cfg_.Validate();
  for (const auto& p : model_.parameters()) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

StepResult Trainer::Step(const EventDataset& data, std::span<const std::size_t> indices,
                         double lr) {
  const auto batch = static_cast<std::int64_t>(indices.size());
  if (batch == 0) throw InputError("empty training batch");
  auto& params = model_.parameters();
  const std::size_t np = params.size();
  const std::int64_t shards = std::min<std::int64_t>(cfg_.threads, batch);

  struct ShardOut {
    double loss = 0;
    int correct = 0;
    std::vector<Tensor<float>> grads;
    std::vector<bool> has;
  };
  std::vector<ShardOut> outs(shards);
  ParallelFor(shards, cfg_.threads, [&](std::int64_t s) {
    const std::int64_t begin = batch * s / shards, end = batch * (s + 1) / shards;
    const auto sub = indices.subspan(begin, end - begin);
    const std::vector<int> labels = data.BatchLabels(sub);
    Tape<float> tape;
    const auto r = model_.Forward(tape, data.Batch<float>(sub), true);
    const Var<float> loss = CrossEntropyLogits(r.logits, labels);
    ShardOut& o = outs[s];
    o.loss = static_cast<double>(loss.value().item());
    if (!std::isfinite(o.loss)) return;
    const auto& logits = r.logits.value();
    const std::int64_t classes = logits.dim(1);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (ArgMax(logits.raw() + j * classes, classes) == labels[j]) ++o.correct;
    }
    // Each shard's loss is a mean over its own samples; weight it by its
    // share of the batch so the reduced gradient is the batch mean.
    const float share = shards == 1 ? 1.0f
                                    : static_cast<float>(static_cast<double>(end - begin) /
                                                         static_cast<double>(batch));
    tape.Backward(loss, Tensor<float>::Scalar(share));
    o.grads.resize(np);
    o.has.assign(np, false);
    for (std::size_t i = 0; i < np; ++i) {
      const int id = r.params[i].id();
      if (tape.has_grad(id)) {
        o.grads[i] = tape.grad(id);
        o.has[i] = true;
      }
    }
  });

  StepResult res;
  for (std::int64_t s = 0; s < shards; ++s) {
    const double w = static_cast<double>(batch * (s + 1) / shards - batch * s / shards);
    res.loss += outs[s].loss * w;
    res.correct += outs[s].correct;
  }
  res.loss /= static_cast<double>(batch);
  if (!std::isfinite(res.loss)) {
    std::string worst;
    double worst_norm = -1;
    for (const auto& p : params) {
      double sq = 0;
      for (const float x : p.value.data()) sq += static_cast<double>(x) * x;
      const double norm = std::sqrt(sq);
      if (!(norm <= worst_norm)) {
        worst_norm = norm;
        worst = p.name;
      }
    }
    std::ostringstream msg;
    msg << "non-finite loss at epoch " << epoch_ << ", batch " << batch_in_epoch_
        << "; largest parameter norm " << worst << " = " << worst_norm;
    throw NumericError(msg.str());
  }

  // Fixed-order reduction over shards.
  std::vector<Tensor<float>> grads(np);
  std::vector<bool> has(np, false);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::int64_t s = 0; s < shards; ++s) {
      if (!outs[s].has[i]) continue;
      if (!has[i]) {
        grads[i] = outs[s].grads[i];
        has[i] = true;
      } else {
        float* g = grads[i].raw();
        const float* o = outs[s].grads[i].raw();
        for (std::int64_t k = 0; k < grads[i].size(); ++k) g[k] += o[k];
      }
    }
  }
  double sq = 0;
  for (std::size_t i = 0; i < np; ++i) {
    if (!has[i]) continue;
    for (const float g : grads[i].data()) sq += static_cast<double>(g) * g;
  }
  res.grad_norm = std::sqrt(sq);
  if (!std::isfinite(res.grad_norm)) {
    throw NumericError("non-finite gradient norm at epoch " + std::to_string(epoch_) +
                       ", batch " + std::to_string(batch_in_epoch_));
  }
  if (cfg_.clip_norm > 0 && res.grad_norm > cfg_.clip_norm) {
    const float scale = static_cast<float>(cfg_.clip_norm / res.grad_norm);
    for (std::size_t i = 0; i < np; ++i) {
      if (!has[i]) continue;
      for (auto& g : grads[i].data()) g *= scale;
    }
  }

  ++step_;
  const AdamWOptions opts{cfg_.beta1, cfg_.beta2, cfg_.adam_eps};
  for (std::size_t i = 0; i < np; ++i) {
    auto& p = params[i];
    if (!p.trainable || !has[i]) continue;
    const bool special = p.group == ParamGroup::kNsad || p.group == ParamGroup::kTau;
    const double lr_p = special ? lr * cfg_.special_lr_mult : lr;
    const double wd = p.group == ParamGroup::kWeight ? cfg_.weight_decay : 0.0;
    AdamWUpdate(p.value, grads[i], m_[i], v_[i], step_, lr_p, wd, opts);
  }
  model_.ProjectParameters();
  model_.RebuildTables();
  return res;
}

std::vector<EpochMetrics> Trainer::Fit(const EventDataset& train, const EventDataset* eval,
                                       const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (train.count() == 0) throw InputError("cannot train on an empty dataset");
  if (train.classes > model_.config().classes) {
    throw InputError("dataset has " + std::to_string(train.classes) +
                     " classes, model head has " + std::to_string(model_.config().classes));
  }
  const std::size_t n = train.count();
  const std::int64_t per_epoch = static_cast<std::int64_t>((n + cfg_.batch_size - 1) / cfg_.batch_size);
  const std::int64_t total = per_epoch * cfg_.epochs;
  const CounterRng shuffle_root = CounterRng(cfg_.seed).Split("shuffle");
  std::vector<EpochMetrics> history;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    epoch_ = epoch;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng = shuffle_root.Split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = CosineLr(step_, total, cfg_.lr, cfg_.lr_min);
    double loss_sum = 0;
    std::int64_t correct = 0;
    for (std::int64_t b = 0; b < per_epoch; ++b) {
      batch_in_epoch_ = static_cast<int>(b);
      const std::size_t begin = static_cast<std::size_t>(b) * cfg_.batch_size;
      const std::size_t end = std::min(n, begin + cfg_.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const StepResult r = Step(train, idx, CosineLr(step_, total, cfg_.lr, cfg_.lr_min));
      loss_sum += r.loss * static_cast<double>(end - begin);
      correct += r.correct;
    }
    em.train_loss = loss_sum / static_cast<double>(n);
    em.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    const bool last = epoch + 1 == cfg_.epochs;
    const bool due = cfg_.eval_every > 0 && (epoch + 1) % cfg_.eval_every == 0;
    if (eval && eval->count() > 0 && (due || last)) {
      const EvalResult er = Evaluate(model_, *eval, 64, cfg_.threads);
      em.eval_acc = er.accuracy;
      em.sparsity = er.denoised_sparsity;
    }
    history.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  return history;
}

void Trainer::SaveState(CheckpointData& ck) const {
  const auto& params = model_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.Add(TensorRecord("opt.m." + params[i].name, m_[i]));
    ck.Add(TensorRecord("opt.v." + params[i].name, v_[i]));
  }
  CheckpointRecord step;
  step.name = "opt.step";
  step.shape = {1};
  step.data = std::vector<std::uint64_t>{static_cast<std::uint64_t>(step_)};
  ck.Add(std::move(step));
}

void Trainer::LoadState(const CheckpointData& ck) {
  const auto& params = model_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* m = ck.Find("opt.m." + params[i].name);
    const auto* v = ck.Find("opt.v." + params[i].name);
    if (!m || !v) throw FormatError("checkpoint lacks optimizer state for " + params[i].name, 0);
    m_[i] = RecordTensor<float>(*m);
    v_[i] = RecordTensor<float>(*v);
    if (m_[i].shape() != params[i].value.shape() || v_[i].shape() != params[i].value.shape()) {
      throw FormatError("optimizer state shape mismatch for " + params[i].name, 0);
    }
  }
  const auto* s = ck.Find("opt.step");
  const auto* sv = s ? std::get_if<std::vector<std::uint64_t>>(&s->data) : nullptr;
  if (!sv || sv->size() != 1) throw FormatError("checkpoint lacks opt.step", 0);
  step_ = static_cast<std::int64_t>((*sv)[0]);
}

template void AdamWUpdate<float>(Tensor<float>&, const Tensor<float>&, Tensor<float>&,
                                 Tensor<float>&, std::int64_t, double, double,
                                 const AdamWOptions&);
template void AdamWUpdate<double>(Tensor<double>&, const Tensor<double>&, Tensor<double>&,
                                  Tensor<double>&, std::int64_t, double, double,
                                  const AdamWOptions&);

}  // namespace ds2ta
