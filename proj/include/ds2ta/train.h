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


// Surrogate-gradient training: AdamW with decoupled weight decay, a cosine
// learning-rate schedule, global-norm clipping, and per-epoch metrics.

#ifndef DS2TA_TRAIN_H_
#define DS2TA_TRAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ds2ta/checkpoint.h"
#include "ds2ta/config_text.h"
#include "ds2ta/data.h"
#include "ds2ta/model.h"

namespace ds2ta {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;
  double lr_min = 1e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Learning-rate multiplier for NSAD parameters and decay exponents.
  double special_lr_mult = 10.0;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
  int eval_every = 1;  // epochs between evaluations; 0 evaluates only at the end
  int threads = 1;

  void Validate() const;
  KeyValueText ToText() const;
  void ApplyText(const KeyValueText& kv);
};

// Cosine decay from lr_init at step 0 to lr_min at step total_steps - 1.
double CosineLr(std::int64_t step, std::int64_t total_steps, double lr_init, double lr_min);

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One AdamW update of a single tensor; `step` counts from 1. Decay is
// decoupled and scaled by lr: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
template <typename Real>
void AdamWUpdate(Tensor<Real>& param, const Tensor<Real>& grad, Tensor<Real>& m, Tensor<Real>& v,
                 std::int64_t step, double lr, double weight_decay, const AdamWOptions& opts);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double train_acc = 0;
  double eval_acc = -1;  // negative when not evaluated this epoch
  std::vector<double> sparsity;  // per block, of the denoised maps on the eval set

  // One JSON object, no trailing newline.
  std::string ToJson() const;
};

struct EvalResult {
  std::size_t count = 0;
  double accuracy = 0;
  std::vector<double> per_class_accuracy;
  std::vector<double> raw_sparsity;       // per block, of S
  std::vector<double> denoised_sparsity;  // per block, of A
  std::vector<int> predictions;
};

// Top-1 accuracy and per-block map sparsity. Sparsity is the fraction of
// exact zeros over every sample, timestep, head, and map entry.
EvalResult Evaluate(const Model<float>& model, const EventDataset& data, int batch_size = 64,
                    int threads = 1);

struct StepResult {
  double loss = 0;
  int correct = 0;
  double grad_norm = 0;
};

class Trainer {
 public:
  Trainer(Model<float>& model, const TrainConfig& cfg);

  // One optimizer step on the given samples at learning rate `lr`.
  StepResult Step(const EventDataset& data, std::span<const std::size_t> indices, double lr);

  // Full schedule. `eval` may be null; `on_epoch` sees every record.
  std::vector<EpochMetrics> Fit(const EventDataset& train, const EventDataset* eval,
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

  std::int64_t step_count() const { return step_; }

  // Optimizer moments and step counter as checkpoint records.
  void SaveState(CheckpointData& ck) const;
  void LoadState(const CheckpointData& ck);

 private:
  Model<float>& model_;
  TrainConfig cfg_;
  std::vector<Tensor<float>> m_, v_;
  std::int64_t step_ = 0;
  int epoch_ = 0;
  int batch_in_epoch_ = 0;
};

}  // namespace ds2ta

#endif  // DS2TA_TRAIN_H_
