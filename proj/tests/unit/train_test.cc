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

#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "ds2ta/checkpoint.h"
#include "ds2ta/data.h"
#include "ds2ta/error.h"
#include "ds2ta/model.h"
#include "ds2ta/train.h"

namespace ds2ta {
namespace {

EventDataset SmallTemporalOrder(int n, std::uint64_t seed) {
  TemporalOrderOptions o;
  o.n = n;
  o.seed = seed;
  return GenerateTemporalOrder(o);
}

ModelConfig SmallModel() {
  ModelConfig cfg;
  cfg.dim = 16;
  cfg.heads = 2;
  cfg.blocks = 1;
  cfg.tau_init = {2.0};
  cfg.mlp_ratio = 2;
  return cfg;
}

TEST_CASE("adamw trace") {
  Tensor<double> p({1}, {1.0}), m({1}), v({1});
  const double grads[] = {0.5, -0.3, 0.2};
  const double want[] = {0.899000002, 0.8789511989397751, 0.8433294795899422};
  for (int s = 0; s < 3; ++s) {
    AdamWUpdate(p, Tensor<double>({1}, {grads[s]}), m, v, s + 1, 0.1, 0.01, AdamWOptions{});
    CHECK(p[0] == doctest::Approx(want[s]).epsilon(1e-12));
  }
}

TEST_CASE("cosine schedule endpoints") {
  CHECK(CosineLr(0, 100, 1e-3, 1e-5) == 1e-3);
  CHECK(CosineLr(99, 100, 1e-3, 1e-5) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(CosineLr(50, 101, 1e-3, 0) == doctest::Approx(5e-4).epsilon(1e-12));
  CHECK(CosineLr(0, 1, 2e-3, 1e-5) == 2e-3);
}

TEST_CASE("config validation and text") {
  TrainConfig cfg;
  cfg.Validate();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  TrainConfig a;
  a.lr = 2e-3;
  a.seed = 9;
  TrainConfig b;
  b.ApplyText(KeyValueText::Parse(a.ToText().Serialize()));
  CHECK(b.ToText().Serialize() == a.ToText().Serialize());
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Model<float> model(SmallModel());
  const auto before = model.parameters();
  Trainer trainer(model, TrainConfig{});
  const EventDataset ds = SmallTemporalOrder(8, 1);
  std::vector<std::size_t> idx(8);
  std::iota(idx.begin(), idx.end(), 0);
  const StepResult r = trainer.Step(ds, idx, 0.0);
  CHECK(r.grad_norm > 0);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(model.parameters()[i].value == before[i].value);
}

TEST_CASE("a single sample is memorized") {
  Model<float> model(SmallModel());
  Trainer trainer(model, TrainConfig{});
  const EventDataset ds = SmallTemporalOrder(1, 4);
  const std::size_t idx[] = {0};
  double loss = 1;
  for (int step = 0; step < 200 && loss >= 0.01; ++step) loss = trainer.Step(ds, idx, 1e-2).loss;
  CHECK(loss < 0.01);
}

TEST_CASE("training is deterministic and keeps projections") {
  const EventDataset train = SmallTemporalOrder(48, 2);
  const EventDataset eval = SmallTemporalOrder(16, 3);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.lr = 5e-2;
  tc.seed = 6;
  Model<float> a(SmallModel()), b(SmallModel());
  const auto ma = Trainer(a, tc).Fit(train, &eval);
  const auto mb = Trainer(b, tc).Fit(train, &eval);
  REQUIRE(ma.size() == 2);
  for (std::size_t e = 0; e < ma.size(); ++e) CHECK(ma[e].ToJson() == mb[e].ToJson());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
  }
  CHECK(ma[1].eval_acc >= 0);
  CHECK(ma[1].lr < ma[0].lr);
  for (int h = 0; h < a.config().heads; ++h) CHECK(a.nsad_head(0, h).u >= 0);
  const float tau = a.param("block0.tau").value[0];
  CHECK(tau >= 0);
  CHECK(tau <= a.config().tau_max);
  CHECK(a.param("block0.tau").value != Model<float>(SmallModel()).param("block0.tau").value);
}

TEST_CASE("resuming from saved optimizer state matches an uninterrupted run") {
  const EventDataset ds = SmallTemporalOrder(16, 5);
  std::vector<std::size_t> idx(16);
  std::iota(idx.begin(), idx.end(), 0);
  Model<float> a(SmallModel());
  Trainer ta(a, TrainConfig{});
  ta.Step(ds, idx, 1e-2);
  CheckpointData ck = ModelCheckpoint(a);
  ta.SaveState(ck);
  ta.Step(ds, idx, 1e-2);

  Model<float> b = LoadModel<float>(DecodeCheckpoint(EncodeCheckpoint(ck)));
  Trainer tb(b, TrainConfig{});
  tb.LoadState(ck);
  CHECK(tb.step_count() == 1);
  tb.Step(ds, idx, 1e-2);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
  }
}

TEST_CASE("all-zero input gets one constant prediction") {
  EventDataset ds = SmallTemporalOrder(20, 7);
  std::fill(ds.frames.begin(), ds.frames.end(), 0);
  Model<float> model(SmallModel());
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 10;
  Trainer(model, tc).Fit(ds, nullptr);
  const EvalResult r = Evaluate(model, ds);
  for (int p : r.predictions) CHECK(p == r.predictions[0]);
  for (double s : r.raw_sparsity) CHECK(s == 1.0);
}

TEST_CASE("evaluation reports per-class accuracy and rejects bad input") {
  const EventDataset ds = SmallTemporalOrder(30, 8);
  Model<float> model(SmallModel());
  const EvalResult r = Evaluate(model, ds, 7);
  CHECK(r.count == 30);
  CHECK(r.predictions.size() == 30);
  REQUIRE(r.per_class_accuracy.size() == 2);
  int correct = 0;
  for (std::size_t i = 0; i < ds.count(); ++i) correct += r.predictions[i] == ds.labels[i];
  CHECK(r.accuracy == doctest::Approx(correct / 30.0));
  CHECK_THROWS_AS(Evaluate(model, ds.Subset(0, 0)), InputError);
}

TEST_CASE("non-finite parameters stop training with a numeric error") {
  Model<float> model(SmallModel());
  model.param("head.weight").value[0] = std::numeric_limits<float>::quiet_NaN();
  Trainer trainer(model, TrainConfig{});
  const EventDataset ds = SmallTemporalOrder(4, 1);
  const std::size_t idx[] = {0, 1, 2, 3};
  CHECK_THROWS_AS(trainer.Step(ds, idx, 1e-3), NumericError);
}

}  // namespace
}  // namespace ds2ta
