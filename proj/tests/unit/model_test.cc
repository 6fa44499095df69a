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
#include <filesystem>

#include "doctest.h"
#include "ds2ta/checkpoint.h"
#include "ds2ta/error.h"
#include "ds2ta/model.h"
#include "ds2ta/rng.h"

namespace ds2ta {
namespace {

Tensor<float> RandomFrames(const ModelConfig& cfg, int batch, std::uint64_t seed) {
  CounterRng rng(seed);
  Tensor<float> x({cfg.steps, batch, cfg.channels, cfg.height, cfg.width});
  for (auto& v : x.data()) v = rng.Bernoulli(0.3) ? 1.0f : 0.0f;
  return x;
}

TEST_CASE("patchify ordering") {
  Tensor<float> x({1, 1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) x[i] = static_cast<float>(i);
  const Tensor<float> p = Patchify(x, 2);
  CHECK(p.shape() == Shape{1, 1, 4, 4});
  CHECK(p.storage() == std::vector<float>{0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15});
}

TEST_CASE("config validation and text round trip") {
  ModelConfig cfg;
  cfg.Validate();
  cfg.t_aw = 4;
  cfg.tau_init = {1.5, 3.0};
  cfg.attention_mode = AttentionMode::kSpatialOnly;
  const ModelConfig back = ModelConfig::FromText(KeyValueText::Parse(cfg.ToText().Serialize()));
  CHECK(back.ToText().Serialize() == cfg.ToText().Serialize());

  ModelConfig bad;
  bad.heads = 3;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = {};
  bad.tokens = 9;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = {};
  bad.t_aw = 9;  // longer than the sequence; the window truncates
  CHECK_NOTHROW(bad.Validate());
  bad.t_aw = 0;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = {};
  bad.tau_init = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("zero input yields the classifier bias") {
  ModelConfig cfg;
  Model<float> model(cfg);
  model.param("head.bias").value.storage() = {0.25f, -0.5f};
  const Tensor<float> logits = model.Logits(Tensor<float>({8, 3, 1, 16, 16}));
  CHECK(logits.shape() == Shape{3, 2});
  for (int b = 0; b < 3; ++b) {
    CHECK(logits.at({b, 0}) == 0.25f);
    CHECK(logits.at({b, 1}) == -0.5f);
  }
}

TEST_CASE("shapes and map ranges across configurations") {
  CounterRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig cfg;
    cfg.steps = 1 + static_cast<int>(rng.Below(6));
    cfg.blocks = 1 + static_cast<int>(rng.Below(2));
    cfg.heads = 1 + static_cast<int>(rng.Below(3));
    cfg.dim = cfg.heads * (2 + static_cast<int>(rng.Below(4)));
    cfg.patch = 2 + 2 * static_cast<int>(rng.Below(2));
    cfg.height = cfg.patch * (1 + static_cast<int>(rng.Below(3)));
    cfg.width = cfg.patch * (1 + static_cast<int>(rng.Below(3)));
    cfg.tokens = (cfg.height / cfg.patch) * (cfg.width / cfg.patch);
    cfg.channels = 1 + static_cast<int>(rng.Below(2));
    cfg.classes = 2 + static_cast<int>(rng.Below(4));
    cfg.mlp_ratio = 1 + static_cast<int>(rng.Below(3));
    cfg.t_aw = 1 + static_cast<int>(rng.Below(static_cast<std::uint64_t>(cfg.steps) + 2));
    cfg.tau_init.assign(cfg.blocks, 4.0 * rng.Uniform());
    cfg.attention_mode = rng.Bernoulli(0.5) ? AttentionMode::kTasa : AttentionMode::kSpatialOnly;
    cfg.nsad_enabled = rng.Bernoulli(0.7);
    cfg.seed = trial;
    Model<float> model(cfg);
    const int batch = 1 + static_cast<int>(rng.Below(3));
    Tape<float> tape;
    const auto r = model.Forward(tape, RandomFrames(cfg, batch, trial), false);
    CHECK(r.logits.shape() == Shape{batch, cfg.classes});
    REQUIRE(r.maps.size() == static_cast<std::size_t>(cfg.blocks));
    for (int l = 0; l < cfg.blocks; ++l) {
      const Shape want{cfg.steps, batch, cfg.heads, cfg.tokens, cfg.tokens};
      CHECK(r.scores[l].shape() == want);
      CHECK(r.maps[l].shape() == want);
      for (const float v : r.maps[l].value().data()) {
        CHECK(v == std::round(v));
        CHECK(v >= 0);
        CHECK(v <= cfg.head_dim());
      }
    }
    for (const float v : r.logits.value().data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("projection keeps thresholds and decay exponents in range") {
  ModelConfig cfg;
  Model<float> model(cfg);
  model.param("block0.tau").value[0] = -1.0f;
  model.param("block1.tau").value[0] = 99.0f;
  model.param("block0.nsad").value[kNsadU] = -0.5f;
  model.ProjectParameters();
  CHECK(model.param("block0.tau").value[0] == 0.0f);
  CHECK(model.param("block1.tau").value[0] == static_cast<float>(cfg.tau_max));
  CHECK(model.nsad_head(0, 0).u == 0.0);
  CHECK(model.tau_int(1) == cfg.tau_max);
}

TEST_CASE("ablation switches freeze the right parameters") {
  ModelConfig cfg;
  cfg.attention_mode = AttentionMode::kSpatialOnly;
  cfg.nsad_enabled = false;
  Model<float> spatial(cfg);
  CHECK_FALSE(spatial.param("block0.tau").trainable);
  CHECK_FALSE(spatial.param("block0.nsad").trainable);
  cfg = {};
  cfg.nsad_identity = true;
  Model<float> identity(cfg);
  CHECK(identity.param("block0.tau").trainable);
  CHECK_FALSE(identity.param("block0.nsad").trainable);
  CHECK(identity.tables()[0][0] == IdentityTable(cfg.head_dim()));
}

TEST_CASE("checkpoint round trip is bitwise") {
  ModelConfig cfg;
  cfg.seed = 12;
  Model<float> model(cfg);
  model.param("block1.nsad").value[kNsadU] = 3.0f;
  model.RebuildTables();
  const auto bytes = EncodeCheckpoint(ModelCheckpoint(model));
  const CheckpointData ck = DecodeCheckpoint(bytes);
  CHECK(EncodeCheckpoint(ck) == bytes);
  CHECK(ck.Find("table.block1.head3") != nullptr);
  const Model<float> back = LoadModel<float>(ck);
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    CHECK(back.parameters()[i].value == model.parameters()[i].value);
  }
  CHECK(back.tables() == model.tables());
  const Tensor<float> x = RandomFrames(cfg, 4, 5);
  CHECK(back.Logits(x) == model.Logits(x));

  const auto path = (std::filesystem::temp_directory_path() / "ds2ta_model_test.ckpt").string();
  WriteCheckpoint(path, ModelCheckpoint(model));
  CHECK(EncodeCheckpoint(ReadCheckpoint(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejections") {
  Model<float> model(ModelConfig{});
  const auto bytes = EncodeCheckpoint(ModelCheckpoint(model));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(DecodeCheckpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  try {
    DecodeCheckpoint(bad);
    FAIL("version 2 accepted");
  } catch (const UnsupportedVersionError& e) {
    CHECK(e.offset() == 4);
  }
  bad.assign(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(DecodeCheckpoint(bad), FormatError);

  CheckpointData ck = DecodeCheckpoint(bytes);
  CHECK_THROWS_AS(ck.Add(ck.records.front()), FormatError);
  for (auto& r : ck.records) {
    if (r.name == "table.block0.head0") std::get<std::vector<std::int32_t>>(r.data)[1] = 7;
  }
  CHECK_THROWS_AS(LoadModel<float>(ck), FormatError);
}

}  // namespace
}  // namespace ds2ta
