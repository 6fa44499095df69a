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

// The spiking transformer: linear patch embedding, L encoder blocks, and a
// rate-pooled linear classifier.
//
// Per block, with s the block input spikes [T, B, N, D]:
//   f      = temporal_filter(s)                 (identity in spatial-only mode)
//   Q,K,V  = LIF(f x W_{q,k,v})
//   S      = Q_h[t] K_h[t]^T                    per head, integer
//   A      = denoise(S)                         (S itself without a denoiser)
//   O      = LIF(temporal_filter(A x V) x W_o)
//   s      = s + O
//   s      = s + LIF(LIF(s x W1 + b1) x W2 + b2)
// Logits are the mean of the final spikes over T and N times W_c plus b_c.

#ifndef DS2TA_MODEL_H_
#define DS2TA_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ds2ta/autodiff.h"
#include "ds2ta/config_text.h"
#include "ds2ta/neuron.h"
#include "ds2ta/nsad.h"

namespace ds2ta {

enum class AttentionMode { kSpatialOnly, kTasa };

std::string_view AttentionModeName(AttentionMode m);
AttentionMode ParseAttentionMode(std::string_view s);

// Defaults are the desk-scale configuration.
struct ModelConfig {
  int steps = 8;  // T
  int blocks = 2;  // L
  int dim = 64;  // D
  int heads = 4;  // H
  int tokens = 16;  // N, must equal (height / patch) * (width / patch)
  int channels = 1;
  int height = 16;
  int width = 16;
  int patch = 4;
  int classes = 2;
  int mlp_ratio = 4;
  int t_aw = 3;
  std::vector<double> tau_init = {2.0, 2.0};  // one decay exponent per block
  int tau_max = 8;
  double u_init = 2.0;
  LifParams lif;
  AttentionMode attention_mode = AttentionMode::kTasa;
  bool nsad_enabled = true;
  // Denoiser present but frozen to the identity table (ablation control).
  bool nsad_identity = false;
  // Train-mode forward uses the continuous f instead of table values.
  bool nsad_continuous_forward = false;
  double gate_temperature = kDefaultGateTemperature;
  std::uint64_t seed = 0;

  int head_dim() const { return dim / heads; }
  int patch_features() const { return channels * patch * patch; }
  // Window actually applied: 1 in spatial-only mode.
  int effective_t_aw() const { return attention_mode == AttentionMode::kTasa ? t_aw : 1; }

  void Validate() const;
  KeyValueText ToText() const;
  static ModelConfig FromText(const KeyValueText& kv);
  // Overrides only the keys present in `kv`.
  void ApplyText(const KeyValueText& kv);
};

enum class ParamGroup { kWeight, kBias, kNsad, kTau };

template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  ParamGroup group;
  bool trainable = true;
};

template <typename Real>
struct ForwardResult {
  Var<Real> logits;
  std::vector<Var<Real>> params;  // aligned with Model::parameters()
  std::vector<Var<Real>> scores;  // per block, raw S [T, B, H, N, N]
  std::vector<Var<Real>> maps;    // per block, denoised A (S when no denoiser)
};

// [T, B, C, H, W] frames to [T, B, N, C*p*p] patch vectors; tokens are
// row-major over the patch grid, features ordered (c, y, x).
template <typename Real>
Tensor<Real> Patchify(const Tensor<Real>& frames, int patch);

template <typename Real>
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Parameter<Real>>& parameters() { return params_; }
  const std::vector<Parameter<Real>>& parameters() const { return params_; }
  Parameter<Real>& param(std::string_view name);
  const Parameter<Real>& param(std::string_view name) const;

  // Per block, one table per head.
  const std::vector<std::vector<NsadTable>>& tables() const { return tables_; }
  void RebuildTables();
  // u >= 0 for every head; decay exponents clamped to [0, tau_max].
  void ProjectParameters();

  NsadHead nsad_head(int block, int head) const;
  int tau_int(int block) const;

  // Records the forward pass on `tape`. With `train` set, trainable
  // parameters become gradient leaves.
  ForwardResult<Real> Forward(Tape<Real>& tape, const Tensor<Real>& frames, bool train) const;

  Tensor<Real> Logits(const Tensor<Real>& frames) const;

  std::size_t ParameterCount() const;

 private:
  ModelConfig cfg_;
  std::vector<Parameter<Real>> params_;
  std::vector<std::vector<NsadTable>> tables_;
};

}  // namespace ds2ta

#endif  // DS2TA_MODEL_H_
