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

#include "ds2ta/model.h"

#include <algorithm>
#include <cmath>

#include "ds2ta/rng.h"
#include "ds2ta/tasa.h"

namespace ds2ta {

std::string_view AttentionModeName(AttentionMode m) {
  return m == AttentionMode::kTasa ? "tasa" : "spatial_only";
}

AttentionMode ParseAttentionMode(std::string_view s) {
  if (s == "tasa") return AttentionMode::kTasa;
  if (s == "spatial_only") return AttentionMode::kSpatialOnly;
  throw ConfigError("unknown attention_mode '" + std::string(s) + "'");
}

void ModelConfig::Validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  positive(steps, "steps");
  positive(blocks, "blocks");
  positive(dim, "dim");
  positive(heads, "heads");
  positive(tokens, "tokens");
  positive(channels, "channels");
  positive(height, "height");
  positive(width, "width");
  positive(patch, "patch");
  positive(classes, "classes");
  positive(mlp_ratio, "mlp_ratio");
  positive(t_aw, "t_aw");
  if (dim % heads != 0) {
    throw ConfigError("dim " + std::to_string(dim) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (height % patch != 0 || width % patch != 0) {
    throw ConfigError("frame " + std::to_string(height) + "x" + std::to_string(width) +
                      " does not split into " + std::to_string(patch) + "-pixel patches");
  }
  if (tokens != (height / patch) * (width / patch)) {
    throw ConfigError("tokens " + std::to_string(tokens) + " != patch count " +
                      std::to_string((height / patch) * (width / patch)));
  }
  if (static_cast<int>(tau_init.size()) != blocks) {
    throw ConfigError("tau_init needs one entry per block");
  }
  if (tau_max < 0) throw ConfigError("tau_max must be >= 0");
  if (u_init < 0) throw ConfigError("u_init must be >= 0");
  if (!(gate_temperature > 0)) throw ConfigError("gate_temperature must be positive");
  lif.Validate();
}

KeyValueText ModelConfig::ToText() const {
  KeyValueText kv;
  kv.SetInt("steps", steps);
  kv.SetInt("blocks", blocks);
  kv.SetInt("dim", dim);
  kv.SetInt("heads", heads);
  kv.SetInt("tokens", tokens);
  kv.SetInt("channels", channels);
  kv.SetInt("height", height);
  kv.SetInt("width", width);
  kv.SetInt("patch", patch);
  kv.SetInt("classes", classes);
  kv.SetInt("mlp_ratio", mlp_ratio);
  kv.SetInt("t_aw", t_aw);
  kv.SetDoubleList("tau_init", tau_init);
  kv.SetInt("tau_max", tau_max);
  kv.SetDouble("u_init", u_init);
  kv.SetDouble("lif_tau_m", lif.tau_m);
  kv.SetDouble("lif_theta", lif.theta);
  kv.SetDouble("lif_alpha", lif.surrogate_alpha);
  kv.Set("attention_mode", std::string(AttentionModeName(attention_mode)));
  kv.SetBool("nsad_enabled", nsad_enabled);
  kv.SetBool("nsad_identity", nsad_identity);
  kv.SetBool("nsad_continuous_forward", nsad_continuous_forward);
  kv.SetDouble("gate_temperature", gate_temperature);
  kv.Set("seed", std::to_string(seed));
  return kv;
}

void ModelConfig::ApplyText(const KeyValueText& kv) {
  auto int_key = [&](const char* k, int& field) {
    if (kv.Has(k)) field = static_cast<int>(kv.GetInt(k));
  };
  int_key("steps", steps);
  int_key("blocks", blocks);
  int_key("dim", dim);
  int_key("heads", heads);
  int_key("channels", channels);
  int_key("height", height);
  int_key("width", width);
  int_key("patch", patch);
  if (kv.Has("tokens")) {
    tokens = static_cast<int>(kv.GetInt("tokens"));
  } else if (patch > 0) {
    tokens = (height / patch) * (width / patch);
  }
  int_key("classes", classes);
  int_key("mlp_ratio", mlp_ratio);
  int_key("t_aw", t_aw);
  if (kv.Has("tau_init")) {
    tau_init = kv.GetDoubleList("tau_init");
    // A single value applies to every block.
    if (tau_init.size() == 1 && blocks > 1) tau_init.assign(blocks, tau_init[0]);
  } else if (static_cast<int>(tau_init.size()) != blocks && !tau_init.empty()) {
    tau_init.assign(blocks, tau_init[0]);
  }
  int_key("tau_max", tau_max);
  if (kv.Has("u_init")) u_init = kv.GetDouble("u_init");
  if (kv.Has("lif_tau_m")) lif.tau_m = kv.GetDouble("lif_tau_m");
  if (kv.Has("lif_theta")) lif.theta = kv.GetDouble("lif_theta");
  if (kv.Has("lif_alpha")) lif.surrogate_alpha = kv.GetDouble("lif_alpha");
  if (kv.Has("attention_mode")) attention_mode = ParseAttentionMode(kv.Get("attention_mode"));
  if (kv.Has("nsad_enabled")) nsad_enabled = kv.GetBool("nsad_enabled");
  if (kv.Has("nsad_identity")) nsad_identity = kv.GetBool("nsad_identity");
  if (kv.Has("nsad_continuous_forward")) {
    nsad_continuous_forward = kv.GetBool("nsad_continuous_forward");
  }
  if (kv.Has("gate_temperature")) gate_temperature = kv.GetDouble("gate_temperature");
  if (kv.Has("seed")) seed = static_cast<std::uint64_t>(std::stoull(kv.Get("seed")));
}

ModelConfig ModelConfig::FromText(const KeyValueText& kv) {
  ModelConfig cfg;
  cfg.ApplyText(kv);
  cfg.Validate();
  return cfg;
}

template <typename Real>
Tensor<Real> Patchify(const Tensor<Real>& frames, int patch) {
  if (frames.rank() != 5) {
    throw ConfigError("frames must be [T, B, C, H, W], got " + ShapeString(frames.shape()));
  }
  const std::int64_t steps = frames.dim(0), batch = frames.dim(1), ch = frames.dim(2),
                     hh = frames.dim(3), ww = frames.dim(4);
  if (hh % patch != 0 || ww % patch != 0) {
    throw ConfigError("frame " + std::to_string(hh) + "x" + std::to_string(ww) +
                      " does not split into " + std::to_string(patch) + "-pixel patches");
  }
  const std::int64_t py = hh / patch, px = ww / patch;
  const std::int64_t features = ch * patch * patch;
  Tensor<Real> out({steps, batch, py * px, features});
  for (std::int64_t tb = 0; tb < steps * batch; ++tb) {
    const Real* src = frames.raw() + tb * ch * hh * ww;
    Real* dst = out.raw() + tb * py * px * features;
    for (std::int64_t ty = 0; ty < py; ++ty) {
      for (std::int64_t tx = 0; tx < px; ++tx) {
        Real* tok = dst + (ty * px + tx) * features;
        for (std::int64_t c = 0; c < ch; ++c) {
          for (int y = 0; y < patch; ++y) {
            for (int x = 0; x < patch; ++x) {
              tok[(c * patch + y) * patch + x] =
                  src[(c * hh + ty * patch + y) * ww + tx * patch + x];
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

// Gains for N(0, (gain^2) / fan_in) weight init. Spike inputs are sparse and
// there is no normalization, so projections start hotter than Kaiming.
constexpr double kEmbedGain = 3.0;
constexpr double kProjGain = 3.0;
constexpr double kOutGain = 3.0;
constexpr double kMlpGain = 3.0;
constexpr double kHeadGain = 1.0;

template <typename Real>
Tensor<Real> RandomWeight(const CounterRng& root, const std::string& name, std::int64_t fan_in,
                          std::int64_t fan_out, double gain) {
  CounterRng rng = root.Split(name);
  Tensor<Real> w({fan_in, fan_out});
  const double stddev = gain / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : w.data()) x = static_cast<Real>(stddev * rng.Normal());
  return w;
}

std::string BlockName(int l, const char* leaf) { return "block" + std::to_string(l) + "." + leaf; }

}  // namespace

template <typename Real>
Model<Real>::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  const CounterRng root = CounterRng(cfg_.seed).Split("init");
  const std::int64_t d = cfg_.dim, hidden = static_cast<std::int64_t>(cfg_.dim) * cfg_.mlp_ratio;
  const bool learn_nsad = cfg_.nsad_enabled && !cfg_.nsad_identity;
  const bool learn_tau = cfg_.attention_mode == AttentionMode::kTasa;
  auto add = [&](std::string name, Tensor<Real> value, ParamGroup group, bool trainable = true) {
    params_.push_back(Parameter<Real>{std::move(name), std::move(value), group, trainable});
  };
  add("embed.weight", RandomWeight<Real>(root, "embed.weight", cfg_.patch_features(), d, kEmbedGain),
      ParamGroup::kWeight);
  add("embed.bias", Tensor<Real>({d}), ParamGroup::kBias);
  for (int l = 0; l < cfg_.blocks; ++l) {
    add(BlockName(l, "tau"), Tensor<Real>::Scalar(static_cast<Real>(cfg_.tau_init[l])),
        ParamGroup::kTau, learn_tau);
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv"}) {
      add(BlockName(l, w), RandomWeight<Real>(root, BlockName(l, w), d, d, kProjGain),
          ParamGroup::kWeight);
    }
    add(BlockName(l, "attn.wo"), RandomWeight<Real>(root, BlockName(l, "attn.wo"), d, d, kOutGain),
        ParamGroup::kWeight);
    Tensor<Real> nsad({cfg_.heads, kNsadParamCount});
    const NsadHead h0 = InitialNsadHead(cfg_.head_dim(), cfg_.u_init);
    const auto arr = h0.ToArray();
    for (int h = 0; h < cfg_.heads; ++h) {
      for (int k = 0; k < kNsadParamCount; ++k) nsad[h * kNsadParamCount + k] = static_cast<Real>(arr[k]);
    }
    add(BlockName(l, "nsad"), std::move(nsad), ParamGroup::kNsad, learn_nsad);
    add(BlockName(l, "mlp.w1"), RandomWeight<Real>(root, BlockName(l, "mlp.w1"), d, hidden, kMlpGain),
        ParamGroup::kWeight);
    add(BlockName(l, "mlp.b1"), Tensor<Real>({hidden}), ParamGroup::kBias);
    add(BlockName(l, "mlp.w2"), RandomWeight<Real>(root, BlockName(l, "mlp.w2"), hidden, d, kMlpGain),
        ParamGroup::kWeight);
    add(BlockName(l, "mlp.b2"), Tensor<Real>({d}), ParamGroup::kBias);
  }
  add("head.weight", RandomWeight<Real>(root, "head.weight", d, cfg_.classes, kHeadGain),
      ParamGroup::kWeight);
  add("head.bias", Tensor<Real>({cfg_.classes}), ParamGroup::kBias);
  RebuildTables();
}

template <typename Real>
Parameter<Real>& Model<Real>::param(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

template <typename Real>
const Parameter<Real>& Model<Real>::param(std::string_view name) const {
  return const_cast<Model*>(this)->param(name);
}

template <typename Real>
NsadHead Model<Real>::nsad_head(int block, int head) const {
  const auto& t = param(BlockName(block, "nsad")).value;
  std::array<double, kNsadParamCount> p;
  for (int k = 0; k < kNsadParamCount; ++k) p[k] = static_cast<double>(t[head * kNsadParamCount + k]);
  return NsadHead::FromArray(p);
}

template <typename Real>
int Model<Real>::tau_int(int block) const {
  const double tc = static_cast<double>(param(BlockName(block, "tau")).value.item());
  return static_cast<int>(std::clamp(std::round(tc), 0.0, static_cast<double>(cfg_.tau_max)));
}

template <typename Real>
void Model<Real>::RebuildTables() {
  const int d = cfg_.head_dim();
  tables_.assign(cfg_.blocks, {});
  for (int l = 0; l < cfg_.blocks; ++l) {
    for (int h = 0; h < cfg_.heads; ++h) {
      tables_[l].push_back(cfg_.nsad_identity ? IdentityTable(d) : BuildTable(nsad_head(l, h), d));
    }
  }
}

template <typename Real>
void Model<Real>::ProjectParameters() {
  for (int l = 0; l < cfg_.blocks; ++l) {
    auto& nsad = param(BlockName(l, "nsad")).value;
    for (int h = 0; h < cfg_.heads; ++h) {
      Real& u = nsad[h * kNsadParamCount + kNsadU];
      u = std::max(u, Real(0));
    }
    auto& tau = param(BlockName(l, "tau")).value;
    tau[0] = std::clamp(tau[0], Real(0), static_cast<Real>(cfg_.tau_max));
  }
}

template <typename Real>
ForwardResult<Real> Model<Real>::Forward(Tape<Real>& tape, const Tensor<Real>& frames,
                                         bool train) const {
  const auto& fs = frames.shape();
  if (fs.size() != 5 || fs[0] != cfg_.steps || fs[2] != cfg_.channels || fs[3] != cfg_.height ||
      fs[4] != cfg_.width) {
    throw ConfigError("frames " + ShapeString(fs) + " do not match the model's [T=" +
                      std::to_string(cfg_.steps) + ", B, C=" + std::to_string(cfg_.channels) +
                      ", H=" + std::to_string(cfg_.height) + ", W=" + std::to_string(cfg_.width) +
                      "]");
  }
  ForwardResult<Real> r;
  for (const auto& p : params_) r.params.push_back(tape.Leaf(p.value, train && p.trainable));
  std::size_t next = 0;
  auto take = [&](std::string_view expect) {
    const auto& p = params_.at(next);
    if (p.name != expect) throw Error("parameter order mismatch at " + p.name);
    return r.params[next++];
  };
  const LifParams& lif = cfg_.lif;
  const bool tasa = cfg_.attention_mode == AttentionMode::kTasa;
  const int d = cfg_.head_dim();

  const Var<Real> patches = tape.Leaf(Patchify(frames, cfg_.patch));
  const Var<Real> we = take("embed.weight");
  const Var<Real> be = take("embed.bias");
  Var<Real> s = LifForward(AddBias(MatMul(patches, we), be), lif);

  DenoiseOptions dopts;
  dopts.continuous_forward = train && cfg_.nsad_continuous_forward && !cfg_.nsad_identity;
  dopts.straight_through_scores = cfg_.nsad_identity;
  dopts.gate_temperature = cfg_.gate_temperature;

  for (int l = 0; l < cfg_.blocks; ++l) {
    const Var<Real> tau = TauRoundSte(take(BlockName(l, "tau")), cfg_.tau_max);
    const Var<Real> wq = take(BlockName(l, "attn.wq"));
    const Var<Real> wk = take(BlockName(l, "attn.wk"));
    const Var<Real> wv = take(BlockName(l, "attn.wv"));
    const Var<Real> wo = take(BlockName(l, "attn.wo"));
    const Var<Real> nsad = take(BlockName(l, "nsad"));
    const Var<Real> w1 = take(BlockName(l, "mlp.w1"));
    const Var<Real> b1 = take(BlockName(l, "mlp.b1"));
    const Var<Real> w2 = take(BlockName(l, "mlp.w2"));
    const Var<Real> b2 = take(BlockName(l, "mlp.b2"));

    // The pass-through reshape keeps gradient summation order identical to a
    // one-step filter, so t_aw = 1 reproduces spatial-only mode bitwise.
    const Var<Real> filtered =
        tasa ? TemporalFilter(s, cfg_.t_aw, tau) : Reshape(s, s.shape());
    const Var<Real> q = LifForward(MatMul(filtered, wq), lif);
    const Var<Real> k = LifForward(MatMul(filtered, wk), lif);
    const Var<Real> v = LifForward(MatMul(filtered, wv), lif);
    const Var<Real> scores = AttentionScores(q, k, cfg_.heads);
    const Var<Real> map =
        cfg_.nsad_enabled ? Denoise(scores, nsad, tables_[l], d, dopts) : scores;
    r.scores.push_back(scores);
    r.maps.push_back(map);
    const Var<Real> mixed = AttendValues(map, v, cfg_.heads);
    const Var<Real> mixed_f =
        tasa ? TemporalFilter(mixed, cfg_.t_aw, tau) : Reshape(mixed, mixed.shape());
    s = Add(s, LifForward(MatMul(mixed_f, wo), lif));

    const Var<Real> hidden = LifForward(AddBias(MatMul(s, w1), b1), lif);
    s = Add(s, LifForward(AddBias(MatMul(hidden, w2), b2), lif));
  }
  const Var<Real> pooled = Mean(s, {0, 2});
  const Var<Real> wc = take("head.weight");
  const Var<Real> bc = take("head.bias");
  r.logits = AddBias(MatMul(pooled, wc), bc);
  return r;
}

template <typename Real>
Tensor<Real> Model<Real>::Logits(const Tensor<Real>& frames) const {
  Tape<Real> tape;
  return Forward(tape, frames, false).logits.value();
}

template <typename Real>
std::size_t Model<Real>::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

template Tensor<float> Patchify<float>(const Tensor<float>&, int);
template Tensor<double> Patchify<double>(const Tensor<double>&, int);
template class Model<float>;
template class Model<double>;

}  // namespace ds2ta
