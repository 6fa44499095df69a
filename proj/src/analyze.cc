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


#include "ds2ta/analyze.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ds2ta/binary_io.h"
#include "ds2ta/config_text.h"
#include "ds2ta/error.h"
#include "ds2ta/train.h"

namespace ds2ta {

template <typename Real>
double Sparsity(std::span<const Real> values) {
  if (values.empty()) throw InputError("sparsity of an empty tensor");
  const auto zeros = std::count(values.begin(), values.end(), Real(0));
  return static_cast<double>(zeros) / static_cast<double>(values.size());
}

std::int64_t CountAttentionOps(std::int64_t n, std::int64_t d, std::int64_t heads,
                               std::int64_t steps) {
  return 2 * steps * heads * n * n * d;
}

double EnergyNanojoules(std::int64_t ops, double sparsity, double e_ac_pj) {
  if (!(sparsity >= 0 && sparsity <= 1)) {
    throw InputError("sparsity " + FormatDouble(sparsity) + " outside [0, 1]");
  }
  return e_ac_pj * static_cast<double>(ops) * (1.0 - sparsity) * 1e-3;
}

double EnergyReduction(double sparsity_base, double sparsity_new) {
  if (!(sparsity_base >= 0 && sparsity_base < 1) || !(sparsity_new >= 0 && sparsity_new <= 1)) {
    throw InputError("sparsity outside [0, 1]");
  }
  return 1.0 - (1.0 - sparsity_new) / (1.0 - sparsity_base);
}

std::string EnergyReport::ToText() const {
  KeyValueText kv;
  kv.Set("ops_convention", "accumulates of Q*K^T plus A*V, 2*T*H*N^2*d per sample");
  kv.Set("energy_formula", "E_AC * ops * (1 - sparsity), nJ per sample");
  kv.SetDouble("e_ac_pj", e_ac_pj);
  kv.Set("mode", mode);
  kv.SetInt("samples", static_cast<std::int64_t>(samples));
  kv.SetDouble("accuracy", accuracy);
  kv.SetInt("blocks", static_cast<std::int64_t>(blocks.size()));
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    const auto& b = blocks[l];
    kv.SetDouble(p + "raw_sparsity", b.raw_sparsity);
    kv.SetDouble(p + "denoised_sparsity", b.denoised_sparsity);
    kv.SetInt(p + "ops", b.ops);
    kv.SetDouble(p + "energy_raw_nj", b.energy_raw_nj);
    kv.SetDouble(p + "energy_nj", b.energy_nj);
    kv.SetDouble(p + "reduction", b.raw_sparsity < 1 ? EnergyReduction(b.raw_sparsity,
                                                                       b.denoised_sparsity)
                                                     : 0.0);
  }
  return kv.Serialize();
}

EnergyReport AnalyzeModel(const Model<float>& model, const EventDataset& data, double e_ac_pj,
                          int threads) {
  const ModelConfig& cfg = model.config();
  const EvalResult ev = Evaluate(model, data, 64, threads);
  EnergyReport rep;
  rep.e_ac_pj = e_ac_pj;
  rep.mode = std::string(AttentionModeName(cfg.attention_mode)) +
             (cfg.nsad_enabled ? (cfg.nsad_identity ? "+nsad_identity" : "+nsad") : "");
  rep.samples = ev.count;
  rep.accuracy = ev.accuracy;
  const std::int64_t ops = CountAttentionOps(cfg.tokens, cfg.head_dim(), cfg.heads, cfg.steps);
  for (int l = 0; l < cfg.blocks; ++l) {
    BlockEnergy b;
    b.raw_sparsity = ev.raw_sparsity[l];
    b.denoised_sparsity = ev.denoised_sparsity[l];
    b.ops = ops;
    b.energy_raw_nj = EnergyNanojoules(ops, b.raw_sparsity, e_ac_pj);
    b.energy_nj = EnergyNanojoules(ops, b.denoised_sparsity, e_ac_pj);
    rep.blocks.push_back(b);
  }
  return rep;
}

std::string EncodeCsv(std::span<const float> grid, int n) {
  std::ostringstream os;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) os << ',';
      os << FormatDouble(grid[i * n + j]);
    }
    os << '\n';
  }
  return os.str();
}

std::string EncodePgm(std::span<const float> grid, int n, int d) {
  std::string out = "P5\n" + std::to_string(n) + " " + std::to_string(n) + "\n255\n";
  const double scale = 255.0 / std::max(d, 1);
  for (int i = 0; i < n * n; ++i) {
    const double v = std::clamp(std::round(grid[i] * scale), 0.0, 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

std::vector<std::string> ExportAttention(const Model<float>& model, const EventDataset& data,
                                         std::size_t sample, const std::string& prefix) {
  if (sample >= data.count()) {
    throw InputError("sample " + std::to_string(sample) + " out of range for " +
                     std::to_string(data.count()) + " samples");
  }
  const ModelConfig& cfg = model.config();
  const std::size_t idx[] = {sample};
  Tape<float> tape;
  const auto r = model.Forward(tape, data.Batch<float>(idx), false);
  const int n = cfg.tokens, d = cfg.head_dim();
  std::vector<std::string> paths;
  auto emit = [&](const std::string& path, std::string_view body) {
    WriteFileAtomic(path, body);
    paths.push_back(path);
  };
  for (int l = 0; l < cfg.blocks; ++l) {
    for (int h = 0; h < cfg.heads; ++h) {
      for (int t = 0; t < cfg.steps; ++t) {
        // Maps are [T, B=1, H, N, N].
        const std::int64_t off = (static_cast<std::int64_t>(t) * cfg.heads + h) * n * n;
        const std::string base = prefix + "_b" + std::to_string(l) + "_h" + std::to_string(h) +
                                 "_t" + std::to_string(t);
        for (const bool denoised : {false, true}) {
          const auto& m = denoised ? r.maps[l].value() : r.scores[l].value();
          const std::span<const float> grid(m.raw() + off, static_cast<std::size_t>(n) * n);
          const std::string stem = base + (denoised ? "_A" : "_S");
          emit(stem + ".csv", EncodeCsv(grid, n));
          emit(stem + ".pgm", EncodePgm(grid, n, d));
        }
      }
    }
  }
  return paths;
}

template double Sparsity<float>(std::span<const float>);
template double Sparsity<double>(std::span<const double>);

}  // namespace ds2ta
