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


// Map sparsity, accumulate-operation counts, the accumulate energy model,
// and attention-map export.

#ifndef DS2TA_ANALYZE_H_
#define DS2TA_ANALYZE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ds2ta/data.h"
#include "ds2ta/model.h"

namespace ds2ta {

inline constexpr double kDefaultEacPicojoules = 0.9;

// Fraction of exact zeros.
template <typename Real>
double Sparsity(std::span<const Real> values);

// Accumulates for S = Q K^T plus A V per sample: 2 * T * H * N^2 * d.
std::int64_t CountAttentionOps(std::int64_t n, std::int64_t d, std::int64_t heads,
                               std::int64_t steps);

// E_AC [pJ] * ops * (1 - sparsity), returned in nJ.
double EnergyNanojoules(std::int64_t ops, double sparsity, double e_ac_pj = kDefaultEacPicojoules);

// 1 - (1 - s_new) / (1 - s_base): the fractional energy saving at equal ops.
double EnergyReduction(double sparsity_base, double sparsity_new);

struct BlockEnergy {
  double raw_sparsity = 0;
  double denoised_sparsity = 0;
  std::int64_t ops = 0;
  double energy_raw_nj = 0;
  double energy_nj = 0;  // at the denoised sparsity
};

struct EnergyReport {
  double e_ac_pj = kDefaultEacPicojoules;
  std::string mode;
  std::size_t samples = 0;
  double accuracy = 0;
  std::vector<BlockEnergy> blocks;

  // Key-value text, one record per block.
  std::string ToText() const;
};

// Evaluates `model` on `data` and prices each block's attention maps.
EnergyReport AnalyzeModel(const Model<float>& model, const EventDataset& data,
                          double e_ac_pj = kDefaultEacPicojoules, int threads = 1);

// Writes raw S and denoised A of one sample for every (block, head, timestep)
// as "<prefix>_b{l}_h{h}_t{t}_{S|A}.csv" and ".pgm". Returns the paths.
std::vector<std::string> ExportAttention(const Model<float>& model, const EventDataset& data,
                                         std::size_t sample, const std::string& prefix);

// Binary 8-bit graymap of an N x N grid scaled by 255 / d and clamped.
std::string EncodePgm(std::span<const float> grid, int n, int d);
std::string EncodeCsv(std::span<const float> grid, int n);

}  // namespace ds2ta

#endif  // DS2TA_ANALYZE_H_
