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

// Multi-head lookup-table attention denoiser.
//
// Each head owns a learnable map
//   g(s) = a*s + b*(s - c)^2 + dw / (1 + exp(s - e))
//   f(s) = g(s) if s > u else 0                       (eval)
//   f(s) = sigmoid((s - u) / T_gate) * g(s)           (train relaxation)
// materialized as an integer table AD[s] = max(0, round(f_eval(s))) over
// every achievable score s = 0..d. Denoising an attention map is then one
// table lookup per entry.

#ifndef DS2TA_NSAD_H_
#define DS2TA_NSAD_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ds2ta/autodiff.h"

namespace ds2ta {

inline constexpr int kNsadParamCount = 6;

// Column order of the [H, 6] parameter tensor.
enum NsadParam : int { kNsadA = 0, kNsadB, kNsadC, kNsadDw, kNsadE, kNsadU };

struct NsadHead {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double dw = 0.0;
  double e = 0.0;
  double u = 0.0;

  std::array<double, kNsadParamCount> ToArray() const { return {a, b, c, dw, e, u}; }
  static NsadHead FromArray(std::span<const double> p);
};

enum class NsadMode { kTrain, kEval };

inline constexpr double kDefaultGateTemperature = 0.5;

// Near-identity start: a=1, b=c=dw=0, e=d/2, with the given threshold.
NsadHead InitialNsadHead(int d, double u_init);

double GEval(double s, const NsadHead& head);
double FEval(double s, const NsadHead& head, NsadMode mode,
             double gate_temperature = kDefaultGateTemperature);

// Round half away from zero.
std::int32_t RoundNearest(double x);

using NsadTable = std::vector<std::int32_t>;

NsadTable BuildTable(const NsadHead& head, int d);
NsadTable IdentityTable(int d);

// Train-mode value and its partial derivatives at score s.
struct NsadPartials {
  double f;
  std::array<double, kNsadParamCount> dparams;
  double ds;
};
NsadPartials TrainPartials(double s, const NsadHead& head,
                           double gate_temperature = kDefaultGateTemperature);

// Worst |AD[s] - f_train(s)| over s in [0, d] next to the bound it must stay
// under: 0.5 rounding + |f_eval - f_train| gate softening + clamp excess.
struct TableAgreement {
  double max_deviation = 0;
  double max_bound = 0;
  bool within_bound = true;
};
TableAgreement CheckTableAgreement(const NsadHead& head, int d,
                                   double gate_temperature = kDefaultGateTemperature);

struct DenoiseOptions {
  // Forward emits table values (default) or the continuous train-mode f.
  bool continuous_forward = false;
  // Gradient to the scores: derivative of the train-mode f (false) or a
  // plain pass-through (true, used by frozen identity tables).
  bool straight_through_scores = false;
  double gate_temperature = kDefaultGateTemperature;
};

// Denoises scores [T, B, H, N, N] with per-head tables. `params` is the
// [H, 6] tensor the tables were built from; gradients reach it through the
// train-mode f at each entry's score. Throws RangeError for scores outside
// [0, d] or non-integer scores under table lookup.
template <typename Real>
Var<Real> Denoise(Var<Real> scores, Var<Real> params, const std::vector<NsadTable>& tables,
                  int d, const DenoiseOptions& opts = {});

// Table lookup without a tape, for inference and analysis.
template <typename Real>
Tensor<Real> DenoiseLookup(const Tensor<Real>& scores, const std::vector<NsadTable>& tables,
                           int d);

// One lookup per attention-map entry: T * H * N^2.
std::int64_t DenoiseOpCount(std::int64_t n, std::int64_t heads, std::int64_t steps,
                            std::int64_t d);

}  // namespace ds2ta

#endif  // DS2TA_NSAD_H_
