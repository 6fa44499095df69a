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

// Temporally attenuated spatiotemporal attention.
//
// A projection input at timestep t sees the presynaptic spikes of the last
// t_aw timesteps. The weight for lag m is the lag-0 weight scaled by
// 2^(-tau * m), so one weight matrix serves the whole window and the sum over
// lags factors into a cheap temporal filter applied before a single matmul:
//
//   filtered[t] = sum_{m=0}^{min(t_aw, t+1)-1} 2^(-tau*m) * s[t-m]
//   projected   = filtered x W
//
// With integer tau the decay is a right shift in fixed point.

#ifndef DS2TA_TASA_H_
#define DS2TA_TASA_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ds2ta/autodiff.h"

namespace ds2ta {

struct TasaConfig {
  int t_aw = 3;     // temporal attention window, in timesteps
  int tau_max = 8;  // clamp for the rounded decay exponent

  void Validate() const;
};

// 2^(-tau * lag), exact for integer arguments.
double DecayFactor(double tau, int lag);

// Straight-through rounding of the continuous decay exponent: forward is
// round-half-away-from-zero clamped to [0, tau_max]; backward passes the
// gradient unchanged inside the clamp range and zero outside it.
template <typename Real>
Var<Real> TauRoundSte(Var<Real> tau_cont, int tau_max);

// Windowed power-of-two decay along axis 0. `tau` is a scalar; its value is
// used as the exponent as-is (callers pass the output of TauRoundSte), and
// the gradient with respect to it is the derivative of 2^(-tau*m) in tau.
template <typename Real>
Var<Real> TemporalFilter(Var<Real> spikes, int t_aw, Var<Real> tau);

// Same filter with a constant exponent; no gradient flows to tau.
template <typename Real>
Var<Real> TemporalFilter(Var<Real> spikes, int t_aw, int tau_int);

// filtered(s_prev) x W. s_prev is [T, ..., D], W is [D, D'].
template <typename Real>
Var<Real> TasaProject(Var<Real> s_prev, Var<Real> weight, const TasaConfig& cfg,
                      Var<Real> tau);

// Zero-filled shift along axis 0: out[t] = in[t - lag] for t >= lag.
template <typename Real>
Var<Real> TimeShift(Var<Real> x, int lag);

// Direct windowed double sum with one materialized weight replica per lag:
//   I[t] = sum_{m = t-t_aw+1}^{t} s[m] x (W * 2^(-tau*(t-m)))
// Built from MatMul/Scale/TimeShift so it shares nothing with the filter
// fast path. Test oracle; cost grows with t_aw.
template <typename Real>
Var<Real> ExplicitStaOracle(Var<Real> s_prev, Var<Real> weight, int t_aw, int tau_int);

// ---- fixed-point shift path ------------------------------------------------

// Fraction bits of the fixed-point decay format.
inline constexpr int kDecayFractionBits = 32;

// Converts nonnegative integer accumulations to fixed point, right-shifts by
// tau*delta bits and converts back. Throws PrecisionError when the shift
// exceeds the fraction bits or an accumulation would overflow the format.
std::vector<double> ShiftDecayApply(std::span<const std::int64_t> acc, int tau_int,
                                    int delta);

// The temporal filter evaluated entirely in fixed point on integer spike
// counts (shift and add only). Input values must be nonnegative integers.
template <typename Real>
Tensor<double> TemporalFilterShift(const Tensor<Real>& counts, int t_aw, int tau_int);

// ---- spike attention -------------------------------------------------------

// Per-timestep, per-head integer scores S = Q_h[t] K_h[t]^T.
// q, k are [T, B, N, D]; the result is [T, B, H, N, N]. No scaling, no softmax.
template <typename Real>
Var<Real> AttentionScores(Var<Real> q, Var<Real> k, int heads);

// Per-head A x V_h with heads merged back: a is [T, B, H, N, N], v is
// [T, B, N, D], the result is [T, B, N, D]. Zero entries of `a` are skipped.
template <typename Real>
Var<Real> AttendValues(Var<Real> a, Var<Real> v, int heads);

}  // namespace ds2ta

#endif  // DS2TA_TASA_H_
