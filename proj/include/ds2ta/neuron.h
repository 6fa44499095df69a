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

// Leaky integrate-and-fire neuron arrays with hard reset.
//
//   V[t] = (1 - 1/tau_m) * V[t-1] * (1 - S[t-1]) + I[t]
//   S[t] = H(V[t] - theta),  H(x) = 1 iff x >= 0
//
// Axis 0 of every tensor is time; the remaining axes are independent neurons.
// Backward is BPTT with the arctan surrogate
//   sigma'(v) = (alpha / 2) / (1 + (pi * alpha * (v - theta) / 2)^2)
// standing in for dS/dV, including on the reset path through (1 - S[t-1]).

#ifndef DS2TA_NEURON_H_
#define DS2TA_NEURON_H_

#include "ds2ta/autodiff.h"

namespace ds2ta {

struct LifParams {
  double tau_m = 2.0;
  double theta = 1.0;
  double surrogate_alpha = 2.0;

  double leak() const { return 1.0 - 1.0 / tau_m; }
  void Validate() const;
};

enum class LifMode {
  kHard,    // Heaviside firing; exactly binary output
  kSmooth,  // firing replaced by the surrogate's primitive, for gradient checks
};

template <typename Real>
struct LifState {
  Tensor<Real> v;  // membrane potentials, same shape as the input current
  Tensor<Real> s;  // emitted spikes
};

// Runs the recurrence without a tape. Throws NumericError naming the
// timestep of the first non-finite input.
template <typename Real>
LifState<Real> SimulateLif(const Tensor<Real>& current, const LifParams& params,
                           LifMode mode = LifMode::kHard);

template <typename Real>
Var<Real> LifForward(Var<Real> current, const LifParams& params,
                     LifMode mode = LifMode::kHard);

// sigma'(v - theta).
double LifSurrogateGrad(double v, const LifParams& params);
// Primitive of the surrogate: 1/2 + atan(pi * alpha * (v - theta) / 2) / pi.
double LifSmoothSpike(double v, const LifParams& params);

}  // namespace ds2ta

#endif  // DS2TA_NEURON_H_
