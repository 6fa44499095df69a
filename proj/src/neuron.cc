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

#include "ds2ta/neuron.h"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace ds2ta {

void LifParams::Validate() const {
  if (!(tau_m > 1.0)) {
    throw ConfigError("LIF tau_m must exceed 1, got " + std::to_string(tau_m));
  }
  if (!(theta > 0.0)) {
    throw ConfigError("LIF threshold must be positive, got " + std::to_string(theta));
  }
  if (!(surrogate_alpha > 0.0)) {
    throw ConfigError("surrogate alpha must be positive, got " +
                      std::to_string(surrogate_alpha));
  }
}

double LifSurrogateGrad(double v, const LifParams& p) {
  const double x = std::numbers::pi * p.surrogate_alpha * (v - p.theta) / 2.0;
  return (p.surrogate_alpha / 2.0) / (1.0 + x * x);
}

double LifSmoothSpike(double v, const LifParams& p) {
  const double x = std::numbers::pi * p.surrogate_alpha * (v - p.theta) / 2.0;
  return 0.5 + std::atan(x) / std::numbers::pi;
}

template <typename Real>
LifState<Real> SimulateLif(const Tensor<Real>& current, const LifParams& params,
                           LifMode mode) {
  params.Validate();
  if (current.rank() < 1) {
    throw DimensionError("LIF input needs a leading time axis, got " +
                         ShapeString(current.shape()));
  }
  const std::int64_t steps = current.dim(0);
  const std::int64_t width = current.size() / steps;
  const Real leak = static_cast<Real>(params.leak());
  const Real theta = static_cast<Real>(params.theta);
  LifState<Real> st{Tensor<Real>(current.shape()), Tensor<Real>(current.shape())};
  for (std::int64_t t = 0; t < steps; ++t) {
    const Real* in = current.raw() + t * width;
    Real* v = st.v.raw() + t * width;
    Real* s = st.s.raw() + t * width;
    for (std::int64_t i = 0; i < width; ++i) {
      if (!std::isfinite(in[i])) {
        throw NumericError("non-finite LIF input at timestep " + std::to_string(t) +
                           " (element " + std::to_string(i) + ")");
      }
    }
    if (t == 0) {
      for (std::int64_t i = 0; i < width; ++i) v[i] = in[i];
    } else {
      const Real* vp = v - width;
      const Real* sp = s - width;
      for (std::int64_t i = 0; i < width; ++i) {
        v[i] = leak * vp[i] * (Real(1) - sp[i]) + in[i];
      }
    }
    if (mode == LifMode::kHard) {
      for (std::int64_t i = 0; i < width; ++i) s[i] = v[i] >= theta ? Real(1) : Real(0);
    } else {
      for (std::int64_t i = 0; i < width; ++i) {
        s[i] = static_cast<Real>(LifSmoothSpike(v[i], params));
      }
    }
  }
  return st;
}

template <typename Real>
Var<Real> LifForward(Var<Real> current, const LifParams& params, LifMode mode) {
  auto state = std::make_shared<LifState<Real>>(SimulateLif(current.value(), params, mode));
  Tensor<Real> spikes = state->s;
  const int ic = current.id();
  return current.tape()->Record(
      "lif", std::move(spikes), {ic},
      [ic, state, params](Tape<Real>& t, const Tensor<Real>& g) {
        Tensor<Real>* gi = t.GradSlot(ic);
        const std::int64_t steps = g.dim(0);
        const std::int64_t width = g.size() / steps;
        const Real leak = static_cast<Real>(params.leak());
        const Real half_alpha = static_cast<Real>(params.surrogate_alpha / 2.0);
        const Real k = static_cast<Real>(std::numbers::pi * params.surrogate_alpha / 2.0);
        const Real theta = static_cast<Real>(params.theta);
        // gv_next holds dL/dV[t+1] while sweeping backwards.
        std::vector<Real> gv_next(static_cast<std::size_t>(width), Real(0));
        for (std::int64_t ts = steps - 1; ts >= 0; --ts) {
          const Real* v = state->v.raw() + ts * width;
          const Real* s = state->s.raw() + ts * width;
          const Real* gs = g.raw() + ts * width;
          Real* out = gi->raw() + ts * width;
          const bool last = ts == steps - 1;
          for (std::int64_t i = 0; i < width; ++i) {
            const Real x = k * (v[i] - theta);
            const Real surrogate = half_alpha / (Real(1) + x * x);
            Real gspike = gs[i];
            Real gv = 0;
            if (!last) {
              gspike -= gv_next[i] * leak * v[i];
              gv = gv_next[i] * leak * (Real(1) - s[i]);
            }
            gv += gspike * surrogate;
            out[i] += gv;
            gv_next[i] = gv;
          }
        }
      });
}

template LifState<float> SimulateLif<float>(const Tensor<float>&, const LifParams&, LifMode);
template LifState<double> SimulateLif<double>(const Tensor<double>&, const LifParams&, LifMode);
template Var<float> LifForward<float>(Var<float>, const LifParams&, LifMode);
template Var<double> LifForward<double>(Var<double>, const LifParams&, LifMode);

}  // namespace ds2ta
