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

#include "ds2ta/tasa.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace ds2ta {

void TasaConfig::Validate() const {
  if (t_aw < 1) throw ConfigError("t_aw must be >= 1, got " + std::to_string(t_aw));
  if (tau_max < 0) {
    throw ConfigError("tau_max must be >= 0, got " + std::to_string(tau_max));
  }
}

double DecayFactor(double tau, int lag) {
  const double e = tau * lag;
  if (e == std::floor(e) && std::abs(e) < 1000) {
    return std::ldexp(1.0, -static_cast<int>(e));
  }
  return std::exp2(-e);
}

template <typename Real>
Var<Real> TauRoundSte(Var<Real> tau_cont, int tau_max) {
  if (tau_cont.value().size() != 1) {
    throw DimensionError("decay exponent must be a scalar, got " +
                         ShapeString(tau_cont.shape()));
  }
  const double tc = static_cast<double>(tau_cont.value().item());
  const double rounded = std::clamp(std::round(tc), 0.0, static_cast<double>(tau_max));
  const bool inside = tc >= 0.0 && tc <= static_cast<double>(tau_max);
  const int id = tau_cont.id();
  return tau_cont.tape()->Record(
      "tau_round_ste", Tensor<Real>(tau_cont.shape(), static_cast<Real>(rounded)), {id},
      [id, inside](Tape<Real>& t, const Tensor<Real>& g) {
        if (inside) (*t.GradSlot(id))[0] += g[0];
      });
}

namespace {

template <typename Real>
Tensor<Real> FilterValues(const Tensor<Real>& s, int t_aw, double tau) {
  if (s.rank() < 1) {
    throw DimensionError("temporal filter needs a time axis, got " + ShapeString(s.shape()));
  }
  if (t_aw < 1) throw ConfigError("t_aw must be >= 1, got " + std::to_string(t_aw));
  const std::int64_t steps = s.dim(0);
  const std::int64_t width = s.size() / steps;
  Tensor<Real> out = s;
  for (std::int64_t t = 0; t < steps; ++t) {
    Real* o = out.raw() + t * width;
    const int window = static_cast<int>(std::min<std::int64_t>(t_aw, t + 1));
    for (int lag = 1; lag < window; ++lag) {
      const Real w = static_cast<Real>(DecayFactor(tau, lag));
      const Real* in = s.raw() + (t - lag) * width;
      for (std::int64_t i = 0; i < width; ++i) o[i] += w * in[i];
    }
  }
  return out;
}

// ds[t'] += sum_lag w_lag * g[t' + lag]
template <typename Real>
void FilterBackwardInput(const Tensor<Real>& g, int t_aw, double tau, Tensor<Real>* gs) {
  const std::int64_t steps = g.dim(0);
  const std::int64_t width = g.size() / steps;
  for (std::int64_t t = 0; t < steps; ++t) {
    const int window = static_cast<int>(std::min<std::int64_t>(t_aw, steps - t));
    Real* out = gs->raw() + t * width;
    for (int lag = 0; lag < window; ++lag) {
      const Real w = static_cast<Real>(DecayFactor(tau, lag));
      const Real* gin = g.raw() + (t + lag) * width;
      for (std::int64_t i = 0; i < width; ++i) out[i] += w * gin[i];
    }
  }
}

}  // namespace

template <typename Real>
Var<Real> TemporalFilter(Var<Real> spikes, int t_aw, Var<Real> tau) {
  if (tau.value().size() != 1) {
    throw DimensionError("decay exponent must be a scalar, got " + ShapeString(tau.shape()));
  }
  const double tau_v = static_cast<double>(tau.value().item());
  Tensor<Real> out = FilterValues(spikes.value(), t_aw, tau_v);
  const int is = spikes.id(), it = tau.id();
  return spikes.tape()->Record(
      "temporal_filter", std::move(out), {is, it},
      [is, it, t_aw, tau_v](Tape<Real>& t, const Tensor<Real>& g) {
        if (Tensor<Real>* gs = t.GradSlot(is)) FilterBackwardInput(g, t_aw, tau_v, gs);
        if (Tensor<Real>* gt = t.GradSlot(it)) {
          const auto& s = t.value(is);
          const std::int64_t steps = s.dim(0);
          const std::int64_t width = s.size() / steps;
          double acc = 0;
          for (std::int64_t ts = 0; ts < steps; ++ts) {
            const int window = static_cast<int>(std::min<std::int64_t>(t_aw, ts + 1));
            for (int lag = 1; lag < window; ++lag) {
              const double dw = -lag * std::numbers::ln2 * DecayFactor(tau_v, lag);
              const Real* in = s.raw() + (ts - lag) * width;
              const Real* gr = g.raw() + ts * width;
              double dot = 0;
              for (std::int64_t i = 0; i < width; ++i) dot += in[i] * gr[i];
              acc += dw * dot;
            }
          }
          (*gt)[0] += static_cast<Real>(acc);
        }
      });
}

template <typename Real>
Var<Real> TemporalFilter(Var<Real> spikes, int t_aw, int tau_int) {
  const double tau_v = tau_int;
  Tensor<Real> out = FilterValues(spikes.value(), t_aw, tau_v);
  const int is = spikes.id();
  return spikes.tape()->Record(
      "temporal_filter", std::move(out), {is},
      [is, t_aw, tau_v](Tape<Real>& t, const Tensor<Real>& g) {
        FilterBackwardInput(g, t_aw, tau_v, t.GradSlot(is));
      });
}

template <typename Real>
Var<Real> TasaProject(Var<Real> s_prev, Var<Real> weight, const TasaConfig& cfg,
                      Var<Real> tau) {
  cfg.Validate();
  if (weight.value().rank() != 2 || s_prev.value().rank() < 2 ||
      s_prev.shape().back() != weight.shape()[0]) {
    throw DimensionError("TASA projection shape mismatch: " + ShapeString(s_prev.shape()) +
                         " x " + ShapeString(weight.shape()));
  }
  return MatMul(TemporalFilter(s_prev, cfg.t_aw, tau), weight);
}

template <typename Real>
Var<Real> TimeShift(Var<Real> x, int lag) {
  const auto& xv = x.value();
  if (xv.rank() < 1) throw DimensionError("time shift needs a time axis");
  if (lag < 0) throw ConfigError("negative time shift");
  const std::int64_t steps = xv.dim(0);
  const std::int64_t width = xv.size() / steps;
  Tensor<Real> out(xv.shape());
  for (std::int64_t t = lag; t < steps; ++t) {
    std::copy_n(xv.raw() + (t - lag) * width, width, out.raw() + t * width);
  }
  const int ix = x.id();
  return x.tape()->Record("time_shift", std::move(out), {ix},
                          [ix, lag, steps, width](Tape<Real>& t, const Tensor<Real>& g) {
                            Tensor<Real>* gx = t.GradSlot(ix);
                            for (std::int64_t ts = lag; ts < steps; ++ts) {
                              const Real* src = g.raw() + ts * width;
                              Real* dst = gx->raw() + (ts - lag) * width;
                              for (std::int64_t i = 0; i < width; ++i) dst[i] += src[i];
                            }
                          });
}

template <typename Real>
Var<Real> ExplicitStaOracle(Var<Real> s_prev, Var<Real> weight, int t_aw, int tau_int) {
  if (t_aw < 1) throw ConfigError("t_aw must be >= 1, got " + std::to_string(t_aw));
  Var<Real> total = MatMul(s_prev, weight);
  for (int lag = 1; lag < t_aw; ++lag) {
    const Var<Real> replica =
        Scale(weight, static_cast<Real>(DecayFactor(tau_int, lag)));
    total = Add(total, MatMul(TimeShift(s_prev, lag), replica));
  }
  return total;
}

std::vector<double> ShiftDecayApply(std::span<const std::int64_t> acc, int tau_int,
                                    int delta) {
  if (tau_int < 0 || delta < 0) {
    throw PrecisionError("shift decay needs nonnegative tau and delta");
  }
  const int shift = tau_int * delta;
  if (shift > kDecayFractionBits) {
    throw PrecisionError("shift of " + std::to_string(shift) + " bits exceeds the " +
                         std::to_string(kDecayFractionBits) + " fraction bits");
  }
  // Fixed-point values must convert to double exactly.
  constexpr std::int64_t kLimit = std::int64_t{1} << (53 - kDecayFractionBits);
  std::vector<double> out;
  out.reserve(acc.size());
  for (const std::int64_t a : acc) {
    if (a < 0 || a >= kLimit) {
      throw PrecisionError("accumulation " + std::to_string(a) +
                           " outside the fixed-point range [0, 2^" +
                           std::to_string(53 - kDecayFractionBits) + ")");
    }
    const std::int64_t fixed = (a << kDecayFractionBits) >> shift;
    out.push_back(std::ldexp(static_cast<double>(fixed), -kDecayFractionBits));
  }
  return out;
}

template <typename Real>
Tensor<double> TemporalFilterShift(const Tensor<Real>& counts, int t_aw, int tau_int) {
  if (counts.rank() < 1) throw DimensionError("temporal filter needs a time axis");
  if (t_aw < 1) throw ConfigError("t_aw must be >= 1, got " + std::to_string(t_aw));
  if (tau_int < 0 || tau_int * (t_aw - 1) > kDecayFractionBits) {
    throw PrecisionError("decay shift tau*(t_aw-1) = " + std::to_string(tau_int * (t_aw - 1)) +
                         " exceeds the fraction bits");
  }
  const std::int64_t steps = counts.dim(0);
  const std::int64_t width = counts.size() / steps;
  std::vector<std::int64_t> fixed(static_cast<std::size_t>(counts.size()), 0);
  for (std::int64_t i = 0; i < counts.size(); ++i) {
    const Real c = counts[i];
    if (c < 0 || c != std::floor(c) || c >= Real(1 << 20)) {
      throw PrecisionError("shift filter input must be a small nonnegative integer");
    }
    fixed[i] = static_cast<std::int64_t>(c) << kDecayFractionBits;
  }
  Tensor<double> out(counts.shape());
  for (std::int64_t t = 0; t < steps; ++t) {
    const int window = static_cast<int>(std::min<std::int64_t>(t_aw, t + 1));
    for (std::int64_t i = 0; i < width; ++i) {
      std::int64_t acc = 0;
      for (int lag = 0; lag < window; ++lag) acc += fixed[(t - lag) * width + i] >> (tau_int * lag);
      out[t * width + i] = std::ldexp(static_cast<double>(acc), -kDecayFractionBits);
    }
  }
  return out;
}

namespace {

struct HeadGeometry {
  std::int64_t tb, n, dim, d;
};

HeadGeometry AttentionGeometry(const Shape& q, const Shape& k, int heads) {
  if (q.size() != 4 || q != k) {
    throw DimensionError("attention expects matching [T, B, N, D] operands, got " +
                         ShapeString(q) + " and " + ShapeString(k));
  }
  if (heads < 1 || q[3] % heads != 0) {
    throw ConfigError("embedding dim " + std::to_string(q[3]) +
                      " is not divisible by head count " + std::to_string(heads));
  }
  return {q[0] * q[1], q[2], q[3], q[3] / heads};
}

}  // namespace

template <typename Real>
Var<Real> AttentionScores(Var<Real> q, Var<Real> k, int heads) {
  const HeadGeometry g = AttentionGeometry(q.shape(), k.shape(), heads);
  const auto& qv = q.value();
  const auto& kv = k.value();
  Tensor<Real> out({q.shape()[0], q.shape()[1], heads, g.n, g.n});
  for (std::int64_t tb = 0; tb < g.tb; ++tb) {
    const Real* qb = qv.raw() + tb * g.n * g.dim;
    const Real* kb = kv.raw() + tb * g.n * g.dim;
    for (int h = 0; h < heads; ++h) {
      Real* ob = out.raw() + (tb * heads + h) * g.n * g.n;
      for (std::int64_t i = 0; i < g.n; ++i) {
        const Real* qi = qb + i * g.dim + h * g.d;
        for (std::int64_t j = 0; j < g.n; ++j) {
          const Real* kj = kb + j * g.dim + h * g.d;
          Real acc = 0;
          for (std::int64_t c = 0; c < g.d; ++c) acc += qi[c] * kj[c];
          ob[i * g.n + j] = acc;
        }
      }
    }
  }
  const int iq = q.id(), ik = k.id();
  return q.tape()->Record(
      "attention_scores", std::move(out), {iq, ik},
      [iq, ik, g, heads](Tape<Real>& t, const Tensor<Real>& grad) {
        const auto& qv = t.value(iq);
        const auto& kv = t.value(ik);
        Tensor<Real>* gq = t.GradSlot(iq);
        Tensor<Real>* gk = t.GradSlot(ik);
        for (std::int64_t tb = 0; tb < g.tb; ++tb) {
          const std::int64_t base = tb * g.n * g.dim;
          for (int h = 0; h < heads; ++h) {
            const Real* gb = grad.raw() + (tb * heads + h) * g.n * g.n;
            for (std::int64_t i = 0; i < g.n; ++i) {
              for (std::int64_t j = 0; j < g.n; ++j) {
                const Real w = gb[i * g.n + j];
                if (w == Real(0)) continue;
                const std::int64_t qi = base + i * g.dim + h * g.d;
                const std::int64_t kj = base + j * g.dim + h * g.d;
                if (gq) {
                  for (std::int64_t c = 0; c < g.d; ++c) (*gq)[qi + c] += w * kv[kj + c];
                }
                if (gk) {
                  for (std::int64_t c = 0; c < g.d; ++c) (*gk)[kj + c] += w * qv[qi + c];
                }
              }
            }
          }
        }
      });
}

template <typename Real>
Var<Real> AttendValues(Var<Real> a, Var<Real> v, int heads) {
  const Shape& vs = v.shape();
  const HeadGeometry g = AttentionGeometry(vs, vs, heads);
  const Shape expect{vs[0], vs[1], heads, g.n, g.n};
  if (a.shape() != expect) {
    throw DimensionError("attention map " + ShapeString(a.shape()) + " does not match " +
                         ShapeString(expect) + " for values " + ShapeString(vs));
  }
  const auto& av = a.value();
  const auto& vv = v.value();
  Tensor<Real> out(vs);
  for (std::int64_t tb = 0; tb < g.tb; ++tb) {
    const std::int64_t base = tb * g.n * g.dim;
    for (int h = 0; h < heads; ++h) {
      const Real* ab = av.raw() + (tb * heads + h) * g.n * g.n;
      for (std::int64_t i = 0; i < g.n; ++i) {
        Real* o = out.raw() + base + i * g.dim + h * g.d;
        for (std::int64_t j = 0; j < g.n; ++j) {
          const Real w = ab[i * g.n + j];
          if (w == Real(0)) continue;
          const Real* vj = vv.raw() + base + j * g.dim + h * g.d;
          for (std::int64_t c = 0; c < g.d; ++c) o[c] += w * vj[c];
        }
      }
    }
  }
  const int ia = a.id(), iv = v.id();
  return a.tape()->Record(
      "attend_values", std::move(out), {ia, iv},
      [ia, iv, g, heads](Tape<Real>& t, const Tensor<Real>& grad) {
        const auto& av = t.value(ia);
        const auto& vv = t.value(iv);
        Tensor<Real>* ga = t.GradSlot(ia);
        Tensor<Real>* gv = t.GradSlot(iv);
        for (std::int64_t tb = 0; tb < g.tb; ++tb) {
          const std::int64_t base = tb * g.n * g.dim;
          for (int h = 0; h < heads; ++h) {
            const std::int64_t abase = (tb * heads + h) * g.n * g.n;
            for (std::int64_t i = 0; i < g.n; ++i) {
              const Real* gi = grad.raw() + base + i * g.dim + h * g.d;
              for (std::int64_t j = 0; j < g.n; ++j) {
                const std::int64_t vj = base + j * g.dim + h * g.d;
                if (ga) {
                  Real acc = 0;
                  for (std::int64_t c = 0; c < g.d; ++c) acc += gi[c] * vv[vj + c];
                  (*ga)[abase + i * g.n + j] += acc;
                }
                const Real w = av[abase + i * g.n + j];
                if (gv && w != Real(0)) {
                  for (std::int64_t c = 0; c < g.d; ++c) (*gv)[vj + c] += w * gi[c];
                }
              }
            }
          }
        }
      });
}

#define DS2TA_INSTANTIATE(Real)                                                    \
  template Var<Real> TauRoundSte<Real>(Var<Real>, int);                            \
  template Var<Real> TemporalFilter<Real>(Var<Real>, int, Var<Real>);              \
  template Var<Real> TemporalFilter<Real>(Var<Real>, int, int);                    \
  template Var<Real> TasaProject<Real>(Var<Real>, Var<Real>, const TasaConfig&,    \
                                       Var<Real>);                                 \
  template Var<Real> TimeShift<Real>(Var<Real>, int);                              \
  template Var<Real> ExplicitStaOracle<Real>(Var<Real>, Var<Real>, int, int);      \
  template Tensor<double> TemporalFilterShift<Real>(const Tensor<Real>&, int, int); \
  template Var<Real> AttentionScores<Real>(Var<Real>, Var<Real>, int);             \
  template Var<Real> AttendValues<Real>(Var<Real>, Var<Real>, int);

DS2TA_INSTANTIATE(float)
DS2TA_INSTANTIATE(double)

#undef DS2TA_INSTANTIATE

}  // namespace ds2ta
