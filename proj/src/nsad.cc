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

#include "ds2ta/nsad.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace ds2ta {

namespace {

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace

NsadHead NsadHead::FromArray(std::span<const double> p) {
  return NsadHead{p[kNsadA], p[kNsadB], p[kNsadC], p[kNsadDw], p[kNsadE], p[kNsadU]};
}

NsadHead InitialNsadHead(int d, double u_init) {
  NsadHead h;
  h.e = d / 2.0;
  h.u = u_init;
  return h;
}

double GEval(double s, const NsadHead& h) {
  const double q = s - h.c;
  return h.a * s + h.b * q * q + h.dw * Sigmoid(h.e - s);
}

double FEval(double s, const NsadHead& h, NsadMode mode, double gate_temperature) {
  if (mode == NsadMode::kEval) return s > h.u ? GEval(s, h) : 0.0;
  return Sigmoid((s - h.u) / gate_temperature) * GEval(s, h);
}

std::int32_t RoundNearest(double x) { return static_cast<std::int32_t>(std::round(x)); }

NsadTable BuildTable(const NsadHead& head, int d) {
  if (d < 1) throw ConfigError("table width d must be >= 1, got " + std::to_string(d));
  NsadTable table(static_cast<std::size_t>(d) + 1);
  for (int s = 0; s <= d; ++s) {
    table[s] = std::max<std::int32_t>(0, RoundNearest(FEval(s, head, NsadMode::kEval)));
  }
  return table;
}

NsadTable IdentityTable(int d) {
  NsadTable table(static_cast<std::size_t>(d) + 1);
  for (int s = 0; s <= d; ++s) table[s] = s;
  return table;
}

NsadPartials TrainPartials(double s, const NsadHead& h, double gate_temperature) {
  const double sig_e = Sigmoid(h.e - s);
  const double dsig = sig_e * (1.0 - sig_e);
  const double q = s - h.c;
  const double g = h.a * s + h.b * q * q + h.dw * sig_e;
  const double gate = Sigmoid((s - h.u) / gate_temperature);
  const double dgate = gate * (1.0 - gate) / gate_temperature;
  NsadPartials p;
  p.f = gate * g;
  p.dparams[kNsadA] = gate * s;
  p.dparams[kNsadB] = gate * q * q;
  p.dparams[kNsadC] = gate * (-2.0 * h.b * q);
  p.dparams[kNsadDw] = gate * sig_e;
  p.dparams[kNsadE] = gate * h.dw * dsig;
  p.dparams[kNsadU] = -g * dgate;
  p.ds = gate * (h.a + 2.0 * h.b * q - h.dw * dsig) + g * dgate;
  return p;
}

TableAgreement CheckTableAgreement(const NsadHead& head, int d, double gate_temperature) {
  const NsadTable table = BuildTable(head, d);
  TableAgreement out;
  for (int s = 0; s <= d; ++s) {
    const double f_eval = FEval(s, head, NsadMode::kEval);
    const double f_train = FEval(s, head, NsadMode::kTrain, gate_temperature);
    const double clamp_excess = RoundNearest(f_eval) < 0 ? std::abs(f_eval) : 0.0;
    const double bound = 0.5 + std::abs(f_eval - f_train) + clamp_excess;
    const double dev = std::abs(table[s] - f_train);
    out.max_deviation = std::max(out.max_deviation, dev);
    out.max_bound = std::max(out.max_bound, bound);
    out.within_bound = out.within_bound && dev <= bound + 1e-12;
  }
  return out;
}

namespace {

struct DenoiseGeometry {
  std::int64_t outer;  // T * B
  int heads;
  std::int64_t block;  // N * N
};

DenoiseGeometry Geometry(const Shape& s, const Shape& params,
                         const std::vector<NsadTable>& tables, int d) {
  if (s.size() != 5 || s[3] != s[4]) {
    throw DimensionError("denoise expects [T, B, H, N, N] scores, got " + ShapeString(s));
  }
  const int heads = static_cast<int>(s[2]);
  if (static_cast<int>(tables.size()) != heads) {
    throw ConfigError("have " + std::to_string(tables.size()) + " tables for " +
                      std::to_string(heads) + " heads");
  }
  for (const auto& t : tables) {
    if (static_cast<int>(t.size()) != d + 1) {
      throw ConfigError("table length " + std::to_string(t.size()) + " != d+1 = " +
                        std::to_string(d + 1));
    }
  }
  if (!params.empty() && params != Shape{heads, kNsadParamCount}) {
    throw DimensionError("NSAD parameters must be [H, 6], got " + ShapeString(params));
  }
  return {s[0] * s[1], heads, s[3] * s[4]};
}

template <typename Real>
int ScoreIndex(Real s, int d, bool need_integer) {
  if (!(s >= 0 && s <= d)) {
    throw RangeError("attention score " + std::to_string(static_cast<double>(s)) +
                     " outside [0, " + std::to_string(d) + "]");
  }
  const int idx = static_cast<int>(s);
  if (need_integer && static_cast<Real>(idx) != s) {
    throw RangeError("non-integer attention score " + std::to_string(static_cast<double>(s)) +
                     " (Q/K not binary?)");
  }
  return idx;
}

}  // namespace

template <typename Real>
Tensor<Real> DenoiseLookup(const Tensor<Real>& scores, const std::vector<NsadTable>& tables,
                           int d) {
  const DenoiseGeometry g = Geometry(scores.shape(), {}, tables, d);
  Tensor<Real> out(scores.shape());
  for (std::int64_t o = 0; o < g.outer; ++o) {
    for (int h = 0; h < g.heads; ++h) {
      const std::int64_t base = (o * g.heads + h) * g.block;
      const NsadTable& table = tables[h];
      for (std::int64_t i = 0; i < g.block; ++i) {
        out[base + i] = static_cast<Real>(table[ScoreIndex(scores[base + i], d, true)]);
      }
    }
  }
  return out;
}

template <typename Real>
Var<Real> Denoise(Var<Real> scores, Var<Real> params, const std::vector<NsadTable>& tables,
                  int d, const DenoiseOptions& opts) {
  const DenoiseGeometry g = Geometry(scores.shape(), params.shape(), tables, d);
  std::vector<NsadHead> heads;
  for (int h = 0; h < g.heads; ++h) {
    std::array<double, kNsadParamCount> p;
    for (int k = 0; k < kNsadParamCount; ++k) {
      p[k] = static_cast<double>(params.value()[h * kNsadParamCount + k]);
    }
    heads.push_back(NsadHead::FromArray(p));
  }
  const auto& sv = scores.value();
  Tensor<Real> out(sv.shape());
  if (opts.continuous_forward) {
    for (std::int64_t o = 0; o < g.outer; ++o) {
      for (int h = 0; h < g.heads; ++h) {
        const std::int64_t base = (o * g.heads + h) * g.block;
        for (std::int64_t i = 0; i < g.block; ++i) {
          const Real s = sv[base + i];
          ScoreIndex(s, d, false);
          out[base + i] = static_cast<Real>(
              FEval(static_cast<double>(s), heads[h], NsadMode::kTrain, opts.gate_temperature));
        }
      }
    }
  } else {
    out = DenoiseLookup(sv, tables, d);
  }

  const int is = scores.id(), ip = params.id();
  auto saved = std::make_shared<std::vector<NsadHead>>(std::move(heads));
  return scores.tape()->Record(
      "denoise", std::move(out), {is, ip},
      [is, ip, g, d, opts, saved](Tape<Real>& t, const Tensor<Real>& grad) {
        const auto& sv = t.value(is);
        Tensor<Real>* gs = t.GradSlot(is);
        Tensor<Real>* gp = t.GradSlot(ip);
        std::vector<double> pacc(static_cast<std::size_t>(g.heads) * kNsadParamCount, 0.0);
        for (int h = 0; h < g.heads; ++h) {
          const NsadHead& head = (*saved)[h];
          // Integer scores share partials; cache one entry per score value.
          std::vector<NsadPartials> cache;
          if (!opts.continuous_forward) {
            for (int s = 0; s <= d; ++s) cache.push_back(TrainPartials(s, head, opts.gate_temperature));
          }
          std::vector<double> upstream_by_score(static_cast<std::size_t>(d) + 1, 0.0);
          for (std::int64_t o = 0; o < g.outer; ++o) {
            const std::int64_t base = (o * g.heads + h) * g.block;
            for (std::int64_t i = 0; i < g.block; ++i) {
              const Real up = grad[base + i];
              if (up == Real(0)) continue;
              const Real s = sv[base + i];
              if (!opts.continuous_forward) {
                const int idx = static_cast<int>(s);
                upstream_by_score[idx] += static_cast<double>(up);
                if (gs) {
                  (*gs)[base + i] += opts.straight_through_scores
                                         ? up
                                         : static_cast<Real>(cache[idx].ds) * up;
                }
              } else {
                const NsadPartials p = TrainPartials(static_cast<double>(s), head,
                                                     opts.gate_temperature);
                for (int k = 0; k < kNsadParamCount; ++k) {
                  pacc[h * kNsadParamCount + k] += p.dparams[k] * static_cast<double>(up);
                }
                if (gs) {
                  (*gs)[base + i] += opts.straight_through_scores
                                         ? up
                                         : static_cast<Real>(p.ds * static_cast<double>(up));
                }
              }
            }
          }
          if (!opts.continuous_forward) {
            for (int s = 0; s <= d; ++s) {
              for (int k = 0; k < kNsadParamCount; ++k) {
                pacc[h * kNsadParamCount + k] += cache[s].dparams[k] * upstream_by_score[s];
              }
            }
          }
        }
        if (gp) {
          for (std::size_t i = 0; i < pacc.size(); ++i) (*gp)[i] += static_cast<Real>(pacc[i]);
        }
      });
}

std::int64_t DenoiseOpCount(std::int64_t n, std::int64_t heads, std::int64_t steps,
                            std::int64_t /*d*/) {
  return steps * heads * n * n;
}

template Tensor<float> DenoiseLookup<float>(const Tensor<float>&, const std::vector<NsadTable>&, int);
template Tensor<double> DenoiseLookup<double>(const Tensor<double>&, const std::vector<NsadTable>&, int);
template Var<float> Denoise<float>(Var<float>, Var<float>, const std::vector<NsadTable>&, int,
                                   const DenoiseOptions&);
template Var<double> Denoise<double>(Var<double>, Var<double>, const std::vector<NsadTable>&, int,
                                     const DenoiseOptions&);

}  // namespace ds2ta
