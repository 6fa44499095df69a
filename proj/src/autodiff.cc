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

#include "ds2ta/autodiff.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace ds2ta {

// ---- Tape ------------------------------------------------------------------

template <typename Real>
Var<Real> Tape<Real>::Leaf(Tensor<Real> value, bool requires_grad) {
  slots_.push_back(Slot{std::move(value), std::nullopt, requires_grad});
  return Var<Real>(this, static_cast<int>(slots_.size()) - 1);
}

template <typename Real>
Var<Real> Tape<Real>::Record(const char* op, Tensor<Real> value,
                             std::vector<int> inputs, BackwardFn fn) {
  bool needs = false;
  for (const int id : inputs) needs = needs || slots_.at(id).requires_grad;
  slots_.push_back(Slot{std::move(value), std::nullopt, needs});
  const int out = static_cast<int>(slots_.size()) - 1;
  if (needs) nodes_.push_back(Node{op, std::move(inputs), out, std::move(fn)});
  return Var<Real>(this, out);
}

template <typename Real>
const Tensor<Real>& Tape<Real>::grad(int id) const {
  const auto& slot = slots_.at(id);
  if (!slot.grad) {
    throw Error("gradient of value " + std::to_string(id) +
                " was never materialized");
  }
  return *slot.grad;
}

template <typename Real>
Tensor<Real>* Tape<Real>::GradSlot(int id) {
  auto& slot = slots_.at(id);
  if (!slot.requires_grad) return nullptr;
  if (!slot.grad) slot.grad.emplace(slot.value.shape());
  return &*slot.grad;
}

template <typename Real>
void Tape<Real>::Backward(Var<Real> root) {
  if (root.value().size() != 1) {
    throw DimensionError("Backward() without a seed needs a scalar root, got " +
                         ShapeString(root.shape()));
  }
  Backward(root, Tensor<Real>(root.shape(), Real(1)));
}

template <typename Real>
void Tape<Real>::Backward(Var<Real> root, const Tensor<Real>& seed) {
  if (seed.shape() != root.shape()) {
    throw DimensionError("seed shape " + ShapeString(seed.shape()) +
                         " does not match root " + ShapeString(root.shape()));
  }
  Tensor<Real>* g = GradSlot(root.id());
  if (g == nullptr) return;
  for (std::int64_t i = 0; i < g->size(); ++i) (*g)[i] += seed[i];
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output > root.id()) continue;
    auto& out = slots_[it->output];
    if (!out.grad) continue;
    it->fn(*this, *out.grad);
    for (const int in : it->inputs) GradSlot(in);
  }
}

// ---- kernels ----------------------------------------------------------------

template <typename Real>
void GemmAccumulate(const Real* a, const Real* b, Real* c, std::int64_t m,
                    std::int64_t k, std::int64_t p) {
  for (std::int64_t i = 0; i < m; ++i) {
    Real* crow = c + i * p;
    const Real* arow = a + i * k;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const Real aik = arow[kk];
      if (aik == Real(0)) continue;
      const Real* brow = b + kk * p;
      for (std::int64_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

namespace {

// da[M, K] += dc[M, P] * b[K, P]^T. `bt` is scratch for b^T so the inner
// loop runs over contiguous rows.
template <typename Real>
void GemmAccumulateBt(const Real* dc, const Real* b, Real* da, std::int64_t m,
                      std::int64_t k, std::int64_t p, std::vector<Real>& bt) {
  bt.resize(static_cast<std::size_t>(k * p));
  for (std::int64_t kk = 0; kk < k; ++kk) {
    for (std::int64_t j = 0; j < p; ++j) bt[j * k + kk] = b[kk * p + j];
  }
  for (std::int64_t i = 0; i < m; ++i) {
    const Real* drow = dc + i * p;
    Real* darow = da + i * k;
    for (std::int64_t j = 0; j < p; ++j) {
      const Real dij = drow[j];
      if (dij == Real(0)) continue;
      const Real* btrow = bt.data() + j * k;
      for (std::int64_t kk = 0; kk < k; ++kk) darow[kk] += dij * btrow[kk];
    }
  }
}

// db[K, P] += a[M, K]^T * dc[M, P], skipping zero a entries.
template <typename Real>
void GemmAccumulateAt(const Real* a, const Real* dc, Real* db, std::int64_t m,
                      std::int64_t k, std::int64_t p) {
  for (std::int64_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    const Real* drow = dc + i * p;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const Real aik = arow[kk];
      if (aik == Real(0)) continue;
      Real* dbrow = db + kk * p;
      for (std::int64_t j = 0; j < p; ++j) dbrow[j] += aik * drow[j];
    }
  }
}

struct BatchPlan {
  Shape out_shape;
  std::vector<std::int64_t> a_batch;  // per output batch: a batch index
  std::vector<std::int64_t> b_batch;
  std::int64_t m, k, p;
};

BatchPlan PlanMatMul(const Shape& as, const Shape& bs) {
  if (as.size() < 2 || bs.size() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " +
                         ShapeString(as) + " and " + ShapeString(bs));
  }
  BatchPlan plan;
  plan.m = as[as.size() - 2];
  plan.k = as[as.size() - 1];
  plan.p = bs[bs.size() - 1];
  if (bs[bs.size() - 2] != plan.k) {
    throw DimensionError("matmul inner extents differ: " + ShapeString(as) +
                         " x " + ShapeString(bs));
  }
  const std::size_t la = as.size() - 2, lb = bs.size() - 2;
  const std::size_t lead = std::max(la, lb);
  Shape a_lead(lead, 1), b_lead(lead, 1), o_lead(lead, 1);
  for (std::size_t i = 0; i < la; ++i) a_lead[lead - la + i] = as[i];
  for (std::size_t i = 0; i < lb; ++i) b_lead[lead - lb + i] = bs[i];
  for (std::size_t i = 0; i < lead; ++i) {
    if (a_lead[i] != b_lead[i] && a_lead[i] != 1 && b_lead[i] != 1) {
      throw DimensionError("matmul batch extents not broadcastable: " +
                           ShapeString(as) + " x " + ShapeString(bs));
    }
    o_lead[i] = std::max(a_lead[i], b_lead[i]);
  }
  const Shape as_str = Strides(a_lead), bs_str = Strides(b_lead);
  const std::int64_t nb = NumElements(o_lead);
  plan.a_batch.resize(nb);
  plan.b_batch.resize(nb);
  std::vector<std::int64_t> idx(lead, 0);
  for (std::int64_t n = 0; n < nb; ++n) {
    std::int64_t ao = 0, bo = 0;
    for (std::size_t i = 0; i < lead; ++i) {
      if (a_lead[i] != 1) ao += idx[i] * as_str[i];
      if (b_lead[i] != 1) bo += idx[i] * bs_str[i];
    }
    plan.a_batch[n] = ao;
    plan.b_batch[n] = bo;
    for (int i = static_cast<int>(lead) - 1; i >= 0; --i) {
      if (++idx[i] < o_lead[i]) break;
      idx[i] = 0;
    }
  }
  plan.out_shape = o_lead;
  plan.out_shape.push_back(plan.m);
  plan.out_shape.push_back(plan.p);
  // A shared right operand lets every leading batch fold into the rows of
  // one product; per-element accumulation order is unchanged.
  if (lb == 0 && nb > 1) {
    plan.m *= nb;
    plan.a_batch.assign(1, 0);
    plan.b_batch.assign(1, 0);
  }
  return plan;
}

void RequireSameShape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeString(a) + " vs " + ShapeString(b));
  }
}

bool IsScalar(const Shape& s) { return NumElements(s) == 1 && s.empty(); }

}  // namespace

// ---- ops --------------------------------------------------------------------

template <typename Real>
Var<Real> MatMul(Var<Real> a, Var<Real> b) {
  Tape<Real>& tape = *a.tape();
  const auto plan = std::make_shared<BatchPlan>(PlanMatMul(a.shape(), b.shape()));
  Tensor<Real> out(plan->out_shape);
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::int64_t mk = plan->m * plan->k, kp = plan->k * plan->p,
                     mp = plan->m * plan->p;
  for (std::size_t n = 0; n < plan->a_batch.size(); ++n) {
    GemmAccumulate(av.raw() + plan->a_batch[n] * mk,
                   bv.raw() + plan->b_batch[n] * kp, out.raw() + n * mp,
                   plan->m, plan->k, plan->p);
  }
  const int ia = a.id(), ib = b.id();
  return tape.Record(
      "matmul", std::move(out), {ia, ib},
      [ia, ib, plan, mk, kp, mp](Tape<Real>& t, const Tensor<Real>& g) {
        const auto& av = t.value(ia);
        const auto& bv = t.value(ib);
        Tensor<Real>* ga = t.GradSlot(ia);
        Tensor<Real>* gb = t.GradSlot(ib);
        std::vector<Real> scratch;
        for (std::size_t n = 0; n < plan->a_batch.size(); ++n) {
          const Real* gc = g.raw() + n * mp;
          if (ga) {
            GemmAccumulateBt(gc, bv.raw() + plan->b_batch[n] * kp,
                             ga->raw() + plan->a_batch[n] * mk, plan->m,
                             plan->k, plan->p, scratch);
          }
          if (gb) {
            GemmAccumulateAt(av.raw() + plan->a_batch[n] * mk, gc,
                             gb->raw() + plan->b_batch[n] * kp, plan->m,
                             plan->k, plan->p);
          }
        }
      });
}

namespace {

enum class Binary { kAdd, kSub, kMul };

template <typename Real>
Var<Real> Elementwise(Binary kind, Var<Real> a, Var<Real> b) {
  const char* name = kind == Binary::kAdd ? "add" : kind == Binary::kSub ? "sub" : "mul";
  const bool a_scalar = IsScalar(a.shape()) && !IsScalar(b.shape());
  const bool b_scalar = IsScalar(b.shape()) && !IsScalar(a.shape());
  if (!a_scalar && !b_scalar) RequireSameShape(name, a.shape(), b.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  Tensor<Real> out(a_scalar ? b.shape() : a.shape());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const Real x = av[a_scalar ? 0 : i];
    const Real y = bv[b_scalar ? 0 : i];
    out[i] = kind == Binary::kAdd ? x + y : kind == Binary::kSub ? x - y : x * y;
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->Record(
      name, std::move(out), {ia, ib},
      [kind, ia, ib, a_scalar, b_scalar](Tape<Real>& t, const Tensor<Real>& g) {
        Tensor<Real>* ga = t.GradSlot(ia);
        Tensor<Real>* gb = t.GradSlot(ib);
        const auto& av = t.value(ia);
        const auto& bv = t.value(ib);
        for (std::int64_t i = 0; i < g.size(); ++i) {
          const std::int64_t ai = a_scalar ? 0 : i, bi = b_scalar ? 0 : i;
          switch (kind) {
            case Binary::kAdd:
              if (ga) (*ga)[ai] += g[i];
              if (gb) (*gb)[bi] += g[i];
              break;
            case Binary::kSub:
              if (ga) (*ga)[ai] += g[i];
              if (gb) (*gb)[bi] -= g[i];
              break;
            case Binary::kMul:
              if (ga) (*ga)[ai] += g[i] * bv[bi];
              if (gb) (*gb)[bi] += g[i] * av[ai];
              break;
          }
        }
      });
}

}  // namespace

template <typename Real>
Var<Real> Add(Var<Real> a, Var<Real> b) {
  return Elementwise(Binary::kAdd, a, b);
}
template <typename Real>
Var<Real> Sub(Var<Real> a, Var<Real> b) {
  return Elementwise(Binary::kSub, a, b);
}
template <typename Real>
Var<Real> Mul(Var<Real> a, Var<Real> b) {
  return Elementwise(Binary::kMul, a, b);
}

template <typename Real>
Var<Real> Scale(Var<Real> a, Real c) {
  Tensor<Real> out = a.value();
  for (auto& x : out.data()) x *= c;
  const int ia = a.id();
  return a.tape()->Record("scale", std::move(out), {ia},
                          [ia, c](Tape<Real>& t, const Tensor<Real>& g) {
                            Tensor<Real>* ga = t.GradSlot(ia);
                            for (std::int64_t i = 0; i < g.size(); ++i) {
                              (*ga)[i] += c * g[i];
                            }
                          });
}

template <typename Real>
Var<Real> AddBias(Var<Real> x, Var<Real> bias) {
  const Shape& xs = x.shape();
  if (bias.value().rank() != 1 || xs.empty() || xs.back() != bias.shape()[0]) {
    throw DimensionError("bias " + ShapeString(bias.shape()) +
                         " does not match trailing extent of " + ShapeString(xs));
  }
  const std::int64_t p = xs.back();
  Tensor<Real> out = x.value();
  const auto& bv = bias.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += bv[i % p];
  const int ix = x.id(), ib = bias.id();
  return x.tape()->Record("add_bias", std::move(out), {ix, ib},
                          [ix, ib, p](Tape<Real>& t, const Tensor<Real>& g) {
                            if (Tensor<Real>* gx = t.GradSlot(ix)) {
                              for (std::int64_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                            }
                            if (Tensor<Real>* gb = t.GradSlot(ib)) {
                              for (std::int64_t i = 0; i < g.size(); ++i) (*gb)[i % p] += g[i];
                            }
                          });
}

template <typename Real>
Var<Real> Reshape(Var<Real> a, Shape shape) {
  Tensor<Real> out = a.value().Reshaped(std::move(shape));
  const int ia = a.id();
  return a.tape()->Record("reshape", std::move(out), {ia},
                          [ia](Tape<Real>& t, const Tensor<Real>& g) {
                            Tensor<Real>* ga = t.GradSlot(ia);
                            for (std::int64_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
                          });
}

namespace {

// For each input element, the flat index of the output element it reduces
// into.
std::vector<std::int64_t> ReductionMap(const Shape& in, const std::vector<int>& axes,
                                       Shape* out_shape, std::int64_t* count) {
  std::vector<bool> reduced(in.size(), false);
  for (const int ax : axes) {
    if (ax < 0 || ax >= static_cast<int>(in.size())) {
      throw AxisError("axis " + std::to_string(ax) + " out of range for " +
                      ShapeString(in));
    }
    if (reduced[ax]) throw AxisError("axis " + std::to_string(ax) + " repeated");
    reduced[ax] = true;
  }
  out_shape->clear();
  *count = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (reduced[i]) {
      *count *= in[i];
    } else {
      out_shape->push_back(in[i]);
    }
  }
  // Output strides expressed per input axis (0 for reduced axes).
  std::vector<std::int64_t> ostride(in.size(), 0);
  std::int64_t s = 1;
  for (int i = static_cast<int>(in.size()) - 1; i >= 0; --i) {
    if (!reduced[i]) {
      ostride[i] = s;
      s *= in[i];
    }
  }
  std::vector<std::int64_t> map(static_cast<std::size_t>(NumElements(in)));
  std::vector<std::int64_t> idx(in.size(), 0);
  std::int64_t off = 0;
  for (std::size_t n = 0; n < map.size(); ++n) {
    map[n] = off;
    for (int i = static_cast<int>(in.size()) - 1; i >= 0; --i) {
      ++idx[i];
      off += ostride[i];
      if (idx[i] < in[i]) break;
      off -= ostride[i] * idx[i];
      idx[i] = 0;
    }
  }
  return map;
}

template <typename Real>
Var<Real> Reduce(Var<Real> a, std::vector<int> axes, bool mean) {
  Shape out_shape;
  std::int64_t count = 0;
  auto map = std::make_shared<std::vector<std::int64_t>>(
      ReductionMap(a.shape(), axes, &out_shape, &count));
  Tensor<Real> out(out_shape);
  const auto& av = a.value();
  for (std::int64_t i = 0; i < av.size(); ++i) out[(*map)[i]] += av[i];
  const Real scale = mean ? Real(1) / static_cast<Real>(count) : Real(1);
  if (mean) {
    for (auto& x : out.data()) x *= scale;
  }
  const int ia = a.id();
  return a.tape()->Record(mean ? "mean" : "sum", std::move(out), {ia},
                          [ia, map, scale](Tape<Real>& t, const Tensor<Real>& g) {
                            Tensor<Real>* ga = t.GradSlot(ia);
                            for (std::int64_t i = 0; i < ga->size(); ++i) {
                              (*ga)[i] += scale * g[(*map)[i]];
                            }
                          });
}

}  // namespace

template <typename Real>
Var<Real> Sum(Var<Real> a, std::vector<int> axes) {
  return Reduce(a, std::move(axes), false);
}
template <typename Real>
Var<Real> Mean(Var<Real> a, std::vector<int> axes) {
  return Reduce(a, std::move(axes), true);
}
template <typename Real>
Var<Real> SumAll(Var<Real> a) {
  std::vector<int> axes(a.shape().size());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
  return Reduce(a, std::move(axes), false);
}

template <typename Real>
Var<Real> CrossEntropyLogits(Var<Real> logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2) {
    throw DimensionError("cross entropy expects [B, C] logits, got " + ShapeString(s));
  }
  const std::int64_t batch = s[0], classes = s[1];
  if (static_cast<std::int64_t>(labels.size()) != batch) {
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match batch " + std::to_string(batch));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw LabelError("label " + std::to_string(labels[i]) + " at position " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
  const auto& lv = logits.value();
  auto softmax = std::make_shared<Tensor<Real>>(s);
  double total = 0;
  for (std::int64_t b = 0; b < batch; ++b) {
    const Real* row = lv.raw() + b * classes;
    Real mx = row[0];
    for (std::int64_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    Real z = 0;
    for (std::int64_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    const Real logz = mx + std::log(z);
    for (std::int64_t c = 0; c < classes; ++c) {
      (*softmax)[b * classes + c] = std::exp(row[c] - logz);
    }
    total += static_cast<double>(logz - row[labels[b]]);
  }
  auto lab = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  const int il = logits.id();
  return logits.tape()->Record(
      "cross_entropy", Tensor<Real>::Scalar(static_cast<Real>(total / batch)), {il},
      [il, softmax, lab, batch, classes](Tape<Real>& t, const Tensor<Real>& g) {
        Tensor<Real>* gl = t.GradSlot(il);
        const Real scale = g[0] / static_cast<Real>(batch);
        for (std::int64_t b = 0; b < batch; ++b) {
          for (std::int64_t c = 0; c < classes; ++c) {
            const Real onehot = c == (*lab)[b] ? Real(1) : Real(0);
            (*gl)[b * classes + c] += scale * ((*softmax)[b * classes + c] - onehot);
          }
        }
      });
}

#define DS2TA_INSTANTIATE(Real)                                               \
  template class Tape<Real>;                                                  \
  template void GemmAccumulate<Real>(const Real*, const Real*, Real*,         \
                                     std::int64_t, std::int64_t, std::int64_t); \
  template Var<Real> MatMul<Real>(Var<Real>, Var<Real>);                      \
  template Var<Real> Add<Real>(Var<Real>, Var<Real>);                         \
  template Var<Real> Sub<Real>(Var<Real>, Var<Real>);                         \
  template Var<Real> Mul<Real>(Var<Real>, Var<Real>);                         \
  template Var<Real> Scale<Real>(Var<Real>, Real);                            \
  template Var<Real> AddBias<Real>(Var<Real>, Var<Real>);                     \
  template Var<Real> Reshape<Real>(Var<Real>, Shape);                         \
  template Var<Real> Sum<Real>(Var<Real>, std::vector<int>);                  \
  template Var<Real> Mean<Real>(Var<Real>, std::vector<int>);                 \
  template Var<Real> SumAll<Real>(Var<Real>);                                 \
  template Var<Real> CrossEntropyLogits<Real>(Var<Real>, std::span<const int>);

DS2TA_INSTANTIATE(float)
DS2TA_INSTANTIATE(double)

#undef DS2TA_INSTANTIATE

}  // namespace ds2ta
