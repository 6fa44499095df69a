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

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape owns every value produced while it is recording. Operations append
// a node holding the op name, input handles, and a backward closure; the
// closure reads saved values back from the tape rather than holding
// references, so the tape can grow freely. Backward() walks nodes in strict
// reverse insertion order, which is a valid reverse topological order
// because a node can only consume handles that already exist.
//
// Everything is templated on the scalar type: double for gradient checks,
// float for training. Definitions live in autodiff.cc with explicit
// instantiations for both.

#ifndef DS2TA_AUTODIFF_H_
#define DS2TA_AUTODIFF_H_

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ds2ta/tensor.h"

namespace ds2ta {

template <typename Real>
class Tape;

// Handle to a value recorded on a tape.
template <typename Real>
class Var {
 public:
  Var() = default;
  Var(Tape<Real>* tape, int id) : tape_(tape), id_(id) {}

  Tape<Real>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor<Real>& value() const { return tape_->value(id_); }
  const Tensor<Real>& grad() const { return tape_->grad(id_); }
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<Real>* tape_ = nullptr;
  int id_ = -1;
};

template <typename Real>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<Real>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> Leaf(Tensor<Real> value, bool requires_grad = false);

  // Appends an op output. The output requires a gradient iff any input does;
  // when none does, `fn` is dropped and nothing is saved for backward.
  Var<Real> Record(const char* op, Tensor<Real> value, std::vector<int> inputs,
                   BackwardFn fn);

  const Tensor<Real>& value(int id) const { return slots_.at(id).value; }
  bool requires_grad(int id) const { return slots_.at(id).requires_grad; }
  bool has_grad(int id) const { return slots_.at(id).grad.has_value(); }
  const Tensor<Real>& grad(int id) const;

  // Gradient accumulator for `id`, zero-initialized on first use. Returns
  // nullptr when `id` does not require a gradient so ops can skip work.
  Tensor<Real>* GradSlot(int id);

  // Reverse sweep from a scalar root seeded with 1.
  void Backward(Var<Real> root);
  // Reverse sweep with an explicit seed of the root's shape.
  void Backward(Var<Real> root, const Tensor<Real>& seed);

  std::size_t num_values() const { return slots_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }
  const std::string& node_op(std::size_t i) const { return nodes_.at(i).op; }
  int node_output(std::size_t i) const { return nodes_.at(i).output; }

 private:
  struct Slot {
    Tensor<Real> value;
    std::optional<Tensor<Real>> grad;
    bool requires_grad = false;
  };
  struct Node {
    std::string op;
    std::vector<int> inputs;
    int output;
    BackwardFn fn;
  };

  std::deque<Slot> slots_;
  std::vector<Node> nodes_;
};

// ---- primitive ops ---------------------------------------------------------

// Batched contraction a[..., M, K] x b[..., K, P]. Leading extents are
// right-aligned and must be equal or 1. Zero entries of `a` are skipped, so
// spike-valued left operands cost one accumulate per nonzero.
template <typename Real>
Var<Real> MatMul(Var<Real> a, Var<Real> b);

template <typename Real>
Var<Real> Add(Var<Real> a, Var<Real> b);
template <typename Real>
Var<Real> Sub(Var<Real> a, Var<Real> b);
template <typename Real>
Var<Real> Mul(Var<Real> a, Var<Real> b);
template <typename Real>
Var<Real> Scale(Var<Real> a, Real c);

// x[..., P] + bias[P].
template <typename Real>
Var<Real> AddBias(Var<Real> x, Var<Real> bias);

template <typename Real>
Var<Real> Reshape(Var<Real> a, Shape shape);

// Reductions drop the reduced axes. Axes must be valid and distinct.
template <typename Real>
Var<Real> Sum(Var<Real> a, std::vector<int> axes);
template <typename Real>
Var<Real> Mean(Var<Real> a, std::vector<int> axes);
template <typename Real>
Var<Real> SumAll(Var<Real> a);

// Mean over the batch of -log softmax(logits)[label]. logits is [B, C].
template <typename Real>
Var<Real> CrossEntropyLogits(Var<Real> logits, std::span<const int> labels);

// ---- kernels shared with non-tape code ------------------------------------

// c[M, P] += a[M, K] * b[K, P], skipping zero a entries.
template <typename Real>
void GemmAccumulate(const Real* a, const Real* b, Real* c, std::int64_t m,
                    std::int64_t k, std::int64_t p);

}  // namespace ds2ta

#endif  // DS2TA_AUTODIFF_H_
