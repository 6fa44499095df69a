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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ds2ta/autodiff.h"
#include "ds2ta/error.h"
#include "ds2ta/gradcheck.h"
#include "ds2ta/rng.h"

namespace ds2ta {
namespace {

TEST_CASE("tensor shape helpers") {
  CHECK(NumElements({2, 3, 4}) == 24);
  CHECK(NumElements({}) == 1);
  CHECK(ShapeString({2, 3}) == "[2, 3]");
  CHECK_THROWS_AS(Tensor<float>({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor<float>({1, 1, 1, 1, 1, 1}), DimensionError);
  Tensor<double> t({2, 3});
  t.at({1, 2}) = 5;
  CHECK(t[5] == 5);
  CHECK(t.Reshaped({3, 2}).at({2, 1}) == 5);
  CHECK_THROWS_AS(t.Reshaped({4, 2}), DimensionError);
}

TEST_CASE("matmul values and broadcasting") {
  Tape<double> tape;
  auto a = tape.Leaf(Tensor<double>({2, 2}, {1, 2, 3, 4}));
  auto b = tape.Leaf(Tensor<double>({2, 2}, {5, 6, 7, 8}));
  auto c = MatMul(a, b);
  CHECK(c.value().storage() == std::vector<double>{19, 22, 43, 50});

  auto batched = tape.Leaf(Tensor<double>({2, 1, 2}, {1, 0, 0, 1}));
  auto d = MatMul(batched, b);
  CHECK(d.shape() == Shape{2, 1, 2});
  CHECK(d.value().storage() == std::vector<double>{5, 6, 7, 8});
  CHECK_THROWS_AS(MatMul(a, tape.Leaf(Tensor<double>({3, 2}))), DimensionError);
}

TEST_CASE("elementwise ops broadcast scalars only") {
  Tape<double> tape;
  auto a = tape.Leaf(Tensor<double>({3}, {1, 2, 3}));
  auto s = tape.Leaf(Tensor<double>::Scalar(2));
  CHECK(Mul(a, s).value().storage() == std::vector<double>{2, 4, 6});
  CHECK(Sub(s, a).value().storage() == std::vector<double>{1, 0, -1});
  CHECK_THROWS_AS(Add(a, tape.Leaf(Tensor<double>({2}))), DimensionError);
}

TEST_CASE("reductions") {
  Tape<double> tape;
  auto a = tape.Leaf(Tensor<double>({2, 3}, {1, 2, 3, 4, 5, 6}));
  CHECK(Sum(a, {0}).value().storage() == std::vector<double>{5, 7, 9});
  CHECK(Mean(a, {1}).value().storage() == std::vector<double>{2, 5});
  CHECK(SumAll(a).value().item() == 21);
  CHECK_THROWS_AS(Sum(a, {2}), AxisError);
  CHECK_THROWS_AS(Sum(a, {0, 0}), AxisError);
}

TEST_CASE("cross entropy value, gradient, and label checks") {
  Tape<double> tape;
  auto logits = tape.Leaf(Tensor<double>({1, 2}, {0, 0}), true);
  const int labels[] = {1};
  auto loss = CrossEntropyLogits(logits, labels);
  CHECK(loss.value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  tape.Backward(loss);
  CHECK(tape.grad(logits.id())[0] == doctest::Approx(0.5));
  CHECK(tape.grad(logits.id())[1] == doctest::Approx(-0.5));
  const int bad[] = {2};
  CHECK_THROWS_AS(CrossEntropyLogits(logits, bad), LabelError);
}

TEST_CASE("backward accumulates over shared uses") {
  Tape<double> tape;
  auto x = tape.Leaf(Tensor<double>::Scalar(3), true);
  auto y = Add(Mul(x, x), x);  // x^2 + x
  tape.Backward(y);
  CHECK(tape.grad(x.id()).item() == 7);
}

TEST_CASE("leaves without gradients stay untouched") {
  Tape<double> tape;
  auto x = tape.Leaf(Tensor<double>::Scalar(3));
  auto w = tape.Leaf(Tensor<double>::Scalar(2), true);
  tape.Backward(Mul(x, w));
  CHECK_FALSE(tape.has_grad(x.id()));
  CHECK(tape.grad(w.id()).item() == 3);
}

TEST_CASE("gradient checker flags a wrong derivative") {
  // Scale's gradient is exact; a program that hides a constant factor
  // from the tape must be caught.
  TapeProgram wrong = [](Tape<double>& tape, std::span<const Var<double>> in) {
    Tensor<double> doubled = in[0].value();
    for (auto& v : doubled.data()) v *= 2;
    auto detached = tape.Leaf(doubled);
    return SumAll(Add(in[0], Mul(detached, detached)));
  };
  const auto rep = CheckGradients(wrong, {Tensor<double>({2}, {0.5, -1.0})});
  CHECK_FALSE(rep.passed());
}

TEST_CASE("zero-skipping gemm matches the dense product") {
  CounterRng rng(4);
  const int m = 5, k = 7, p = 3;
  std::vector<double> a(m * k), b(k * p), c(m * p, 0.0);
  for (auto& x : a) x = rng.Bernoulli(0.3) ? 1.0 : 0.0;
  for (auto& x : b) x = rng.Normal();
  GemmAccumulate(a.data(), b.data(), c.data(), m, k, p);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) {
      double want = 0;
      for (int kk = 0; kk < k; ++kk) want += a[i * k + kk] * b[kk * p + j];
      CHECK(c[i * p + j] == doctest::Approx(want).epsilon(1e-15));
    }
  }
}

}  // namespace
}  // namespace ds2ta
