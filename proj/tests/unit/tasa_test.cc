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
#include <cstring>

#include "doctest.h"
#include "ds2ta/error.h"
#include "ds2ta/rng.h"
#include "ds2ta/tasa.h"

namespace ds2ta {
namespace {

TEST_CASE("decay factors") {
  CHECK(DecayFactor(2, 0) == 1.0);
  CHECK(DecayFactor(2, 1) == 0.25);
  CHECK(DecayFactor(0, 3) == 1.0);
  CHECK(DecayFactor(1.5, 2) == doctest::Approx(0.125));
}

TEST_CASE("filter of a single neuron with tau 2") {
  Tape<double> tape;
  auto s = tape.Leaf(Tensor<double>({3, 1}, {1, 0, 1}));
  const auto f = TemporalFilter(s, 3, 2).value();
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 0.25);
  CHECK(f[2] == 1.0625);
}

TEST_CASE("window of one is the identity") {
  CounterRng rng(3);
  Tensor<double> x({4, 3});
  for (auto& v : x.data()) v = rng.Normal();
  Tape<double> tape;
  CHECK(TemporalFilter(tape.Leaf(x), 1, 5).value() == x);
}

TEST_CASE("window longer than the sequence truncates") {
  Tape<double> tape;
  auto s = tape.Leaf(Tensor<double>({2, 1}, {1, 1}));
  const auto f = TemporalFilter(s, 6, 1).value();
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 1.5);
}

TEST_CASE("straight-through tau rounding") {
  Tape<double> tape;
  auto tau = tape.Leaf(Tensor<double>::Scalar(2.5), true);
  auto r = TauRoundSte(tau, 8);
  CHECK(r.value().item() == 3.0);
  tape.Backward(Scale(r, 2.0));
  CHECK(tape.grad(tau.id()).item() == 2.0);

  Tape<double> t2;
  auto big = t2.Leaf(Tensor<double>::Scalar(11.0), true);
  auto rb = TauRoundSte(big, 8);
  CHECK(rb.value().item() == 8.0);
  t2.Backward(rb);
  CHECK(t2.grad(big.id()).item() == 0.0);
}

TEST_CASE("fixed-point shift examples") {
  const std::int64_t acc[] = {3, 1024, 7};
  const auto out = ShiftDecayApply(acc, 2, 1);
  CHECK(out[0] == 0.75);
  CHECK(out[1] == 256.0);
  CHECK(out[2] == 1.75);
  CHECK_THROWS_AS(ShiftDecayApply(acc, 17, 2), PrecisionError);
}

TEST_CASE("fixed-point filter equals the float filter on spike counts") {
  CounterRng rng(12);
  Tensor<double> counts({5, 2, 3});
  for (auto& v : counts.data()) v = static_cast<double>(rng.Below(4));
  for (int tau = 0; tau <= 4; ++tau) {
    Tape<double> tape;
    const auto want = TemporalFilter(tape.Leaf(counts), 3, tau).value();
    const auto got = TemporalFilterShift(counts, 3, tau);
    CHECK(std::memcmp(want.raw(), got.raw(), sizeof(double) * want.size()) == 0);
  }
}

TEST_CASE("attention scores count coincident spikes per head") {
  Tape<double> tape;
  // T=1, B=1, N=2, D=4, two heads of width 2.
  auto q = tape.Leaf(Tensor<double>({1, 1, 2, 4}, {1, 1, 0, 1, 0, 1, 1, 1}));
  auto k = tape.Leaf(Tensor<double>({1, 1, 2, 4}, {1, 0, 1, 1, 1, 1, 0, 0}));
  const auto s = AttentionScores(q, k, 2).value();
  CHECK(s.shape() == Shape{1, 1, 2, 2, 2});
  // head 0 uses features 0..1
  CHECK(s.at({0, 0, 0, 0, 0}) == 1);
  CHECK(s.at({0, 0, 0, 0, 1}) == 2);
  CHECK(s.at({0, 0, 0, 1, 1}) == 1);
  // head 1 uses features 2..3
  CHECK(s.at({0, 0, 1, 0, 0}) == 1);
  CHECK(s.at({0, 0, 1, 1, 0}) == 2);
  CHECK(s.at({0, 0, 1, 1, 1}) == 0);
  CHECK_THROWS_AS(AttentionScores(q, k, 3), ConfigError);
}

TEST_CASE("attend values merges heads") {
  Tape<double> tape;
  auto a = tape.Leaf(Tensor<double>({1, 1, 2, 2, 2}, {1, 0, 0, 1, 0, 2, 0, 0}));
  auto v = tape.Leaf(Tensor<double>({1, 1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}));
  const auto o = AttendValues(a, v, 2).value();
  // head 0 is the identity on features 0..1; head 1 maps token 0 to 2 * token 1.
  CHECK(o.storage() == std::vector<double>{1, 2, 14, 16, 5, 6, 0, 0});
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((TasaConfig{0, 8}.Validate()), ConfigError);
  CHECK_THROWS_AS((TasaConfig{3, -1}.Validate()), ConfigError);
}

}  // namespace
}  // namespace ds2ta
