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
#include <limits>

#include "doctest.h"
#include "ds2ta/error.h"
#include "ds2ta/neuron.h"
#include "ds2ta/rng.h"

namespace ds2ta {
namespace {

LifState<double> Run(std::vector<double> current) {
  const auto n = static_cast<std::int64_t>(current.size());
  return SimulateLif(Tensor<double>({n, 1}, std::move(current)), LifParams{});
}

TEST_CASE("scalar recurrence without firing") {
  const auto st = Run({0.6, 0.6});
  CHECK(st.v[0] == doctest::Approx(0.6));
  CHECK(st.v[1] == doctest::Approx(0.9));
  CHECK(st.s[0] == 0);
  CHECK(st.s[1] == 0);
}

TEST_CASE("hard reset clears carryover") {
  const auto st = Run({1.2, 0.5});
  CHECK(st.s[0] == 1);
  CHECK(st.v[1] == 0.5);
  CHECK(st.s[1] == 0);
}

TEST_CASE("firing at exact threshold") {
  CHECK(Run({1.0}).s[0] == 1);
}

TEST_CASE("zero input stays silent") {
  const auto st = Run({0, 0, 0});
  for (int t = 0; t < 3; ++t) {
    CHECK(st.v[t] == 0);
    CHECK(st.s[t] == 0);
  }
}

TEST_CASE("geometric leak") {
  const auto st = Run({0.8, 0, 0, 0});
  for (int t = 1; t < 4; ++t) CHECK(st.v[t] == doctest::Approx(st.v[t - 1] * 0.5));
}

TEST_CASE("binary output, reset, and monotonicity on random streams") {
  CounterRng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> cur(6);
    for (auto& c : cur) c = 1.5 * rng.Normal();
    const auto st = Run(cur);
    for (int t = 0; t < 6; ++t) {
      CHECK((st.s[t] == 0 || st.s[t] == 1));
      CHECK((st.s[t] == 1) == (st.v[t] >= 1.0));
      if (t > 0 && st.s[t - 1] == 1) CHECK(st.v[t] == cur[t]);
    }
    const int t = static_cast<int>(rng.Below(6));
    auto bumped = cur;
    bumped[t] += 0.3;
    CHECK(Run(bumped).s[t] >= st.s[t]);
  }
}

TEST_CASE("non-finite input names the timestep") {
  try {
    Run({0.1, std::numeric_limits<double>::quiet_NaN()});
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("timestep 1") != std::string::npos);
  }
}

TEST_CASE("single-step surrogate gradient") {
  Tape<double> tape;
  auto i = tape.Leaf(Tensor<double>({1, 1}, {0.4}), true);
  auto s = LifForward(i, LifParams{});
  tape.Backward(SumAll(s));
  const double z = std::numbers::pi * 2.0 * (0.4 - 1.0) / 2.0;
  CHECK(tape.grad(i.id())[0] == doctest::Approx(1.0 / (1.0 + z * z)).epsilon(1e-12));
  CHECK(LifSurrogateGrad(0.4, LifParams{}) == doctest::Approx(1.0 / (1.0 + z * z)));
}

TEST_CASE("zero upstream gives zero input gradient") {
  Tape<double> tape;
  auto i = tape.Leaf(Tensor<double>({3, 2}, {0.5, 1.5, -0.2, 2.0, 0.9, 0.1}), true);
  auto s = LifForward(i, LifParams{});
  tape.Backward(s, Tensor<double>({3, 2}));
  for (const double g : tape.grad(i.id()).data()) CHECK(g == 0);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((LifParams{1.0, 1.0, 2.0}.Validate()), ConfigError);
  CHECK_THROWS_AS((LifParams{2.0, 0.0, 2.0}.Validate()), ConfigError);
  CHECK_THROWS_AS((LifParams{2.0, 1.0, 0.0}.Validate()), ConfigError);
}

}  // namespace
}  // namespace ds2ta
