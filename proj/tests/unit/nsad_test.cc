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

#include "doctest.h"
#include "ds2ta/error.h"
#include "ds2ta/nsad.h"
#include "ds2ta/rng.h"

namespace ds2ta {
namespace {

TEST_CASE("rounding is half away from zero") {
  CHECK(RoundNearest(2.5) == 3);
  CHECK(RoundNearest(-2.5) == -3);
  CHECK(RoundNearest(2.4999) == 2);
}

TEST_CASE("threshold is strict") {
  NsadHead h;  // g(s) = s
  h.u = 2.0;
  const auto table = BuildTable(h, 4);
  CHECK(table == NsadTable{0, 0, 0, 3, 4});
}

TEST_CASE("near-identity start with zero threshold") {
  const NsadHead h = InitialNsadHead(8, 0.0);
  CHECK(h.a == 1.0);
  CHECK(h.e == 4.0);
  const auto table = BuildTable(h, 8);
  CHECK(table.size() == 9);
  CHECK(table[0] == 0);
  for (int s = 1; s <= 8; ++s) CHECK(table[s] == s);
}

TEST_CASE("negative outputs clamp to zero") {
  NsadHead h;
  h.a = -1.0;
  const auto table = BuildTable(h, 3);
  for (const auto v : table) CHECK(v == 0);
}

TEST_CASE("identity table and storage size") {
  CHECK(IdentityTable(3) == NsadTable{0, 1, 2, 3});
  CHECK_THROWS_AS(BuildTable(NsadHead{}, 0), ConfigError);
  int total = 0;
  for (int h = 0; h < 12; ++h) total += static_cast<int>(BuildTable(InitialNsadHead(32, 2), 32).size());
  CHECK(total == 396);
}

TEST_CASE("train-mode partials match finite differences") {
  CounterRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    NsadHead h;
    h.a = rng.Uniform() * 2;
    h.b = 0.1 * rng.Normal();
    h.c = 4 * rng.Uniform();
    h.dw = rng.Normal();
    h.e = 4 * rng.Uniform();
    h.u = 3 * rng.Uniform();
    const double s = 8 * rng.Uniform();
    const NsadPartials p = TrainPartials(s, h);
    CHECK(p.f == doctest::Approx(FEval(s, h, NsadMode::kTrain)).epsilon(1e-14));
    const double eps = 1e-6;
    for (int k = 0; k < kNsadParamCount; ++k) {
      auto up = h.ToArray(), dn = h.ToArray();
      up[k] += eps;
      dn[k] -= eps;
      const double num = (FEval(s, NsadHead::FromArray(up), NsadMode::kTrain) -
                          FEval(s, NsadHead::FromArray(dn), NsadMode::kTrain)) / (2 * eps);
      CHECK(p.dparams[k] == doctest::Approx(num).epsilon(1e-6).scale(1.0));
    }
    const double num_s = (FEval(s + eps, h, NsadMode::kTrain) - FEval(s - eps, h, NsadMode::kTrain)) /
                         (2 * eps);
    CHECK(p.ds == doctest::Approx(num_s).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("lookup denoise rejects non-integer and out-of-range scores") {
  const std::vector<NsadTable> tables{IdentityTable(4)};
  Tensor<float> bad({1, 1, 1, 1, 1}, {1.5f});
  CHECK_THROWS_AS(DenoiseLookup(bad, tables, 4), RangeError);
  Tensor<float> big({1, 1, 1, 1, 1}, {5.0f});
  CHECK_THROWS_AS(DenoiseLookup(big, tables, 4), RangeError);
}

TEST_CASE("denoise forward is the table and identity passes gradients through") {
  Tape<double> tape;
  NsadHead h;
  h.u = 1.0;
  Tensor<double> params({1, kNsadParamCount});
  const auto arr = h.ToArray();
  std::copy(arr.begin(), arr.end(), params.storage().begin());
  auto s = tape.Leaf(Tensor<double>({1, 1, 1, 2, 2}, {0, 1, 2, 3}), true);
  auto p = tape.Leaf(params, true);
  const std::vector<NsadTable> tables{BuildTable(h, 3)};
  auto a = Denoise(s, p, tables, 3);
  CHECK(a.value().storage() == std::vector<double>{0, 0, 2, 3});

  Tape<double> t2;
  auto s2 = t2.Leaf(Tensor<double>({1, 1, 1, 2, 2}, {0, 1, 2, 3}), true);
  auto p2 = t2.Leaf(params);
  DenoiseOptions opts;
  opts.straight_through_scores = true;
  auto a2 = Denoise(s2, p2, {IdentityTable(3)}, 3, opts);
  CHECK(a2.value() == s2.value());
  t2.Backward(a2, Tensor<double>({1, 1, 1, 2, 2}, {1, 2, 3, 4}));
  CHECK(t2.grad(s2.id()).storage() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("op count") { CHECK(DenoiseOpCount(16, 4, 8, 16) == 8 * 4 * 256); }

}  // namespace
}  // namespace ds2ta
