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

#include <filesystem>

#include "doctest.h"
#include "ds2ta/data.h"
#include "ds2ta/error.h"
#include "ds2ta/rng.h"

namespace ds2ta {
namespace {

int PatchSum(const EventDataset& ds, std::size_t i, int t, int loc, int patch) {
  const int per_row = ds.width / patch;
  const int y0 = (loc / per_row) * patch, x0 = (loc % per_row) * patch;
  const auto s = ds.sample(i);
  int sum = 0;
  for (int y = 0; y < patch; ++y) {
    for (int x = 0; x < patch; ++x) {
      sum += s[(static_cast<std::size_t>(t) * ds.height + y0 + y) * ds.width + x0 + x];
    }
  }
  return sum;
}

TEST_CASE("noise-free temporal order samples hold exactly two flashes") {
  TemporalOrderOptions o;
  o.n = 50;
  o.noise_rate = 0;
  o.seed = 8;
  const EventDataset ds = GenerateTemporalOrder(o);
  CHECK(ds.classes == 2);
  int pa = 0, pb = 0;
  for (auto v : TemporalOrderPatternA()) pa += v;
  for (auto v : TemporalOrderPatternB()) pb += v;
  CHECK(TemporalOrderPatternA() != TemporalOrderPatternB());
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const auto ev = TemporalOrderPlacement(o, i);
    CHECK(ev.loc_a != ev.loc_b);
    CHECK(ev.t_a != ev.t_b);
    CHECK(std::abs(ev.t_a - ev.t_b) <= o.steps / 2);
    CHECK(ds.labels[i] == (ev.t_a < ev.t_b ? 0 : 1));
    int total = 0;
    for (auto v : ds.sample(i)) total += v;
    CHECK(total == pa + pb);
    CHECK(PatchSum(ds, i, ev.t_a, ev.loc_a, 4) == pa);
    CHECK(PatchSum(ds, i, ev.t_b, ev.loc_b, 4) == pb);
  }
}

TEST_CASE("label balance over 10k samples") {
  TemporalOrderOptions o;
  o.n = 10000;
  o.seed = 1;
  o.noise_rate = 0;
  const EventDataset ds = GenerateTemporalOrder(o);
  double ones = 0;
  for (int l : ds.labels) ones += l;
  CHECK(ones / ds.count() == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("generation is deterministic per seed") {
  TemporalOrderOptions o;
  o.n = 20;
  o.seed = 3;
  CHECK(EncodeEvtb(GenerateTemporalOrder(o)) == EncodeEvtb(GenerateTemporalOrder(o)));
  auto o2 = o;
  o2.seed = 4;
  CHECK(EncodeEvtb(GenerateTemporalOrder(o)) != EncodeEvtb(GenerateTemporalOrder(o2)));
}

TEST_CASE("impossible placements are generation errors") {
  TemporalOrderOptions o;
  o.steps = 3;
  CHECK_THROWS_AS(GenerateTemporalOrder(o), GenerationError);
  o = {};
  o.grid = 4;
  CHECK_THROWS_AS(GenerateTemporalOrder(o), GenerationError);
  o = {};
  o.grid = 15;
  CHECK_THROWS_AS(GenerateTemporalOrder(o), GenerationError);
}

TEST_CASE("static patterns") {
  StaticPatternOptions o;
  o.n = 400;
  o.noise_rate = 0;
  o.classes = 4;
  const EventDataset ds = GenerateStaticPatterns(o);
  std::vector<int> counts(4);
  for (std::size_t i = 0; i < ds.count(); ++i) {
    ++counts[ds.labels[i]];
    // Every frame equals the first.
    const auto s = ds.sample(i);
    const std::size_t frame = 16 * 16;
    for (int t = 1; t < o.steps; ++t) {
      CHECK(std::equal(s.begin(), s.begin() + frame, s.begin() + t * frame));
    }
  }
  for (int c : counts) CHECK(c == doctest::Approx(100).epsilon(0.3));
  o.steps = 1;
  CHECK(GenerateStaticPatterns(o).steps == 1);
  o.classes = kStaticPatternBankSize + 1;
  CHECK_THROWS_AS(GenerateStaticPatterns(o), GenerationError);
  for (int a = 0; a < kStaticPatternBankSize; ++a) {
    for (int b = a + 1; b < kStaticPatternBankSize; ++b) CHECK(StaticPattern(a) != StaticPattern(b));
  }
}

TEST_CASE("bit packing is an exact inverse pair") {
  CounterRng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> bits(1 + rng.Below(100));
    for (auto& b : bits) b = rng.Bernoulli(0.5);
    CHECK(UnpackBits(PackBits(bits), bits.size()) == bits);
  }
  const std::vector<std::uint8_t> msb{1, 0, 0, 0, 0, 0, 0, 1, 1};
  CHECK(PackBits(msb) == std::vector<std::uint8_t>{0x81, 0x80});
}

TEST_CASE("evtb round trip, size, and rejections") {
  TemporalOrderOptions o;
  o.n = 9;
  const EventDataset ds = GenerateTemporalOrder(o);
  const auto bytes = EncodeEvtb(ds);
  CHECK(bytes.size() == 22 + 9 * (2 + (8 * 16 * 16) / 8));
  CHECK(bytes.size() == EvtbFileSize(ds));
  const EventDataset back = DecodeEvtb(bytes);
  CHECK(back.frames == ds.frames);
  CHECK(back.labels == ds.labels);

  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(DecodeEvtb(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(DecodeEvtb(bad), UnsupportedVersionError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(DecodeEvtb(bad), FormatError);
  bad = bytes;
  bad[kEvtbHeaderBytes] = 7;  // label 7 with 2 classes
  try {
    DecodeEvtb(bad);
    FAIL("label accepted");
  } catch (const FormatError& e) {
    CHECK(e.offset() == kEvtbHeaderBytes);
  }

  const auto path = (std::filesystem::temp_directory_path() / "ds2ta_data_test.evtb").string();
  WriteEvtb(path, ds);
  CHECK(ReadEvtb(path).frames == ds.frames);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ReadEvtb(path), PathError);
}

TEST_CASE("batch layout is [T, B, C, H, W]") {
  TemporalOrderOptions o;
  o.n = 3;
  const EventDataset ds = GenerateTemporalOrder(o);
  const std::size_t idx[] = {2, 0};
  const auto b = ds.Batch<float>(idx);
  CHECK(b.shape() == Shape{8, 2, 1, 16, 16});
  CHECK(b.at({5, 0, 0, 3, 4}) == ds.sample(2)[(5 * 16 + 3) * 16 + 4]);
  CHECK(b.at({7, 1, 0, 15, 0}) == ds.sample(0)[(7 * 16 + 15) * 16]);
}

}  // namespace
}  // namespace ds2ta
