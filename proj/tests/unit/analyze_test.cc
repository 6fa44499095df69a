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
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ds2ta/analyze.h"
#include "ds2ta/config_text.h"
#include "ds2ta/data.h"
#include "ds2ta/error.h"
#include "ds2ta/model.h"

namespace ds2ta {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST_CASE("sparsity") {
  const std::vector<float> v{0, 1, 0, 2, 3, 0, 4, 5};
  CHECK(Sparsity<float>(v) == 0.375);
  const std::vector<double> z(5, 0.0);
  CHECK(Sparsity<double>(z) == 1.0);
  CHECK_THROWS_AS(Sparsity<float>(std::span<const float>{}), InputError);
}

TEST_CASE("operation counts and energy") {
  CHECK(CountAttentionOps(16, 16, 4, 8) == 262144);
  CHECK(CountAttentionOps(64, 32, 12, 4) == 2 * 4 * 12 * 64 * 64 * 32);
  CHECK(EnergyNanojoules(1000, 0.5, 0.9) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(EnergyNanojoules(262144, 0.0) == doctest::Approx(235.9296).epsilon(1e-12));
  CHECK(EnergyNanojoules(10, 1.0) == 0.0);
  CHECK_THROWS_AS(EnergyNanojoules(10, 1.5), InputError);
  CHECK(EnergyReduction(0.5, 0.75) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(EnergyReduction(0.7426, 0.9699) == doctest::Approx(0.883).epsilon(2e-3));
}

TEST_CASE("graymap and csv encoding") {
  const std::vector<float> grid{0, 2, 4, 8};
  const std::string pgm = EncodePgm(grid, 2, 4);
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(pgm.size() == header.size() + 4);
  CHECK(pgm.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 0]) == 0);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 1]) == 128);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 2]) == 255);
  CHECK(static_cast<unsigned char>(pgm[header.size() + 3]) == 255);
  CHECK(EncodeCsv(grid, 2) == "0,2\n4,8\n");
}

TEST_CASE("attention export") {
  ModelConfig cfg;
  cfg.nsad_identity = true;
  Model<float> model(cfg);
  TemporalOrderOptions o;
  o.n = 2;
  const EventDataset ds = GenerateTemporalOrder(o);
  const fs::path dir = fs::temp_directory_path() / "ds2ta_export_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto paths = ExportAttention(model, ds, 1, (dir / "m").string());
  CHECK(paths.size() == static_cast<std::size_t>(cfg.blocks * cfg.heads * cfg.steps * 4));
  for (const auto& p : paths) CHECK(fs::exists(p));
  // Identity tables leave the maps unchanged.
  for (int t = 0; t < cfg.steps; ++t) {
    const std::string base = (dir / ("m_b1_h2_t" + std::to_string(t))).string();
    CHECK(Slurp(base + "_S.csv") == Slurp(base + "_A.csv"));
  }
  CHECK_THROWS_AS(ExportAttention(model, ds, 2, (dir / "m").string()), InputError);
  CHECK_THROWS_AS(ExportAttention(model, ds, 0, (dir / "missing" / "m").string()), PathError);

  EventDataset blank = ds;
  std::fill(blank.frames.begin(), blank.frames.end(), 0);
  for (const auto& p : ExportAttention(model, blank, 0, (dir / "z").string())) {
    if (p.ends_with(".csv")) {
      for (char c : Slurp(p)) CHECK((c == '0' || c == ',' || c == '\n'));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("energy report is self-consistent") {
  ModelConfig cfg;
  Model<float> model(cfg);
  TemporalOrderOptions o;
  o.n = 16;
  const EnergyReport rep = AnalyzeModel(model, GenerateTemporalOrder(o));
  REQUIRE(rep.blocks.size() == 2);
  const KeyValueText kv = KeyValueText::Parse(rep.ToText());
  CHECK(kv.GetInt("samples") == 16);
  CHECK(kv.Get("mode") == "tasa+nsad");
  for (int l = 0; l < 2; ++l) {
    const auto& b = rep.blocks[l];
    const std::string p = "block" + std::to_string(l) + ".";
    CHECK(b.ops == 262144);
    CHECK(kv.GetInt(p + "ops") == b.ops);
    CHECK(b.denoised_sparsity >= b.raw_sparsity);
    CHECK(b.energy_nj == doctest::Approx(EnergyNanojoules(b.ops, b.denoised_sparsity)));
    CHECK(b.energy_raw_nj == doctest::Approx(EnergyNanojoules(b.ops, b.raw_sparsity)));
    CHECK(kv.GetDouble(p + "energy_nj") == doctest::Approx(b.energy_nj));
  }
}

}  // namespace
}  // namespace ds2ta
