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


// Command-line entry point: dataset generation, training, evaluation,
// energy analysis, attention export, and the self-test suites.
//
// Exit codes: 0 success, 1 usage, 2 data or format error, 3 numeric failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ds2ta/allocator.h"
#include "ds2ta/analyze.h"
#include "ds2ta/binary_io.h"
#include "ds2ta/checkpoint.h"
#include "ds2ta/config_text.h"
#include "ds2ta/data.h"
#include "ds2ta/error.h"
#include "ds2ta/model.h"
#include "ds2ta/selftest.h"
#include "ds2ta/train.h"
#include "json.hpp"

namespace {

using namespace ds2ta;
using json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "ds2ta 0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;
  json config = json::object();
  json seeds = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  // Written atomically next to `artifact`.
  void WriteFor(const std::string& artifact) const {
    json j;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    j["tool_version"] = kToolVersion;
    j["config"] = config;
    j["seeds"] = seeds;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    WriteFileAtomic(artifact + ".manifest.json", j.dump(2) + "\n");
  }
};

json KeyValuesToJson(const KeyValueText& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv.entries()) j[k] = v;
  return j;
}

// Flag beats config file beats DS2TA_SEED beats the default of 0.
std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag, const KeyValueText* file,
                          const char* key) {
  if (flag) return *flag;
  if (file && file->Has(key)) return std::stoull(file->Get(key));
  if (const char* env = std::getenv("DS2TA_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("DS2TA_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

struct GenArgs {
  std::string task = "temporal-order";
  std::string out;
  int n = 1000;
  int steps = 8;
  int grid = 16;
  int patch = 4;
  int classes = 4;
  int gap_max = 0;
  double noise = 0.02;
  std::optional<std::uint64_t> seed;
};

int RunGenData(const GenArgs& a, Manifest& m) {
  const std::uint64_t seed = ResolveSeed(a.seed, nullptr, "seed");
  EventDataset ds;
  if (a.task == "temporal-order") {
    TemporalOrderOptions o;
    o.n = a.n;
    o.steps = a.steps;
    o.grid = a.grid;
    o.patch = a.patch;
    o.noise_rate = a.noise;
    o.seed = seed;
    o.gap_max = a.gap_max;
    ds = GenerateTemporalOrder(o);
  } else {
    StaticPatternOptions o;
    o.n = a.n;
    o.steps = a.steps;
    o.grid = a.grid;
    o.patch = a.patch;
    o.classes = a.classes;
    o.noise_rate = a.noise;
    o.seed = seed;
    ds = GenerateStaticPatterns(o);
  }
  WriteEvtb(a.out, ds);
  m.config = {{"task", a.task}, {"n", a.n},         {"T", a.steps},
              {"grid", a.grid}, {"patch", a.patch}, {"noise", a.noise},
              {"classes", ds.classes}, {"gap_max", a.gap_max}};
  m.seeds["data"] = seed;
  m.outputs = {a.out};
  m.WriteFor(a.out);
  std::cout << "wrote " << ds.count() << " samples (" << ds.classes << " classes) to " << a.out
            << "\n";
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string eval_data;
  std::string out;
  std::string metrics;
  std::string mode = "ds2ta";
  std::optional<int> t_aw;
  bool nsad_identity = false;
  std::optional<int> epochs;
  std::optional<int> batch;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

int RunTrain(const TrainArgs& a, Manifest& m) {
  std::optional<KeyValueText> file;
  if (!a.config.empty()) {
    file = KeyValueText::ReadFile(a.config);
    m.inputs.push_back(a.config);
  }
  const EventDataset train = ReadEvtb(a.data);
  m.inputs.push_back(a.data);
  std::optional<EventDataset> eval;
  if (!a.eval_data.empty()) {
    eval = ReadEvtb(a.eval_data);
    m.inputs.push_back(a.eval_data);
  }

  ModelConfig mc;
  mc.steps = train.steps;
  mc.channels = train.channels;
  mc.height = train.height;
  mc.width = train.width;
  mc.classes = train.classes;
  mc.tokens = (mc.height / mc.patch) * (mc.width / mc.patch);
  TrainConfig tc;
  if (file) {
    mc.ApplyText(*file);
    tc.ApplyText(*file);
  }
  if (a.mode == "ds2ta") {
    mc.attention_mode = AttentionMode::kTasa;
    mc.nsad_enabled = true;
  } else if (a.mode == "spatial-only") {
    mc.attention_mode = AttentionMode::kSpatialOnly;
    mc.nsad_enabled = false;
  } else {
    mc.attention_mode = AttentionMode::kSpatialOnly;
    mc.nsad_enabled = true;
  }
  if (a.t_aw) mc.t_aw = *a.t_aw;
  if (a.nsad_identity) mc.nsad_identity = true;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch) tc.batch_size = *a.batch;
  if (a.lr) tc.lr = *a.lr;
  const std::uint64_t seed = ResolveSeed(a.seed, file ? &*file : nullptr, "seed");
  mc.seed = seed;
  tc.seed = file && file->Has("train_seed") && !a.seed ? tc.seed : seed;
  tc.threads = a.threads;
  if (static_cast<int>(mc.tau_init.size()) != mc.blocks && !mc.tau_init.empty()) {
    mc.tau_init.assign(mc.blocks, mc.tau_init[0]);
  }
  mc.Validate();
  tc.Validate();
  if (mc.steps != train.steps || mc.height != train.height || mc.width != train.width ||
      mc.channels != train.channels) {
    throw InputError("config frame geometry does not match the training data");
  }

  Model<float> model(mc);
  Trainer trainer(model, tc);
  const std::string metrics = a.metrics.empty() ? a.out + ".metrics.jsonl" : a.metrics;
  std::ofstream log(metrics, std::ios::trunc);
  if (!log) throw PathError("cannot write " + metrics);
  trainer.Fit(train, eval ? &*eval : nullptr, [&](const EpochMetrics& em) {
    const std::string line = em.ToJson();
    log << line << "\n";
    log.flush();
    std::cout << line << "\n";
  });
  log.close();

  CheckpointData ck = ModelCheckpoint(model);
  trainer.SaveState(ck);
  CheckpointRecord rng;
  rng.name = "rng.state";
  rng.shape = {2};
  rng.data = std::vector<std::uint64_t>{tc.seed, static_cast<std::uint64_t>(trainer.step_count())};
  ck.Add(std::move(rng));
  WriteCheckpoint(a.out, ck);

  KeyValueText resolved = mc.ToText();
  resolved.Merge(tc.ToText());
  m.config = KeyValuesToJson(resolved);
  m.config["mode"] = a.mode;
  m.config["threads"] = a.threads;
  m.seeds["model"] = mc.seed;
  m.seeds["train"] = tc.seed;
  m.outputs = {a.out, metrics};
  m.WriteFor(a.out);
  m.WriteFor(metrics);
  return kOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string report;
  std::string out;
  std::size_t sample = 0;
  double e_ac = kDefaultEacPicojoules;
  int threads = 1;
};

int RunEval(const EvalArgs& a) {
  const Model<float> model = LoadModel<float>(ReadCheckpoint(a.ckpt));
  const EventDataset data = ReadEvtb(a.data);
  const EvalResult r = Evaluate(model, data, 64, a.threads);
  json j;
  j["samples"] = r.count;
  j["accuracy"] = r.accuracy;
  j["per_class_accuracy"] = r.per_class_accuracy;
  j["raw_sparsity"] = r.raw_sparsity;
  j["denoised_sparsity"] = r.denoised_sparsity;
  std::cout << j.dump() << "\n";
  return kOk;
}

int RunAnalyze(const EvalArgs& a, Manifest& m) {
  const Model<float> model = LoadModel<float>(ReadCheckpoint(a.ckpt));
  const EventDataset data = ReadEvtb(a.data);
  const EnergyReport rep = AnalyzeModel(model, data, a.e_ac, a.threads);
  const std::string text = rep.ToText();
  WriteFileAtomic(a.report, text);
  std::cout << text;
  m.inputs = {a.ckpt, a.data};
  m.outputs = {a.report};
  m.config = {{"e_ac_pj", a.e_ac}};
  m.WriteFor(a.report);
  return kOk;
}

int RunExport(const EvalArgs& a, Manifest& m) {
  const Model<float> model = LoadModel<float>(ReadCheckpoint(a.ckpt));
  const EventDataset data = ReadEvtb(a.data);
  const auto paths = ExportAttention(model, data, a.sample, a.out);
  m.inputs = {a.ckpt, a.data};
  m.outputs = paths;
  m.config = {{"sample", a.sample}};
  m.WriteFor(a.out);
  std::cout << "wrote " << paths.size() << " files with prefix " << a.out << "\n";
  return kOk;
}

int RunSelftest() {
  bool ok = true;
  for (const auto& r : RunSelfTest()) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " ["
              << r.seconds << " s]\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kNumeric;
}

int Main(int argc, char** argv) {
  CLI::App app{"Denoising spiking transformer desk: data, training, analysis"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Manifest m;
  for (int i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic EVTB dataset");
  gen_cmd->add_option("--task", gen.task, "Generator")
      ->check(CLI::IsMember({"temporal-order", "static"}));
  gen_cmd->add_option("--out", gen.out, "Output .evtb path")->required();
  gen_cmd->add_option("--n", gen.n, "Sample count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--T", gen.steps, "Timesteps")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--grid", gen.grid, "Frame side in pixels")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--patch", gen.patch, "Patch side in pixels")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--classes", gen.classes, "Classes (static task)");
  gen_cmd->add_option("--gap-max", gen.gap_max, "Largest flash gap, 0 for T/2 (temporal-order)");
  gen_cmd->add_option("--noise", gen.noise, "Background spike rate per pixel per step")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", gen.seed, "Seed (default: DS2TA_SEED, else 0)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on an EVTB dataset");
  train_cmd->add_option("--config", tr.config, "key = value config file");
  train_cmd->add_option("--data", tr.data, "Training .evtb")->required();
  train_cmd->add_option("--eval-data", tr.eval_data, "Evaluation .evtb");
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--metrics", tr.metrics, "Metrics log (default: <out>.metrics.jsonl)");
  train_cmd->add_option("--mode", tr.mode, "Attention variant")
      ->check(CLI::IsMember({"ds2ta", "spatial-only", "nsad-only"}));
  train_cmd->add_option("--t-aw", tr.t_aw, "Temporal attention window (default 3)");
  train_cmd->add_flag("--nsad-identity", tr.nsad_identity, "Freeze the denoiser to identity");
  train_cmd->add_option("--epochs", tr.epochs, "Epochs (default 30)");
  train_cmd->add_option("--batch", tr.batch, "Batch size (default 32)");
  train_cmd->add_option("--lr", tr.lr, "Initial learning rate (default 0.001)");
  train_cmd->add_option("--seed", tr.seed, "Seed (default: DS2TA_SEED, else 0)");
  train_cmd->add_option("--threads", tr.threads, "Data-parallel workers")
      ->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy and map sparsity of a checkpoint");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset .evtb")->required();
  eval_cmd->add_option("--threads", ev.threads, "Workers")->check(CLI::PositiveNumber);

  EvalArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Per-block sparsity and energy report");
  an_cmd->add_option("--ckpt", an.ckpt, "Checkpoint")->required();
  an_cmd->add_option("--data", an.data, "Dataset .evtb")->required();
  an_cmd->add_option("--report", an.report, "Report path")->required();
  an_cmd->add_option("--e-ac", an.e_ac, "Energy per accumulate in pJ")
      ->check(CLI::NonNegativeNumber);
  an_cmd->add_option("--threads", an.threads, "Workers")->check(CLI::PositiveNumber);

  EvalArgs ex;
  auto* ex_cmd = app.add_subcommand("export-attn", "Export raw and denoised attention maps");
  ex_cmd->add_option("--ckpt", ex.ckpt, "Checkpoint")->required();
  ex_cmd->add_option("--data", ex.data, "Dataset .evtb")->required();
  ex_cmd->add_option("--sample", ex.sample, "Sample index");
  ex_cmd->add_option("--out", ex.out, "Output path prefix")->required();

  auto* st_cmd = app.add_subcommand("selftest", "Run the gradient and oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kUsage;
  }

  try {
    if (*gen_cmd) {
      m.subcommand = "gen-data";
      return RunGenData(gen, m);
    }
    if (*train_cmd) {
      m.subcommand = "train";
      return RunTrain(tr, m);
    }
    if (*eval_cmd) return RunEval(ev);
    if (*an_cmd) {
      m.subcommand = "analyze";
      return RunAnalyze(an, m);
    }
    if (*ex_cmd) {
      m.subcommand = "export-attn";
      return RunExport(ex, m);
    }
    if (*st_cmd) return RunSelftest();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const PrecisionError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const FormatError& e) {
    std::cerr << "format error at byte " << e.offset() << ": " << e.what() << "\n";
    return kData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  ds2ta::RetainFreedMemory();
  return Main(argc, argv);
}
