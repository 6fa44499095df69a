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


#include "ds2ta/selftest.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <sstream>
#include <tuple>

#include "ds2ta/analyze.h"
#include "ds2ta/checkpoint.h"
#include "ds2ta/data.h"
#include "ds2ta/error.h"
#include "ds2ta/gradcheck.h"
#include "ds2ta/model.h"
#include "ds2ta/neuron.h"
#include "ds2ta/nsad.h"
#include "ds2ta/rng.h"
#include "ds2ta/tasa.h"
#include "ds2ta/train.h"

namespace ds2ta {

namespace {

using Clock = std::chrono::steady_clock;

CheckResult Timed(std::string name, const std::function<std::string()>& body) {
  CheckResult r;
  r.name = std::move(name);
  const auto t0 = Clock::now();
  try {
    r.detail = body();
    r.passed = r.detail.rfind("FAIL", 0) != 0;
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("FAIL: exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

Tensor<double> RandomTensor(CounterRng& rng, Shape shape, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& x : t.data()) x = scale * rng.Normal();
  return t;
}

Tensor<double> RandomUniform(CounterRng& rng, Shape shape, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (auto& x : t.data()) x = lo + (hi - lo) * rng.Uniform();
  return t;
}

Tensor<double> RandomSpikes(CounterRng& rng, Shape shape, double p = 0.4) {
  Tensor<double> t(std::move(shape));
  for (auto& x : t.data()) x = rng.Bernoulli(p) ? 1.0 : 0.0;
  return t;
}

// Reduces an op output to a scalar with fixed random weights so every
// output element carries a distinct gradient.
Var<double> Project(Var<double> out, std::uint64_t salt) {
  CounterRng rng = CounterRng(salt).Split("projection");
  return SumAll(Mul(out, out.tape()->Leaf(RandomTensor(rng, out.shape()))));
}

struct GradCase {
  const char* name;
  double tol;
  std::vector<Tensor<double>> inputs;
  TapeProgram fn;
};

}  // namespace

std::vector<CheckResult> RunGradientSuite() {
  CounterRng rng = CounterRng(7).Split("gradient-suite");
  constexpr double kPrimitive = 1e-6;
  constexpr double kComposite = 1e-4;
  std::vector<GradCase> cases;
  auto args = [](std::span<const Var<double>> in, std::size_t i) { return in[i]; };

  cases.push_back({"matmul", kPrimitive,
                   {RandomTensor(rng, {2, 3, 4}), RandomTensor(rng, {4, 5})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(MatMul(args(in, 0), args(in, 1)), 1);
                   }});
  cases.push_back({"matmul_batched", kPrimitive,
                   {RandomTensor(rng, {2, 3, 4}), RandomTensor(rng, {2, 4, 2})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(MatMul(args(in, 0), args(in, 1)), 2);
                   }});
  cases.push_back({"add", kPrimitive, {RandomTensor(rng, {3, 4}), RandomTensor(rng, {3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Add(args(in, 0), args(in, 1)), 3);
                   }});
  cases.push_back({"sub", kPrimitive, {RandomTensor(rng, {3, 4}), RandomTensor(rng, {3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Sub(args(in, 0), args(in, 1)), 4);
                   }});
  cases.push_back({"mul", kPrimitive, {RandomTensor(rng, {3, 4}), RandomTensor(rng, {3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Mul(args(in, 0), args(in, 1)), 5);
                   }});
  cases.push_back({"mul_scalar_broadcast", kPrimitive,
                   {RandomTensor(rng, {3, 4}), RandomTensor(rng, {})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Mul(args(in, 0), args(in, 1)), 6);
                   }});
  cases.push_back({"scale", kPrimitive, {RandomTensor(rng, {3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Scale(args(in, 0), -1.75), 7);
                   }});
  cases.push_back({"add_bias", kPrimitive, {RandomTensor(rng, {2, 3, 4}), RandomTensor(rng, {4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(AddBias(args(in, 0), args(in, 1)), 8);
                   }});
  cases.push_back({"reshape", kPrimitive, {RandomTensor(rng, {2, 6})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Reshape(args(in, 0), {3, 4}), 9);
                   }});
  cases.push_back({"sum_axes", kPrimitive, {RandomTensor(rng, {2, 3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Sum(args(in, 0), {0, 2}), 10);
                   }});
  cases.push_back({"mean_axes", kPrimitive, {RandomTensor(rng, {2, 3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(Mean(args(in, 0), {1}), 11);
                   }});
  cases.push_back({"sum_all", kPrimitive, {RandomTensor(rng, {2, 3})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return SumAll(Mul(args(in, 0), args(in, 0)));
                   }});
  cases.push_back({"cross_entropy", kPrimitive, {RandomTensor(rng, {4, 3}, 2.0)},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     static const int labels[] = {0, 2, 1, 2};
                     return CrossEntropyLogits(args(in, 0), labels);
                   }});
  cases.push_back({"time_shift", kPrimitive, {RandomTensor(rng, {4, 2, 3})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(TimeShift(args(in, 0), 2), 12);
                   }});
  cases.push_back({"attention_scores", kPrimitive,
                   {RandomTensor(rng, {2, 1, 3, 4}), RandomTensor(rng, {2, 1, 3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(AttentionScores(args(in, 0), args(in, 1), 2), 13);
                   }});
  cases.push_back({"attend_values", kPrimitive,
                   {RandomTensor(rng, {2, 1, 2, 3, 3}), RandomTensor(rng, {2, 1, 3, 4})},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(AttendValues(args(in, 0), args(in, 1), 2), 14);
                   }});
  cases.push_back({"lif_smooth", kComposite, {RandomTensor(rng, {5, 2, 3}, 1.5)},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(LifForward(args(in, 0), LifParams{}, LifMode::kSmooth), 15);
                   }});
  cases.push_back({"temporal_filter", kComposite,
                   {RandomTensor(rng, {5, 2, 3}), Tensor<double>::Scalar(1.3)},
                   [&](Tape<double>&, std::span<const Var<double>> in) {
                     return Project(TemporalFilter(args(in, 0), 3, args(in, 1)), 16);
                   }});
  {
    constexpr int kD = 8;
    Tensor<double> params({2, kNsadParamCount});
    for (int h = 0; h < 2; ++h) {
      NsadHead head = InitialNsadHead(kD, 1.5 + h);
      head.b = 0.02 * (h + 1);
      head.c = 3.0;
      head.dw = 0.4;
      const auto arr = head.ToArray();
      for (int k = 0; k < kNsadParamCount; ++k) params[h * kNsadParamCount + k] = arr[k];
    }
    auto tables = std::make_shared<std::vector<NsadTable>>();
    for (int h = 0; h < 2; ++h) tables->push_back(BuildTable(InitialNsadHead(kD, 1.5 + h), kD));
    cases.push_back({"nsad_train", kComposite,
                     {RandomUniform(rng, {2, 1, 2, 3, 3}, 0.2, kD - 0.2), params},
                     [tables](Tape<double>&, std::span<const Var<double>> in) {
                       DenoiseOptions opts;
                       opts.continuous_forward = true;
                       return Project(Denoise(in[0], in[1], *tables, kD, opts), 17);
                     }});
  }

  std::vector<CheckResult> out;
  for (auto& c : cases) {
    out.push_back(Timed(std::string("grad.") + c.name, [&] {
      GradCheckOptions opts;
      opts.tol = c.tol;
      const GradCheckReport rep = CheckGradients(c.fn, c.inputs, opts);
      std::ostringstream os;
      if (!rep.passed()) os << "FAIL: ";
      os << rep.Summary() << " (tol " << c.tol << ")";
      return os.str();
    }));
  }
  return out;
}

CheckResult CheckReplicaEquivalence(int configs, std::uint64_t seed) {
  return Timed("tasa.replica_equivalence", [&] {
    CounterRng root = CounterRng(seed).Split("replica");
    double worst = 0;
    for (int c = 0; c < configs; ++c) {
      CounterRng rng = root.Split(static_cast<std::uint64_t>(c));
      const int steps = 1 + static_cast<int>(rng.Below(6));
      const int n = 1 + static_cast<int>(rng.Below(8));
      const int d_in = 1 + static_cast<int>(rng.Below(16));
      const int d_out = 1 + static_cast<int>(rng.Below(16));
      const int t_aw = 1 + static_cast<int>(rng.Below(4));
      const int tau = static_cast<int>(rng.Below(5));
      Tape<double> tape;
      const auto s = tape.Leaf(RandomSpikes(rng, {steps, n, d_in}));
      const auto w = tape.Leaf(RandomTensor(rng, {d_in, d_out}));
      const auto tv = tape.Leaf(Tensor<double>::Scalar(tau));
      const auto fast = TasaProject(s, w, TasaConfig{t_aw, 8}, tv);
      const auto slow = ExplicitStaOracle(s, w, t_aw, tau);
      for (std::int64_t i = 0; i < fast.value().size(); ++i) {
        worst = std::max(worst, std::abs(fast.value()[i] - slow.value()[i]));
      }
    }
    std::ostringstream os;
    if (worst > 1e-12) os << "FAIL: ";
    os << configs << " configs, max |diff| = " << worst;
    return os.str();
  });
}

CheckResult CheckShiftExactness() {
  return Timed("tasa.shift_exactness", [] {
    std::vector<std::int64_t> acc(1025);
    for (int i = 0; i <= 1024; ++i) acc[i] = i;
    int mismatches = 0, cases = 0;
    for (int tau = 0; tau <= 6; ++tau) {
      for (int delta = 0; delta <= 3; ++delta) {
        const auto got = ShiftDecayApply(acc, tau, delta);
        const double factor = std::ldexp(1.0, -tau * delta);
        for (int i = 0; i <= 1024; ++i) {
          const double want = static_cast<double>(acc[i]) * factor;
          ++cases;
          if (std::memcmp(&got[i], &want, sizeof(double)) != 0) ++mismatches;
        }
      }
    }
    std::ostringstream os;
    if (mismatches) os << "FAIL: ";
    os << cases << " cases, " << mismatches << " bitwise mismatches";
    return os.str();
  });
}

namespace {

bool SameTensor(const Tensor<float>& a, const Tensor<float>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.raw(), b.raw(), sizeof(float) * static_cast<std::size_t>(a.size())) == 0;
}

// Forward values, all trainable-parameter gradients, and the parameters after
// one optimizer step must agree bitwise.
std::string CompareModels(const ModelConfig& ca, const ModelConfig& cb, const EventDataset& data) {
  Model<float> ma(ca), mb(cb);
  std::vector<std::size_t> idx(data.count());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto frames = data.Batch<float>(idx);
  Tape<float> ta, tb;
  const auto ra = ma.Forward(ta, frames, false);
  const auto rb = mb.Forward(tb, frames, false);
  if (!SameTensor(ra.logits.value(), rb.logits.value())) return "logits differ";
  for (std::size_t l = 0; l < ra.maps.size(); ++l) {
    if (!SameTensor(ra.maps[l].value(), rb.maps[l].value())) return "maps differ";
    if (!SameTensor(ra.scores[l].value(), rb.scores[l].value())) return "scores differ";
  }
  TrainConfig tc;
  Trainer tra(ma, tc), trb(mb, tc);
  tra.Step(data, idx, 1e-2);
  trb.Step(data, idx, 1e-2);
  for (std::size_t i = 0; i < ma.parameters().size(); ++i) {
    if (!SameTensor(ma.parameters()[i].value, mb.parameters()[i].value)) {
      return "parameter " + ma.parameters()[i].name + " differs after a step";
    }
  }
  return "";
}

}  // namespace

CheckResult CheckDegeneration(int seeds) {
  return Timed("degeneration.bitwise", [&] {
    int failures = 0;
    std::string first;
    for (int s = 0; s < seeds; ++s) {
      TemporalOrderOptions dopts;
      dopts.n = 4;
      dopts.seed = 1000 + s;
      const EventDataset data = GenerateTemporalOrder(dopts);
      ModelConfig base;
      base.seed = static_cast<std::uint64_t>(s);
      CounterRng rng = CounterRng(s).Split("degeneration");
      for (auto& t : base.tau_init) t = 4.0 * rng.Uniform();

      ModelConfig spatial = base;
      spatial.attention_mode = AttentionMode::kSpatialOnly;
      spatial.nsad_enabled = false;
      ModelConfig window1 = base;
      window1.t_aw = 1;
      window1.nsad_enabled = false;
      ModelConfig no_denoiser = base;
      no_denoiser.nsad_enabled = false;
      ModelConfig identity = base;
      identity.nsad_identity = true;
      ModelConfig ablation = base;
      ablation.t_aw = 1;
      ablation.nsad_identity = true;

      for (const auto& [a, b, what] :
           {std::tuple{spatial, window1, "t_aw=1 vs spatial-only"},
            std::tuple{no_denoiser, identity, "identity table vs no denoiser"},
            std::tuple{spatial, ablation, "spatial-only vs t_aw=1 + identity table"}}) {
        const std::string diff = CompareModels(a, b, data);
        if (!diff.empty()) {
          if (failures++ == 0) first = std::string(what) + ", seed " + std::to_string(s) + ": " + diff;
        }
      }
    }
    std::ostringstream os;
    if (failures) os << "FAIL: " << failures << " mismatches, first: " << first;
    else os << seeds << " seeds x 3 pairs bitwise identical";
    return os.str();
  });
}

CheckResult CheckNsadInvariants(int draws, std::uint64_t seed) {
  return Timed("nsad.invariants", [&] {
    CounterRng root = CounterRng(seed).Split("nsad-invariants");
    int bad_zero = 0, bad_agree = 0, bad_mono = 0;
    static const int kDims[] = {4, 8, 16, 32};
    for (int i = 0; i < draws; ++i) {
      CounterRng rng = root.Split(static_cast<std::uint64_t>(i));
      const int d = kDims[rng.Below(4)];
      NsadHead h;
      h.a = 2.0 * rng.Uniform();
      h.b = 0.2 * (rng.Uniform() - 0.5);
      h.c = d * rng.Uniform();
      h.dw = 2.0 * (rng.Uniform() - 0.5);
      h.e = d * rng.Uniform();
      h.u = 0.5 * d * rng.Uniform();
      const NsadTable table = BuildTable(h, d);
      if (table[0] != 0) ++bad_zero;
      if (!CheckTableAgreement(h, d).within_bound) ++bad_agree;
      bool mono = true;
      for (int s = 0; s <= d; ++s) {
        if (s <= h.u && table[s] != 0) mono = false;
        if (table[s] < 0) mono = false;
      }
      // Zero scores stay zero on a random map, so sparsity cannot drop.
      Tensor<float> scores({1, 1, 1, 4, 4});
      for (auto& x : scores.data()) x = static_cast<float>(rng.Below(d + 1));
      const auto den = DenoiseLookup(scores, std::vector<NsadTable>{table}, d);
      for (std::int64_t k = 0; k < scores.size(); ++k) {
        if (scores[k] == 0 && den[k] != 0) mono = false;
      }
      if (!mono) ++bad_mono;
    }
    std::ostringstream os;
    if (bad_zero || bad_agree || bad_mono) os << "FAIL: ";
    os << draws << " draws; AD[0]!=0: " << bad_zero << ", agreement: " << bad_agree
       << ", monotone: " << bad_mono;
    return os.str();
  });
}

CheckResult CheckEnergyRatios() {
  return Timed("analyze.energy_ratios", [] {
    struct Row {
      double base, ds2ta, printed;
    };
    static const Row kRows[] = {{0.7426, 0.9699, 0.883},
                                {0.7682, 0.9782, 0.906},
                                {0.7898, 0.9814, 0.911},
                                {0.8264, 0.9859, 0.919}};
    std::ostringstream os;
    bool ok = true;
    const std::int64_t ops = CountAttentionOps(16, 16, 4, 8);
    for (const auto& r : kRows) {
      const double red = EnergyReduction(r.base, r.ds2ta);
      const double via_energy =
          1.0 - EnergyNanojoules(ops, r.ds2ta) / EnergyNanojoules(ops, r.base);
      const bool row_ok = std::abs(red - r.printed) <= 0.0015 && std::abs(via_energy - red) < 1e-12;
      ok = ok && row_ok;
      os << (&r == kRows ? "" : ", ") << FormatDouble(std::round(red * 10000) / 100) << "%";
    }
    return (ok ? std::string() : std::string("FAIL: ")) + "reductions " + os.str();
  });
}

CheckResult CheckFormats() {
  return Timed("formats.roundtrip", [] {
    std::vector<std::string> problems;
    TemporalOrderOptions dopts;
    dopts.n = 17;
    dopts.seed = 5;
    const EventDataset ds = GenerateTemporalOrder(dopts);
    const auto bytes = EncodeEvtb(ds);
    const EventDataset back = DecodeEvtb(bytes);
    if (back.frames != ds.frames || back.labels != ds.labels || EncodeEvtb(back) != bytes) {
      problems.push_back("evtb round-trip");
    }
    if (bytes.size() != EvtbFileSize(ds)) problems.push_back("evtb size");
    auto expect_reject = [&](std::vector<unsigned char> b, const char* what, bool evtb) {
      try {
        if (evtb) DecodeEvtb(b);
        else DecodeCheckpoint(b);
        problems.push_back(std::string(what) + " accepted");
      } catch (const FormatError&) {
      }
    };
    auto bad = bytes;
    bad[0] = 'X';
    expect_reject(bad, "evtb bad magic", true);
    bad = bytes;
    bad[4] = 2;
    expect_reject(bad, "evtb version 2", true);
    bad = bytes;
    bad.pop_back();
    expect_reject(bad, "evtb truncated", true);

    ModelConfig cfg;
    cfg.seed = 3;
    const Model<float> model(cfg);
    const auto ck = EncodeCheckpoint(ModelCheckpoint(model));
    const CheckpointData dec = DecodeCheckpoint(ck);
    if (EncodeCheckpoint(dec) != ck) problems.push_back("checkpoint re-encode");
    const Model<float> loaded = LoadModel<float>(dec);
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      if (!(model.parameters()[i].value == loaded.parameters()[i].value)) {
        problems.push_back("checkpoint parameter " + model.parameters()[i].name);
      }
    }
    if (loaded.tables() != model.tables()) problems.push_back("checkpoint tables");
    auto badck = ck;
    badck[1] = 'Z';
    expect_reject(badck, "checkpoint bad magic", false);
    badck = ck;
    badck[4] = 2;
    expect_reject(badck, "checkpoint version 2", false);
    badck = ck;
    badck.resize(badck.size() - 3);
    expect_reject(badck, "checkpoint truncated", false);

    if (problems.empty()) return std::string("EVTB and checkpoint round-trips lossless, 6 corruptions rejected");
    std::string msg = "FAIL:";
    for (const auto& p : problems) msg += " " + p + ";";
    return msg;
  });
}

CheckResult CheckTableStorage() {
  return Timed("nsad.table_storage", [] {
    ModelConfig cfg;
    cfg.dim = 12 * 32;
    cfg.heads = 12;
    cfg.blocks = 1;
    cfg.tau_init = {2.0};
    const Model<float> model(cfg);
    std::size_t ints = 0;
    for (const auto& t : model.tables()[0]) ints += t.size();
    const std::size_t reference_count = 384;
    const bool ok = ints == 396 && ints - reference_count == static_cast<std::size_t>(cfg.heads);
    return std::string(ok ? "" : "FAIL: ") + std::to_string(ints) +
           " table integers for H=12, d=32 (one extra entry per head versus 384)";
  });
}

std::vector<CheckResult> RunSelfTest() {
  std::vector<CheckResult> out = RunGradientSuite();
  out.push_back(CheckReplicaEquivalence());
  out.push_back(CheckShiftExactness());
  out.push_back(CheckDegeneration());
  out.push_back(CheckNsadInvariants());
  out.push_back(CheckEnergyRatios());
  out.push_back(CheckFormats());
  out.push_back(CheckTableStorage());
  return out;
}

}  // namespace ds2ta
