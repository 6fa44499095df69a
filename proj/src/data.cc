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

#include "ds2ta/data.h"

#include <algorithm>

#include "ds2ta/binary_io.h"
#include "ds2ta/rng.h"

namespace ds2ta {

namespace {

constexpr char kEvtbMagic[4] = {'E', 'V', 'T', 'B'};
constexpr int kPatternSide = 4;

void CheckGrid(int grid, int patch) {
  if (grid < 1 || patch < 1 || grid % patch != 0) {
    throw GenerationError("grid " + std::to_string(grid) + " is not divisible by patch " +
                          std::to_string(patch));
  }
  if (patch < kPatternSide) {
    throw GenerationError("patch " + std::to_string(patch) + " cannot hold a 4x4 pattern");
  }
}

// ORs a 4x4 pattern into frame t of a [T, 1, grid, grid] sample at the
// top-left corner of patch `loc`.
void Stamp(std::span<std::uint8_t> sample, int t, int grid, int patch, int loc,
           const std::array<std::uint8_t, 16>& pattern) {
  const int per_row = grid / patch;
  const int y0 = (loc / per_row) * patch;
  const int x0 = (loc % per_row) * patch;
  const std::size_t frame = static_cast<std::size_t>(t) * grid * grid;
  for (int y = 0; y < kPatternSide; ++y) {
    for (int x = 0; x < kPatternSide; ++x) {
      if (pattern[y * kPatternSide + x]) sample[frame + (y0 + y) * grid + (x0 + x)] = 1;
    }
  }
}

void AddNoise(std::span<std::uint8_t> sample, double rate, CounterRng& rng) {
  if (rate <= 0) return;
  for (auto& px : sample) {
    if (rng.Bernoulli(rate)) px = 1;
  }
}

}  // namespace

template <typename Real>
Tensor<Real> EventDataset::Batch(std::span<const std::size_t> indices) const {
  const auto b = static_cast<std::int64_t>(indices.size());
  Tensor<Real> out({steps, b, channels, height, width});
  const std::size_t frame = static_cast<std::size_t>(channels) * height * width;
  for (std::int64_t j = 0; j < b; ++j) {
    const auto src = sample(indices[j]);
    for (int t = 0; t < steps; ++t) {
      Real* dst = out.raw() + (t * b + j) * frame;
      for (std::size_t i = 0; i < frame; ++i) dst[i] = static_cast<Real>(src[t * frame + i]);
    }
  }
  return out;
}

template Tensor<float> EventDataset::Batch<float>(std::span<const std::size_t>) const;
template Tensor<double> EventDataset::Batch<double>(std::span<const std::size_t>) const;

std::vector<int> EventDataset::BatchLabels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (const auto i : indices) out.push_back(labels[i]);
  return out;
}

EventDataset EventDataset::Subset(std::size_t begin, std::size_t end) const {
  EventDataset out = *this;
  end = std::min(end, count());
  begin = std::min(begin, end);
  out.labels.assign(labels.begin() + begin, labels.begin() + end);
  out.frames.assign(frames.begin() + begin * sample_size(), frames.begin() + end * sample_size());
  return out;
}

void EventDataset::Validate() const {
  if (steps < 1 || channels < 1 || height < 1 || width < 1 || classes < 1) {
    throw InputError("dataset has a zero extent or no classes");
  }
  if (frames.size() != count() * sample_size()) {
    throw InputError("frame buffer holds " + std::to_string(frames.size()) + " values, expected " +
                     std::to_string(count() * sample_size()));
  }
  for (const auto v : frames) {
    if (v > 1) throw InputError("frames must be binary");
  }
  for (const int l : labels) {
    if (l < 0 || l >= classes) throw InputError("label " + std::to_string(l) + " out of range");
  }
}

const std::array<std::uint8_t, 16>& TemporalOrderPatternA() {
  // Diagonal cross.
  static const std::array<std::uint8_t, 16> kA = {1, 0, 0, 1,  //
                                                  0, 1, 1, 0,  //
                                                  0, 1, 1, 0,  //
                                                  1, 0, 0, 1};
  return kA;
}

const std::array<std::uint8_t, 16>& TemporalOrderPatternB() {
  // Hollow square.
  static const std::array<std::uint8_t, 16> kB = {1, 1, 1, 1,  //
                                                  1, 0, 0, 1,  //
                                                  1, 0, 0, 1,  //
                                                  1, 1, 1, 1};
  return kB;
}

namespace {

void CheckTemporalOrder(const TemporalOrderOptions& o) {
  if (o.steps < 4) throw GenerationError("temporal-order task needs T >= 4");
  CheckGrid(o.grid, o.patch);
  if ((o.grid / o.patch) * (o.grid / o.patch) < 2) {
    throw GenerationError("grid has fewer than two patch locations");
  }
  const int gap_max = o.gap_max > 0 ? o.gap_max : o.steps / 2;
  if (gap_max >= o.steps) throw GenerationError("gap_max must be < T");
  if (o.n < 0) throw GenerationError("negative sample count");
  if (o.noise_rate < 0 || o.noise_rate > 1) throw GenerationError("noise rate outside [0, 1]");
}

}  // namespace

TemporalOrderEvent TemporalOrderPlacement(const TemporalOrderOptions& o, std::size_t i) {
  CheckTemporalOrder(o);
  const int gap_max = o.gap_max > 0 ? o.gap_max : o.steps / 2;
  const int locations = (o.grid / o.patch) * (o.grid / o.patch);
  CounterRng rng = CounterRng(o.seed).Split("temporal-order").Split(i);
  const bool a_first = rng.Below(2) == 0;
  const int gap = 1 + static_cast<int>(rng.Below(static_cast<std::uint64_t>(gap_max)));
  const int first = static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.steps - gap)));
  TemporalOrderEvent ev;
  ev.t_a = a_first ? first : first + gap;
  ev.t_b = a_first ? first + gap : first;
  ev.loc_a = static_cast<int>(rng.Below(static_cast<std::uint64_t>(locations)));
  ev.loc_b = static_cast<int>(rng.Below(static_cast<std::uint64_t>(locations - 1)));
  if (ev.loc_b >= ev.loc_a) ++ev.loc_b;
  return ev;
}

EventDataset GenerateTemporalOrder(const TemporalOrderOptions& o) {
  CheckTemporalOrder(o);
  EventDataset ds;
  ds.steps = o.steps;
  ds.channels = 1;
  ds.height = ds.width = o.grid;
  ds.classes = 2;
  ds.generator = "temporal-order";
  ds.seed = o.seed;
  ds.noise_rate = o.noise_rate;
  ds.frames.assign(static_cast<std::size_t>(o.n) * ds.sample_size(), 0);
  ds.labels.resize(static_cast<std::size_t>(o.n));
  const CounterRng noise_root = CounterRng(o.seed).Split("temporal-order-noise");
  for (std::size_t i = 0; i < ds.count(); ++i) {
    const TemporalOrderEvent ev = TemporalOrderPlacement(o, i);
    auto sample = ds.sample(i);
    CounterRng noise = noise_root.Split(i);
    AddNoise(sample, o.noise_rate, noise);
    Stamp(sample, ev.t_a, o.grid, o.patch, ev.loc_a, TemporalOrderPatternA());
    Stamp(sample, ev.t_b, o.grid, o.patch, ev.loc_b, TemporalOrderPatternB());
    ds.labels[i] = ev.t_a < ev.t_b ? 0 : 1;
  }
  return ds;
}

std::array<std::uint8_t, 16> StaticPattern(int k) {
  if (k < 0 || k >= kStaticPatternBankSize) {
    throw GenerationError("static pattern index " + std::to_string(k) + " outside the bank");
  }
  // Bank entries are fixed random patterns with 6..10 pixels set, redrawn
  // until they differ from every earlier entry.
  static const std::vector<std::array<std::uint8_t, 16>> kBank = [] {
    std::vector<std::array<std::uint8_t, 16>> bank;
    CounterRng rng(0x5eed0f5a77e2ULL);
    while (static_cast<int>(bank.size()) < kStaticPatternBankSize) {
      std::array<std::uint8_t, 16> p{};
      int on = 0;
      for (auto& px : p) {
        px = rng.Below(2) ? 1 : 0;
        on += px;
      }
      if (on < 6 || on > 10) continue;
      if (std::find(bank.begin(), bank.end(), p) != bank.end()) continue;
      bank.push_back(p);
    }
    return bank;
  }();
  return kBank[static_cast<std::size_t>(k)];
}

EventDataset GenerateStaticPatterns(const StaticPatternOptions& o) {
  if (o.steps < 1) throw GenerationError("need T >= 1");
  CheckGrid(o.grid, o.patch);
  if (o.classes < 1 || o.classes > kStaticPatternBankSize) {
    throw GenerationError("class count " + std::to_string(o.classes) + " exceeds the " +
                          std::to_string(kStaticPatternBankSize) + " available patterns");
  }
  if (o.noise_rate < 0 || o.noise_rate > 1) throw GenerationError("noise rate outside [0, 1]");
  EventDataset ds;
  ds.steps = o.steps;
  ds.channels = 1;
  ds.height = ds.width = o.grid;
  ds.classes = o.classes;
  ds.generator = "static";
  ds.seed = o.seed;
  ds.noise_rate = o.noise_rate;
  ds.frames.assign(static_cast<std::size_t>(o.n) * ds.sample_size(), 0);
  ds.labels.resize(static_cast<std::size_t>(o.n));
  const int per_row = o.grid / o.patch;
  const int centre = (per_row / 2) * per_row + per_row / 2;
  const CounterRng root = CounterRng(o.seed).Split("static");
  for (std::size_t i = 0; i < ds.count(); ++i) {
    CounterRng rng = root.Split(i);
    const int label = static_cast<int>(rng.Below(static_cast<std::uint64_t>(o.classes)));
    auto sample = ds.sample(i);
    AddNoise(sample, o.noise_rate, rng);
    const auto pattern = StaticPattern(label);
    for (int t = 0; t < o.steps; ++t) Stamp(sample, t, o.grid, o.patch, centre, pattern);
    ds.labels[i] = label;
  }
  return ds;
}

std::vector<std::uint8_t> PackBits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

std::vector<std::uint8_t> UnpackBits(std::span<const std::uint8_t> packed, std::size_t nbits) {
  std::vector<std::uint8_t> out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) out[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
  return out;
}

std::size_t EvtbFileSize(const EventDataset& ds) {
  return kEvtbHeaderBytes + ds.count() * (2 + (ds.sample_size() + 7) / 8);
}

std::vector<unsigned char> EncodeEvtb(const EventDataset& ds) {
  ds.Validate();
  auto u16 = [](int v, const char* what) {
    if (v < 0 || v > 0xffff) throw InputError(std::string(what) + " does not fit in u16");
    return static_cast<std::uint16_t>(v);
  };
  ByteWriter w;
  w.PutBytes(std::string_view(kEvtbMagic, 4));
  w.Put<std::uint32_t>(kEvtbVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(ds.count()));
  w.Put(u16(ds.steps, "T"));
  w.Put(u16(ds.channels, "C"));
  w.Put(u16(ds.height, "H"));
  w.Put(u16(ds.width, "W"));
  w.Put(u16(ds.classes, "class count"));
  for (std::size_t i = 0; i < ds.count(); ++i) {
    w.Put(u16(ds.labels[i], "label"));
    w.PutBytes(PackBits(ds.sample(i)));
  }
  return w.bytes();
}

EventDataset DecodeEvtb(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  if (r.GetString(4, "magic") != std::string_view(kEvtbMagic, 4)) {
    throw FormatError("bad EVTB magic", 0);
  }
  const auto version = r.Get<std::uint32_t>("version");
  if (version != kEvtbVersion) {
    throw UnsupportedVersionError("unsupported EVTB version " + std::to_string(version), 4);
  }
  EventDataset ds;
  const auto count = r.Get<std::uint32_t>("count");
  ds.steps = r.Get<std::uint16_t>("T");
  ds.channels = r.Get<std::uint16_t>("C");
  ds.height = r.Get<std::uint16_t>("H");
  ds.width = r.Get<std::uint16_t>("W");
  ds.classes = r.Get<std::uint16_t>("class count");
  if (ds.steps == 0 || ds.channels == 0 || ds.height == 0 || ds.width == 0 || ds.classes == 0) {
    throw FormatError("zero extent in EVTB header", 12);
  }
  const std::size_t packed = (ds.sample_size() + 7) / 8;
  const std::size_t expected = static_cast<std::size_t>(count) * (2 + packed);
  if (r.remaining() != expected) {
    throw FormatError("EVTB payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                          std::to_string(expected),
                      r.pos());
  }
  ds.labels.resize(count);
  ds.frames.resize(static_cast<std::size_t>(count) * ds.sample_size());
  const std::size_t pad_bits = packed * 8 - ds.sample_size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    const int label = r.Get<std::uint16_t>("label");
    if (label >= ds.classes) {
      throw FormatError("label " + std::to_string(label) + " >= class count", at);
    }
    ds.labels[i] = label;
    const unsigned char* p = r.Take(packed, "frames");
    if (pad_bits > 0 && (p[packed - 1] & ((1u << pad_bits) - 1u)) != 0) {
      throw FormatError("nonzero padding bits", r.pos() - 1);
    }
    const auto bits = UnpackBits(std::span<const std::uint8_t>(p, packed), ds.sample_size());
    std::copy(bits.begin(), bits.end(), ds.sample(i).begin());
  }
  ds.generator = "evtb";
  return ds;
}

void WriteEvtb(const std::string& path, const EventDataset& ds) {
  WriteFileAtomic(path, EncodeEvtb(ds));
}

EventDataset ReadEvtb(const std::string& path) { return DecodeEvtb(ReadFileBytes(path)); }

}  // namespace ds2ta
