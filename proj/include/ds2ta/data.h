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

// Synthetic binary event-frame datasets and the EVTB container.
//
// EVTB layout (little endian):
//   "EVTB"  u32 version=1  u32 count  u16 T  u16 C  u16 H  u16 W  u16 classes
//   then per sample: u16 label, ceil(T*C*H*W / 8) bytes of frames bit-packed
//   row-major over [T, C, H, W], most significant bit first.

#ifndef DS2TA_DATA_H_
#define DS2TA_DATA_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ds2ta/tensor.h"

namespace ds2ta {

inline constexpr std::uint32_t kEvtbVersion = 1;
inline constexpr std::size_t kEvtbHeaderBytes = 22;

struct EventDataset {
  int steps = 0;
  int channels = 1;
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<std::uint8_t> frames;  // count x [T, C, H, W], values 0/1
  std::vector<int> labels;
  // Provenance; not stored in EVTB.
  std::string generator;
  std::uint64_t seed = 0;
  double noise_rate = 0;

  std::size_t count() const { return labels.size(); }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(steps) * channels * height * width;
  }
  std::span<const std::uint8_t> sample(std::size_t i) const {
    return {frames.data() + i * sample_size(), sample_size()};
  }
  std::span<std::uint8_t> sample(std::size_t i) {
    return {frames.data() + i * sample_size(), sample_size()};
  }

  // Frames of the given samples as a [T, B, C, H, W] tensor.
  template <typename Real>
  Tensor<Real> Batch(std::span<const std::size_t> indices) const;

  std::vector<int> BatchLabels(std::span<const std::size_t> indices) const;

  EventDataset Subset(std::size_t begin, std::size_t end) const;

  // Checks binary frames, label range, and buffer sizes.
  void Validate() const;
};

struct TemporalOrderOptions {
  int n = 1000;
  int steps = 8;
  int grid = 16;
  int patch = 4;
  double noise_rate = 0.02;
  std::uint64_t seed = 0;
  int gap_max = 0;  // 0 means steps / 2
};

// Two distinct 4x4 patterns flash once each at random non-overlapping
// patch-aligned locations; label 0 iff pattern A flashes first.
EventDataset GenerateTemporalOrder(const TemporalOrderOptions& opts);

struct TemporalOrderEvent {
  int t_a, t_b;
  int loc_a, loc_b;  // patch index, row-major over the patch grid
};
// The flash placement GenerateTemporalOrder draws for sample `i`.
TemporalOrderEvent TemporalOrderPlacement(const TemporalOrderOptions& opts, std::size_t i);

// The two flash patterns (row-major 4x4, 0/1).
const std::array<std::uint8_t, 16>& TemporalOrderPatternA();
const std::array<std::uint8_t, 16>& TemporalOrderPatternB();

struct StaticPatternOptions {
  int n = 1000;
  int steps = 8;
  int grid = 16;
  int patch = 4;
  int classes = 4;
  double noise_rate = 0.02;
  std::uint64_t seed = 0;
};

inline constexpr int kStaticPatternBankSize = 16;

// One class pattern at the centre patch on every timestep, plus noise.
EventDataset GenerateStaticPatterns(const StaticPatternOptions& opts);

// Pattern k of the static bank (row-major 4x4, 0/1).
std::array<std::uint8_t, 16> StaticPattern(int k);

// MSB-first bit packing of 0/1 values.
std::vector<std::uint8_t> PackBits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> UnpackBits(std::span<const std::uint8_t> packed, std::size_t nbits);

std::vector<unsigned char> EncodeEvtb(const EventDataset& ds);
EventDataset DecodeEvtb(const std::vector<unsigned char>& bytes);

void WriteEvtb(const std::string& path, const EventDataset& ds);
EventDataset ReadEvtb(const std::string& path);

std::size_t EvtbFileSize(const EventDataset& ds);

}  // namespace ds2ta

#endif  // DS2TA_DATA_H_
