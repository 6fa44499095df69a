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

#ifndef DS2TA_RNG_H_
#define DS2TA_RNG_H_

#include <cstdint>
#include <string_view>

namespace ds2ta {

// Counter-based generator: the n-th draw of a stream is
// SplitMix64Finalize(key + n * kGolden), so a stream is fully described by
// (key, counter) and can be checkpointed as two integers. Split() derives an
// independent child stream from a label without advancing the parent.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0) : key_(Mix(seed)) {}
  CounterRng(std::uint64_t key, std::uint64_t counter)
      : key_(key), counter_(counter) {}

  std::uint64_t NextU64() { return Mix(key_ + (counter_++) * kGolden); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be > 0. Uses rejection to stay unbiased.
  std::uint64_t Below(std::uint64_t n);

  // Standard normal via Box-Muller (one draw per call; the pair's second
  // value is discarded so the stream position stays a pure function of the
  // number of calls).
  double Normal();

  bool Bernoulli(double p) { return Uniform() < p; }

  CounterRng Split(std::uint64_t stream) const {
    return CounterRng(Mix(key_ ^ Mix(stream + kGolden)), 0);
  }
  CounterRng Split(std::string_view label) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t Mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ds2ta

#endif  // DS2TA_RNG_H_
