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


// Invariant suites shared by the `selftest` command and the acceptance
// binary. Each check reports instead of throwing.

#ifndef DS2TA_SELFTEST_H_
#define DS2TA_SELFTEST_H_

#include <cstdint>
#include <string>
#include <vector>

namespace ds2ta {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

// Finite-difference checks of every differentiable op at f64: primitive
// ops against 1e-6, LIF / temporal filter / NSAD against 1e-4.
std::vector<CheckResult> RunGradientSuite();

// Filter-then-project versus the explicit per-lag weight replica sum.
CheckResult CheckReplicaEquivalence(int configs = 100, std::uint64_t seed = 1);

// Fixed-point shift decay versus multiplication by 2^(-tau*delta), bitwise.
CheckResult CheckShiftExactness();

// t_aw = 1 against spatial-only mode and the identity table against no
// denoiser: forward outputs, gradients, and one optimizer step, bitwise.
CheckResult CheckDegeneration(int seeds = 10);

// AD[0] = 0, table/function agreement, and monotone sparsification over
// random denoiser parameters.
CheckResult CheckNsadInvariants(int draws = 1000, std::uint64_t seed = 2);

// Energy reductions from the reference block sparsity pairs.
CheckResult CheckEnergyRatios();

// EVTB and checkpoint round-trips plus corrupted-header rejection.
CheckResult CheckFormats();

// Table storage count for H = 12, d = 32.
CheckResult CheckTableStorage();

// Every suite above, in order.
std::vector<CheckResult> RunSelfTest();

}  // namespace ds2ta

#endif  // DS2TA_SELFTEST_H_
