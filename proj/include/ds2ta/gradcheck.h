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

#ifndef DS2TA_GRADCHECK_H_
#define DS2TA_GRADCHECK_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ds2ta/autodiff.h"

namespace ds2ta {

// A tape program: builds a scalar from leaves that already sit on `tape`.
using TapeProgram =
    std::function<Var<double>(Tape<double>& tape, std::span<const Var<double>> inputs)>;

struct GradMismatch {
  std::size_t input;
  std::int64_t index;
  double analytic;
  double numeric;
  double rel_err;
};

struct GradCheckReport {
  double max_rel_err = 0;
  std::size_t checked = 0;
  std::vector<GradMismatch> failures;  // entries with rel_err > tol
  bool passed() const { return failures.empty(); }
  std::string Summary() const;
};

struct GradCheckOptions {
  double eps = 1e-6;
  double tol = 1e-6;
  // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  // near-zero gradients from turning rounding noise into huge ratios.
  double floor = 1e-3;
};

// Compares the tape gradient of `fn` against central finite differences for
// every element of every input. Report-only: never throws on mismatch.
GradCheckReport CheckGradients(const TapeProgram& fn,
                               const std::vector<Tensor<double>>& inputs,
                               const GradCheckOptions& opts = {});

}  // namespace ds2ta

#endif  // DS2TA_GRADCHECK_H_
