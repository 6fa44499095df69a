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

#include "ds2ta/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ds2ta {

namespace {

double Evaluate(const TapeProgram& fn, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.Leaf(t, false));
  const Var<double> out = fn(tape, vars);
  return out.value().item();
}

}  // namespace

std::string GradCheckReport::Summary() const {
  std::ostringstream os;
  os << "checked " << checked << " elements, max rel err " << max_rel_err;
  if (!failures.empty()) {
    const auto& f = failures.front();
    os << ", " << failures.size() << " failing (first: input " << f.input
       << " index " << f.index << " analytic " << f.analytic << " numeric "
       << f.numeric << ")";
  }
  return os.str();
}

GradCheckReport CheckGradients(const TapeProgram& fn,
                               const std::vector<Tensor<double>>& inputs,
                               const GradCheckOptions& opts) {
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& t : inputs) vars.push_back(tape.Leaf(t, true));
    const Var<double> out = fn(tape, vars);
    tape.Backward(out);
    for (const auto& v : vars) {
      analytic.push_back(tape.has_grad(v.id()) ? v.grad() : Tensor<double>(v.shape()));
    }
  }

  GradCheckReport report;
  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t in = 0; in < inputs.size(); ++in) {
    for (std::int64_t i = 0; i < inputs[in].size(); ++i) {
      const double x = inputs[in][i];
      probe[in][i] = x + opts.eps;
      const double up = Evaluate(fn, probe);
      probe[in][i] = x - opts.eps;
      const double down = Evaluate(fn, probe);
      probe[in][i] = x;
      const double numeric = (up - down) / (2 * opts.eps);
      const double a = analytic[in][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
      const double rel = std::abs(a - numeric) / denom;
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.checked;
      if (!(rel <= opts.tol)) report.failures.push_back({in, i, a, numeric, rel});
    }
  }
  return report;
}

}  // namespace ds2ta
