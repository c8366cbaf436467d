// Copyright 2026 The cs-forge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CSFORGE_GRADCHECK_H_
#define CSFORGE_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "csforge/model.h"

namespace csforge {

// |a - b| / max(1e-8, |a| + |b|)
double RelativeError(double analytic, double numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
  int worst_index = -1;
};

// Central differences on `n_samples` randomly chosen coordinates of `params`
// (all of them if fewer). `loss` is evaluated at the current params.
GradCheckResult FiniteDifferenceCheck(std::span<double> params,
                                      const std::function<double()>& loss,
                                      std::span<const double> analytic, double epsilon,
                                      int n_samples, uint64_t seed);

inline constexpr size_t kGradCheckMaxParams = 5000;

// Compares the model's analytic gradient of the (label-smoothed, dropout-free)
// loss on one example against finite differences.
GradCheckResult GradCheck(const Seq2Seq<double>& model, const Example& sample,
                          double epsilon = 1e-4, int n_samples = 100, uint64_t seed = 0,
                          double label_smoothing = 0.1);

}  // namespace csforge

#endif  // CSFORGE_GRADCHECK_H_
