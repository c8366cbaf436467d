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

#include "csforge/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "csforge/errors.h"

namespace csforge {

double RelativeError(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult FiniteDifferenceCheck(std::span<double> params,
                                      const std::function<double()>& loss,
                                      std::span<const double> analytic, double epsilon,
                                      int n_samples, uint64_t seed) {
  if (!(epsilon > 0.0)) throw PreconditionError("gradient check epsilon must be > 0");
  if (analytic.size() != params.size())
    throw PreconditionError("analytic gradient size does not match parameters");
  std::vector<size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  if (n_samples >= 0 && static_cast<size_t>(n_samples) < idx.size()) idx.resize(n_samples);

  GradCheckResult r;
  for (size_t i : idx) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = loss();
    params[i] = saved - epsilon;
    const double down = loss();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = RelativeError(analytic[i], numeric);
    if (err > r.max_rel_error || r.worst_index < 0) {
      r.max_rel_error = std::max(r.max_rel_error, err);
      r.worst_index = static_cast<int>(i);
    }
    ++r.checked;
  }
  return r;
}

GradCheckResult GradCheck(const Seq2Seq<double>& model, const Example& sample,
                          double epsilon, int n_samples, uint64_t seed,
                          double label_smoothing) {
  if (!(epsilon > 0.0)) throw PreconditionError("gradient check epsilon must be > 0");
  if (model.num_params() > kGradCheckMaxParams)
    throw PreconditionError("gradient check model has " +
                            std::to_string(model.num_params()) + " parameters, limit is " +
                            std::to_string(kGradCheckMaxParams));
  Seq2Seq<double> work = model;
  const std::vector<Example> batch = {sample};
  ForwardOptions opts;
  opts.label_smoothing = label_smoothing;
  ParamVector<double> analytic(work.num_params(), 0.0);
  work.ForwardBackward(batch, opts, &analytic);
  auto loss = [&]() { return work.ForwardBackward(batch, opts, nullptr).objective; };
  return FiniteDifferenceCheck(work.params(), loss, analytic, epsilon, n_samples, seed);
}

}  // namespace csforge
