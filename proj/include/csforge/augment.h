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

#ifndef CSFORGE_AUGMENT_H_
#define CSFORGE_AUGMENT_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csforge/corpus.h"
#include "json.hpp"

namespace csforge {

struct DAConfig {
  double p_multi = 0.0;      // fraction of outputs with >= 2 input languages
  double one_switch = 0.8;   // share of multi utterances built from 2 parts
  double two_switch = 0.2;   // share built from 3 parts
  int max_frames = kDefaultMaxFrames;
  int max_retries = 100;
  uint64_t seed = 0;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static DAConfig FromJson(const nlohmann::json& j);
};

// Concatenates frames, shifted lid spans, transcripts and targets. The parts
// must cover at least two languages and fit into max_frames.
Utterance ConcatUtterances(std::span<const Utterance> parts,
                           int max_frames = kDefaultMaxFrames);

// Deterministic quota selection: exactly round(p_multi * N) outputs are
// multi-language, N = |asr| + |st|.
Manifest ApplyDA(const Manifest& asr, const Manifest& st, const DAConfig& config);

// Positions where a reader might switch language: after a comma, a full stop
// or the conjunction word.
struct SwitchPointRule {
  std::string conjunction;
  bool after_comma = true;
  bool after_period = true;
};

std::vector<std::string> SplitAtSwitchPoints(std::string_view text,
                                             const SwitchPointRule& rule);

struct CsTestsetConfig {
  int min_sentences = 2;
  int max_sentences = 4;
  int n_utterances = 284;
  SynthesisOptions synth;
  int max_frames = kDefaultMaxFrames;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static CsTestsetConfig FromJson(const nlohmann::json& j);
};

// Inter-sentential code-switching test set: sentences are joined, split at
// switch points and read in alternating languages.
Manifest BuildCsTestset(const ParallelSet& parallel, const Lexicon& lexicon,
                        const CsTestsetConfig& config, uint64_t seed);

}  // namespace csforge

#endif  // CSFORGE_AUGMENT_H_
