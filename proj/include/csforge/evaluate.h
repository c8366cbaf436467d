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

#ifndef CSFORGE_EVALUATE_H_
#define CSFORGE_EVALUATE_H_

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace csforge {

// Unit-cost Levenshtein distance over tokens.
int EditDistance(const std::vector<std::string>& ref,
                 const std::vector<std::string>& hyp);

// Summed edit distance over whitespace tokens / total reference words.
double Wer(const std::vector<std::string>& references,
           const std::vector<std::string>& hypotheses);

// Every ASCII punctuation character becomes its own token; then split on
// whitespace. Case is preserved.
std::vector<std::string> BleuTokenize(std::string_view text);

struct BleuResult {
  double score = 0.0;  // [0, 100]
  std::vector<double> precisions;
  double brevity_penalty = 0.0;
  long hyp_len = 0;
  long ref_len = 0;
  std::string note;
};

// Unsmoothed corpus BLEU: p_n = clipped matches / max(1, hyp n-grams),
// geometric mean over n = 1..max_n, times the brevity penalty.
BleuResult CorpusBleu(const std::vector<std::string>& references,
                      const std::vector<std::string>& hypotheses, int max_n = 4);

// Removes . , ; : ! ? " ( ) « » and standalone hyphens, collapses whitespace.
std::string StripPunct(std::string_view text);

enum class TestsetKind { kAsr, kSt, kCs };
const char* TestsetKindName(TestsetKind kind);
TestsetKind ParseTestsetKind(std::string_view name);

struct Testset {
  std::string name;
  TestsetKind kind = TestsetKind::kSt;
  std::vector<std::string> ids;
  std::vector<std::string> references;
};

// Hypotheses of one system on one test set, keyed by utterance id.
struct SystemOutput {
  std::string system;
  std::string testset;
  std::map<std::string, std::string> hypotheses;
};

struct EvalFlags {
  bool no_punct_bleu = true;  // add BLEU-no-punct on code-switching sets
};

struct EvalCell {
  std::string system;
  std::string testset;
  std::string metric;
  std::optional<double> value;  // nullopt: decode output missing
  int n_segments = 0;
};

struct EvalReport {
  std::vector<std::string> systems;
  std::vector<std::string> testsets;
  std::vector<EvalCell> cells;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> notes;

  const EvalCell* Find(std::string_view system, std::string_view testset,
                       std::string_view metric) const;
  nlohmann::ordered_json ToJson() const;
  // Fixed-width table, one row per system, one column per (testset, metric).
  std::string FormatTable() const;
};

// WER on ASR sets, BLEU on ST and CS sets, BLEU-no-punct on CS sets when
// flagged. Missing outputs produce explicit gaps.
// Pairs rejected by `applicable` get no cell and no note.
EvalReport EvaluateSuite(
    const std::vector<std::string>& systems, const std::vector<SystemOutput>& outputs,
    const std::vector<Testset>& testsets, const EvalFlags& flags,
    const std::function<bool(const std::string& system, const std::string& testset)>&
        applicable = {});

}  // namespace csforge

#endif  // CSFORGE_EVALUATE_H_
