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

#ifndef CSFORGE_PUNCT_H_
#define CSFORGE_PUNCT_H_

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace csforge {

enum class Punct { kNone = 0, kComma = 1, kPeriod = 2 };

struct PunctLabel {
  bool capitalize = false;
  Punct following = Punct::kNone;
  bool operator==(const PunctLabel&) const = default;
};

struct StrippedText {
  std::string bare;
  std::vector<PunctLabel> labels;  // one per bare word
};

// Lowercases, removes punctuation and records the per-word labels.
StrippedText StripCasePunct(std::string_view text);
// Inverse of StripCasePunct for texts that only use commas and full stops.
std::string ApplyLabels(std::string_view bare, const std::vector<PunctLabel>& labels);

// Casing and punctuation restorer: a naive-Bayes style context-window
// classifier estimated by counting with add-one smoothing. Features are the
// current, previous and next word, a first-position flag and the previous
// word's punctuation.
class Restorer {
 public:
  static constexpr int kNumLabels = 6;
  static constexpr size_t kMinSentences = 100;

  static Restorer Train(const std::vector<std::string>& texts);

  std::vector<PunctLabel> Predict(const std::vector<std::string>& words) const;
  std::string Restore(std::string_view bare_text) const;

  nlohmann::ordered_json ToJson() const;
  static Restorer FromJson(const nlohmann::json& j);

  long trained_words() const { return total_; }

 private:
  using Counts = std::array<long, kNumLabels>;
  enum Slot { kWord, kPrev, kNext, kFirst, kPrevPunct, kNumSlots };

  static int LabelIndex(const PunctLabel& label);
  static PunctLabel LabelAt(int index);
  static std::array<std::string, kNumSlots> Features(
      const std::vector<std::string>& words, size_t i, Punct prev_punct);

  Counts label_counts_{};
  std::array<std::map<std::string, Counts>, kNumSlots> slot_counts_;
  long total_ = 0;
};

}  // namespace csforge

#endif  // CSFORGE_PUNCT_H_
