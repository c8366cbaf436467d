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

#include "csforge/punct.h"

#include <cctype>
#include <cmath>

#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {

StrippedText StripCasePunct(std::string_view text) {
  StrippedText out;
  std::vector<std::string> words;
  for (const auto& tok : SplitWhitespace(text)) {
    std::string word;
    Punct trailing = Punct::kNone;
    for (char c : tok) {
      const auto uc = static_cast<unsigned char>(c);
      if (std::isalnum(uc) || uc >= 128) {
        word += c;
      } else if (c == ',') {
        trailing = Punct::kComma;
      } else if (c == '.') {
        trailing = Punct::kPeriod;
      }
    }
    if (word.empty()) {
      // A detached mark belongs to the preceding word.
      if (!out.labels.empty() && trailing != Punct::kNone)
        out.labels.back().following = trailing;
      continue;
    }
    out.labels.push_back({IsCapitalized(word), trailing});
    words.push_back(ToLowerAscii(word));
  }
  out.bare = JoinWords(words);
  return out;
}

std::string ApplyLabels(std::string_view bare, const std::vector<PunctLabel>& labels) {
  std::vector<std::string> words = SplitWhitespace(bare);
  if (words.size() != labels.size())
    throw PreconditionError("label count does not match word count");
  for (size_t i = 0; i < words.size(); ++i) {
    if (labels[i].capitalize) words[i] = CapitalizeFirst(words[i]);
    if (labels[i].following == Punct::kComma) words[i] += ",";
    if (labels[i].following == Punct::kPeriod) words[i] += ".";
  }
  return JoinWords(words);
}

int Restorer::LabelIndex(const PunctLabel& label) {
  return (label.capitalize ? 3 : 0) + static_cast<int>(label.following);
}

PunctLabel Restorer::LabelAt(int index) {
  return {index >= 3, static_cast<Punct>(index % 3)};
}

std::array<std::string, Restorer::kNumSlots> Restorer::Features(
    const std::vector<std::string>& words, size_t i, Punct prev_punct) {
  return {words[i], i == 0 ? "<s>" : words[i - 1],
          i + 1 == words.size() ? "</s>" : words[i + 1], i == 0 ? "1" : "0",
          std::to_string(static_cast<int>(prev_punct))};
}

Restorer Restorer::Train(const std::vector<std::string>& texts) {
  if (texts.size() < kMinSentences)
    throw ConfigError("restorer training needs at least " +
                      std::to_string(kMinSentences) + " sentences, got " +
                      std::to_string(texts.size()));
  Restorer r;
  for (const auto& text : texts) {
    StrippedText st = StripCasePunct(text);
    const auto words = SplitWhitespace(st.bare);
    Punct prev = Punct::kNone;
    for (size_t i = 0; i < words.size(); ++i) {
      const int label = LabelIndex(st.labels[i]);
      const auto feats = Features(words, i, prev);
      for (int s = 0; s < kNumSlots; ++s) r.slot_counts_[s][feats[s]][label] += 1;
      r.label_counts_[label] += 1;
      r.total_ += 1;
      prev = st.labels[i].following;
    }
  }
  return r;
}

std::vector<PunctLabel> Restorer::Predict(const std::vector<std::string>& words) const {
  std::vector<PunctLabel> out;
  Punct prev = Punct::kNone;
  for (size_t i = 0; i < words.size(); ++i) {
    const auto feats = Features(words, i, prev);
    int best = 0;
    double best_score = -INFINITY;
    for (int l = 0; l < kNumLabels; ++l) {
      double score = std::log((label_counts_[l] + 1.0) / (total_ + kNumLabels));
      for (int s = 0; s < kNumSlots; ++s) {
        const auto& table = slot_counts_[s];
        auto it = table.find(feats[s]);
        const double c = it == table.end() ? 0.0 : static_cast<double>(it->second[l]);
        // +1 for the unseen-value bucket.
        score += std::log((c + 1.0) / (label_counts_[l] + table.size() + 1.0));
      }
      if (score > best_score) {
        best_score = score;
        best = l;
      }
    }
    out.push_back(LabelAt(best));
    prev = out.back().following;
  }
  return out;
}

std::string Restorer::Restore(std::string_view bare_text) const {
  std::vector<std::string> words;
  for (const auto& w : SplitWhitespace(bare_text)) words.push_back(ToLowerAscii(w));
  return ApplyLabels(JoinWords(words), Predict(words));
}

nlohmann::ordered_json Restorer::ToJson() const {
  static const char* kSlotNames[kNumSlots] = {"word", "prev", "next", "first", "prev_punct"};
  nlohmann::ordered_json j;
  j["type"] = "count-restorer/1";
  auto labels = nlohmann::ordered_json::array();
  for (int l = 0; l < kNumLabels; ++l) {
    PunctLabel p = LabelAt(l);
    static const char* kPunct[3] = {"none", "comma", "period"};
    labels.push_back({{"capitalize", p.capitalize},
                      {"following", kPunct[static_cast<int>(p.following)]}});
  }
  j["labels"] = labels;
  j["total"] = total_;
  j["label_counts"] = label_counts_;
  nlohmann::ordered_json slots;
  for (int s = 0; s < kNumSlots; ++s) {
    nlohmann::ordered_json table = nlohmann::ordered_json::object();
    for (const auto& [feat, counts] : slot_counts_[s]) table[feat] = counts;
    slots[kSlotNames[s]] = table;
  }
  j["features"] = slots;
  return j;
}

Restorer Restorer::FromJson(const nlohmann::json& j) {
  static const char* kSlotNames[kNumSlots] = {"word", "prev", "next", "first", "prev_punct"};
  Restorer r;
  try {
    r.total_ = j.at("total").get<long>();
    r.label_counts_ = j.at("label_counts").get<Counts>();
    for (int s = 0; s < kNumSlots; ++s)
      for (const auto& [feat, counts] : j.at("features").at(kSlotNames[s]).items())
        r.slot_counts_[s][feat] = counts.get<Counts>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed restorer: ") + e.what());
  }
  return r;
}

}  // namespace csforge
