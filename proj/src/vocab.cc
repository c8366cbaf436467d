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

#include "csforge/vocab.h"

#include <cctype>

#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {

namespace {
const char* const kSpecials[] = {"<pad>", "<s>", "</s>", "<unk>"};
const char* const kMarks[] = {",", "."};
}  // namespace

TargetVocab::TargetVocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 4) throw ConfigError("target vocabulary is missing specials");
  for (int i = 0; i < 4; ++i)
    if (tokens_[i] != kSpecials[i]) throw ConfigError("target vocabulary specials out of order");
  for (int i = 0; i < size(); ++i)
    if (!index_.emplace(tokens_[i], i).second)
      throw ConfigError("duplicate target token '" + tokens_[i] + "'");
}

TargetVocab TargetVocab::FromLexicon(const Lexicon& lexicon) {
  std::vector<std::string> tokens(std::begin(kSpecials), std::end(kSpecials));
  tokens.insert(tokens.end(), std::begin(kMarks), std::end(kMarks));
  for (const auto& w : lexicon.tgt_words()) {
    tokens.push_back(w);
    tokens.push_back(CapitalizeFirst(w));
  }
  return TargetVocab(std::move(tokens));
}

int TargetVocab::Id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool TargetVocab::IsPunct(int id) const {
  const std::string& t = tokens_.at(id);
  return t.size() == 1 && std::ispunct(static_cast<unsigned char>(t[0]));
}

std::vector<int> TargetVocab::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : SplitWhitespace(text)) {
    size_t b = 0, e = tok.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) {
      ids.push_back(Id(tok.substr(b, 1)));
      ++b;
    }
    size_t w_end = e;
    while (w_end > b && std::ispunct(static_cast<unsigned char>(tok[w_end - 1]))) --w_end;
    if (w_end > b) ids.push_back(Id(tok.substr(b, w_end - b)));
    for (size_t k = w_end; k < e; ++k) ids.push_back(Id(tok.substr(k, 1)));
  }
  return ids;
}

std::string TargetVocab::Decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    const std::string& t = tokens_.at(id);
    if (!IsPunct(id) && !out.empty()) out += ' ';
    out += t;
  }
  return out;
}

nlohmann::ordered_json TargetVocab::ToJson() const { return tokens_; }

TargetVocab TargetVocab::FromJson(const nlohmann::json& j) {
  return TargetVocab(j.get<std::vector<std::string>>());
}

}  // namespace csforge
