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

#ifndef CSFORGE_VOCAB_H_
#define CSFORGE_VOCAB_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csforge/corpus.h"
#include "json.hpp"

namespace csforge {

// Closed target vocabulary: specials, punctuation marks, and every TGT word
// in lowercase and capitalized form.
class TargetVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  TargetVocab() = default;
  explicit TargetVocab(std::vector<std::string> tokens);
  static TargetVocab FromLexicon(const Lexicon& lexicon);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int Id(std::string_view token) const;  // kUnk when unknown
  bool IsPunct(int id) const;

  // Punctuation is split off words; no BOS/EOS added.
  std::vector<int> Encode(std::string_view text) const;
  // Stops at EOS; punctuation attaches to the left neighbour.
  std::string Decode(const std::vector<int>& ids) const;

  nlohmann::ordered_json ToJson() const;
  static TargetVocab FromJson(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace csforge

#endif  // CSFORGE_VOCAB_H_
