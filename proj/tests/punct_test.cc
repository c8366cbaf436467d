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

#include <gtest/gtest.h>

#include "csforge/corpus.h"
#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {
namespace {

TEST(StripCasePunctTest, SpecExamples) {
  StrippedText s = StripCasePunct("T005 t012, t007.");
  EXPECT_EQ(s.bare, "t005 t012 t007");
  ASSERT_EQ(s.labels.size(), 3u);
  EXPECT_EQ(s.labels[0], (PunctLabel{true, Punct::kNone}));
  EXPECT_EQ(s.labels[1], (PunctLabel{false, Punct::kComma}));
  EXPECT_EQ(s.labels[2], (PunctLabel{false, Punct::kPeriod}));
  StrippedText e = StripCasePunct("");
  EXPECT_EQ(e.bare, "");
  EXPECT_TRUE(e.labels.empty());
}

std::vector<std::string> Sentences(int n, uint64_t seed) {
  CorpusConfig c;
  c.lexicon_size = 100;
  c.n_asr = n;
  c.n_st = 0;
  c.n_dev = 0;
  c.n_test = 0;
  Lexicon lex = BuildLexicon(c.lexicon_size, 3);
  std::vector<std::string> out;
  for (const auto& u : GenerateCorpus(lex, c, seed).asr.utterances) out.push_back(u.target);
  return out;
}

TEST(StripCasePunctTest, RoundTripOnCorpusTargets) {
  for (const auto& t : Sentences(300, 1)) {
    StrippedText s = StripCasePunct(t);
    EXPECT_EQ(ApplyLabels(s.bare, s.labels), t);
  }
}

TEST(RestorerTest, TooSmallCorpus) {
  EXPECT_THROW(Restorer::Train(Sentences(10, 1)), ConfigError);
}

TEST(RestorerTest, HeldOutAccuracyAndInvariants) {
  Restorer r = Restorer::Train(Sentences(2000, 1));
  long correct = 0, total = 0;
  for (const auto& t : Sentences(300, 2)) {
    StrippedText gold = StripCasePunct(t);
    const auto pred = r.Predict(SplitWhitespace(gold.bare));
    ASSERT_EQ(pred.size(), gold.labels.size());
    for (size_t i = 0; i < pred.size(); ++i, ++total)
      if (pred[i] == gold.labels[i]) ++correct;
    const std::string restored = r.Restore(gold.bare);
    // Restoration never changes the bare word sequence.
    EXPECT_EQ(StripCasePunct(restored).bare, gold.bare);
    EXPECT_EQ(SplitWhitespace(restored).size(), SplitWhitespace(gold.bare).size());
    for (char c : restored)
      EXPECT_TRUE(std::isalnum(static_cast<unsigned char>(c)) || c == ' ' || c == ',' ||
                  c == '.');
  }
  EXPECT_GE(static_cast<double>(correct) / total, 0.9);
}

TEST(RestorerTest, CapitalizesFirstWordAndIsDeterministic) {
  const auto corpus = Sentences(500, 4);
  Restorer a = Restorer::Train(corpus);
  Restorer b = Restorer::Train(corpus);
  EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
  for (const std::string bare : {"t001 t002 t003", "t099", "t050 t050 t050 t050"})
    EXPECT_TRUE(IsCapitalized(a.Restore(bare))) << bare;
  EXPECT_EQ(a.Restore(""), "");
  Restorer c = Restorer::FromJson(nlohmann::json::parse(a.ToJson().dump()));
  EXPECT_EQ(c.Restore("t001 t002 t003 t004"), a.Restore("t001 t002 t003 t004"));
}

}  // namespace
}  // namespace csforge
