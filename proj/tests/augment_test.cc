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

#include "csforge/augment.h"

#include <set>

#include <gtest/gtest.h>

#include "csforge/errors.h"
#include "csforge/manifest.h"
#include "csforge/text.h"

namespace csforge {
namespace {

Utterance Mono(const std::string& id, int frames, Language lang, const std::string& target) {
  Utterance u;
  u.id = id;
  u.frames = std::vector<int>(frames, 2);
  u.lid_spans = {{0, frames, lang}};
  u.kind = lang == Language::kTgt ? UtteranceKind::kAsr : UtteranceKind::kSt;
  u.target = target;
  u.transcript = target;
  return u;
}

TEST(ConcatTest, SpecExamples) {
  std::vector<Utterance> parts = {Mono("a", 420, Language::kTgt, "T005 t012."),
                                  Mono("b", 730, Language::kSrc, "T031 t044.")};
  Utterance u = ConcatUtterances(parts);
  EXPECT_EQ(u.frames.size(), 1150u);
  ASSERT_EQ(u.lid_spans.size(), 2u);
  EXPECT_EQ(u.lid_spans[0].end, 420);
  EXPECT_EQ(u.lid_spans[1].start, 420);
  EXPECT_EQ(u.lid_spans[1].end, 1150);
  EXPECT_EQ(u.lid_spans[1].language, Language::kSrc);
  EXPECT_EQ(u.target, "T005 t012. T031 t044.");
  EXPECT_EQ(u.kind, UtteranceKind::kMixed);
  EXPECT_EQ(u.id, "a+b");
}

TEST(ConcatTest, Errors) {
  std::vector<Utterance> same = {Mono("a", 10, Language::kTgt, "T001."),
                                 Mono("b", 10, Language::kTgt, "T002.")};
  EXPECT_THROW(ConcatUtterances(same), PreconditionError);
  std::vector<Utterance> one = {Mono("a", 10, Language::kTgt, "T001.")};
  EXPECT_THROW(ConcatUtterances(one), PreconditionError);
  std::vector<Utterance> big = {Mono("a", 1500, Language::kTgt, "T001."),
                                Mono("b", 600, Language::kSrc, "T002.")};
  EXPECT_THROW(ConcatUtterances(big), BudgetError);
}

struct Pools {
  Lexicon lexicon;
  CorpusBundle bundle;
};

const Pools& SharedPools() {
  static const Pools pools = [] {
    CorpusConfig c;
    c.n_asr = 1000;
    c.n_st = 1000;
    c.n_dev = 0;
    c.n_test = 200;
    Pools p{BuildLexicon(c.lexicon_size, 21), {}};
    p.bundle = GenerateCorpus(p.lexicon, c, 21);
    return p;
  }();
  return pools;
}

TEST(ApplyDATest, QuotaAndSwitchSplit) {
  const auto& b = SharedPools().bundle;
  const size_t n = b.asr.size() + b.st.size();
  for (double p : {0.05, 0.15, 0.75}) {
    DAConfig cfg;
    cfg.p_multi = p;
    cfg.seed = 4;
    Manifest out = ApplyDA(b.asr, b.st, cfg);
    ASSERT_EQ(out.size(), n);
    const long m = std::lround(p * static_cast<double>(n));
    long multi = 0, one = 0, two = 0;
    std::set<std::string> ids;
    for (const auto& u : out.utterances) {
      ASSERT_NO_THROW(ValidateUtterance(u, 2000));
      ASSERT_TRUE(ids.insert(u.id).second) << u.id;
      if (u.kind != UtteranceKind::kMixed) continue;
      ++multi;
      (u.lid_spans.size() == 2 ? one : two) += 1;
      for (size_t k = 1; k < u.lid_spans.size(); ++k)
        EXPECT_NE(u.lid_spans[k].language, u.lid_spans[k - 1].language);
    }
    EXPECT_EQ(multi, m) << "p=" << p;
    EXPECT_EQ(two, static_cast<long>(std::floor(0.2 * m + 1e-9)));
    EXPECT_EQ(one, m - two);
    EXPECT_EQ(out.meta["achieved_multi"].get<long>(), m);
  }
}

TEST(ApplyDATest, SpecCountExample) {
  // N = 1000, p = 0.15 -> 150 multi: 120 one-switch, 30 two-switch.
  const auto& b = SharedPools().bundle;
  Manifest asr, st;
  asr.utterances.assign(b.asr.utterances.begin(), b.asr.utterances.begin() + 500);
  st.utterances.assign(b.st.utterances.begin(), b.st.utterances.begin() + 500);
  DAConfig cfg;
  cfg.p_multi = 0.15;
  Manifest out = ApplyDA(asr, st, cfg);
  EXPECT_EQ(out.meta["one_switch"].get<long>(), 120);
  EXPECT_EQ(out.meta["two_switch"].get<long>(), 30);
}

TEST(ApplyDATest, ZeroIsShuffledUnion) {
  const auto& b = SharedPools().bundle;
  DAConfig cfg;
  cfg.seed = 8;
  Manifest out = ApplyDA(b.asr, b.st, cfg);
  std::multiset<std::string> got, want;
  for (const auto& u : out.utterances) got.insert(UtteranceToJson(u).dump());
  for (const auto* m : {&b.asr, &b.st})
    for (const auto& u : m->utterances) want.insert(UtteranceToJson(u).dump());
  EXPECT_EQ(got, want);
  EXPECT_NE(out.utterances[0].id, b.asr.utterances[0].id);
}

TEST(ApplyDATest, ByteIdenticalForSameSeed) {
  const auto& b = SharedPools().bundle;
  DAConfig cfg;
  cfg.p_multi = 0.3;
  cfg.seed = 17;
  EXPECT_EQ(ManifestToString(ApplyDA(b.asr, b.st, cfg)),
            ManifestToString(ApplyDA(b.asr, b.st, cfg)));
  DAConfig other = cfg;
  other.seed = 18;
  EXPECT_NE(ManifestToString(ApplyDA(b.asr, b.st, cfg)),
            ManifestToString(ApplyDA(b.asr, b.st, other)));
}

TEST(ApplyDATest, BudgetOverflowIsRetriedOrSkipped) {
  Manifest asr, st;
  for (int i = 0; i < 20; ++i) {
    asr.utterances.push_back(Mono("a" + std::to_string(i), 1200, Language::kTgt, "T001."));
    st.utterances.push_back(Mono("s" + std::to_string(i), 1200, Language::kSrc, "T002."));
  }
  DAConfig cfg;
  cfg.p_multi = 0.5;
  cfg.max_retries = 3;
  Manifest out = ApplyDA(asr, st, cfg);
  EXPECT_EQ(out.size(), 40u);
  EXPECT_EQ(out.meta["achieved_multi"].get<long>(), 0);
  EXPECT_EQ(out.meta["skipped_combinations"].get<long>(), 20);
  EXPECT_DOUBLE_EQ(out.meta["achieved_fraction"].get<double>(), 0.0);
}

TEST(DAConfigTest, Validation) {
  DAConfig c;
  c.p_multi = 0.8;
  EXPECT_THROW(c.Validate(), ConfigError);
  c.p_multi = 0.1;
  c.one_switch = 0.7;
  EXPECT_THROW(c.Validate(), ConfigError);
  Manifest empty;
  DAConfig ok;
  EXPECT_THROW(ApplyDA(empty, SharedPools().bundle.st, ok), PreconditionError);
}

TEST(SwitchPointTest, SpecExamples) {
  SwitchPointRule rule{"t050"};
  EXPECT_EQ(SplitAtSwitchPoints("T005 t012, t007 t031.", rule),
            (std::vector<std::string>{"T005 t012,", "t007 t031."}));
  EXPECT_EQ(SplitAtSwitchPoints("t001 t050 t002", rule),
            (std::vector<std::string>{"t001 t050", "t002"}));
  EXPECT_EQ(SplitAtSwitchPoints("t001 t002 t003", rule),
            (std::vector<std::string>{"t001 t002 t003"}));
  EXPECT_EQ(SplitAtSwitchPoints("T050 t001. T002", rule),
            (std::vector<std::string>{"T050", "t001.", "T002"}));
}

TEST(SwitchPointTest, LeftInverseOfJoin) {
  const auto& p = SharedPools();
  SwitchPointRule rule{p.lexicon.conjunction()};
  for (const auto& s : p.bundle.test_parallel.sentences) {
    const auto parts = SplitAtSwitchPoints(s.target, rule);
    EXPECT_EQ(JoinWords(parts), JoinWords(SplitWhitespace(s.target)));
    for (const auto& part : parts) EXPECT_FALSE(part.empty());
  }
}

TEST(CsTestsetTest, ConstructionProperties) {
  const auto& p = SharedPools();
  CsTestsetConfig cfg;
  cfg.n_utterances = 284;
  Manifest cs = BuildCsTestset(p.bundle.test_parallel, p.lexicon, cfg, 5);
  ASSERT_EQ(cs.size(), 284u);
  int src_first = 0;
  for (const auto& u : cs.utterances) {
    ASSERT_NO_THROW(ValidateUtterance(u, 2000));
    EXPECT_EQ(u.kind, UtteranceKind::kMixed);
    ASSERT_GE(u.lid_spans.size(), 2u);
    for (size_t k = 1; k < u.lid_spans.size(); ++k)
      EXPECT_NE(u.lid_spans[k].language, u.lid_spans[k - 1].language);
    if (u.lid_spans[0].language == Language::kSrc) ++src_first;
    // Spoken parts reproduce the bare target once SRC parts are translated.
    const auto spoken = SplitWhitespace(u.transcript);
    std::vector<std::string> tgt_words;
    std::vector<std::string> run;
    Language lang = u.lid_spans[0].language;
    auto flush = [&] {
      auto t = lang == Language::kSrc ? TranslateOracle(run, p.lexicon) : run;
      tgt_words.insert(tgt_words.end(), t.begin(), t.end());
      run.clear();
    };
    for (const auto& w : spoken) {
      const Language wl = w[0] == 's' ? Language::kSrc : Language::kTgt;
      if (wl != lang) {
        flush();
        lang = wl;
      }
      run.push_back(w);
    }
    flush();
    EXPECT_EQ(tgt_words, BareWords(u.target)) << u.id;
  }
  EXPECT_EQ(src_first, 142);
  EXPECT_EQ(cs.meta["src_first"].get<int>(), 142);
  EXPECT_EQ(ManifestToString(cs),
            ManifestToString(BuildCsTestset(p.bundle.test_parallel, p.lexicon, cfg, 5)));
}

}  // namespace
}  // namespace csforge
