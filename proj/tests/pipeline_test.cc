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

#include "csforge/pipeline.h"

#include <random>

#include <gtest/gtest.h>

#include "csforge/errors.h"

namespace csforge {
namespace {

std::vector<int> RandomFrames(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(1, AcousticAlphabet::kNumSymbols - 1);
  std::vector<int> f(n);
  for (int& x : f) x = d(rng);
  return f;
}

Utterance Make(const std::vector<std::pair<int, Language>>& spans, uint64_t seed) {
  Utterance u;
  u.id = "u";
  int pos = 0;
  for (const auto& [len, lang] : spans) {
    u.lid_spans.push_back({pos, pos + len, lang});
    pos += len;
  }
  u.frames = RandomFrames(pos, seed);
  bool mixed = false;
  for (const auto& s : u.lid_spans) mixed |= s.language != u.lid_spans[0].language;
  u.kind = mixed ? UtteranceKind::kMixed
                 : (spans[0].second == Language::kTgt ? UtteranceKind::kAsr : UtteranceKind::kSt);
  return u;
}

struct Models {
  Models() {
    TargetVocab v = TargetVocab::FromLexicon(BuildLexicon(10, 1));
    ModelConfig mc;
    mc.embed_dim = 8;
    mc.hidden_dim = 8;
    mc.frame_stack = 3;
    asr = Seq2SeqModel::Init(mc, v, 11);
    st = Seq2SeqModel::Init(mc, v, 12);
    last = Seq2SeqModel::Init(mc, v, 13);
  }
  Seq2SeqModel asr, st, last;
};

TEST(SegmentTest, SingleSpan) {
  Utterance u = Make({{900, Language::kTgt}}, 1);
  auto segs = SegmentByLid(u);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].start, 0);
  EXPECT_EQ(segs[0].end, 900);
  EXPECT_EQ(segs[0].frames, u.frames);
}

TEST(SegmentTest, TwoSpansPartitionFrames) {
  Utterance u = Make({{420, Language::kTgt}, {730, Language::kSrc}}, 2);
  auto segs = SegmentByLid(u);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].end, 420);
  EXPECT_EQ(segs[1].start, 420);
  EXPECT_EQ(segs[1].end, 1150);
  EXPECT_EQ(segs[0].language, Language::kTgt);
  EXPECT_EQ(segs[1].language, Language::kSrc);
  std::vector<int> cat = segs[0].frames;
  cat.insert(cat.end(), segs[1].frames.begin(), segs[1].frames.end());
  EXPECT_EQ(cat, u.frames);
}

TEST(SegmentTest, RandomPartitions) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<int, Language>> spans;
    const int k = 1 + static_cast<int>(rng() % 5);
    Language lang = rng() % 2 ? Language::kSrc : Language::kTgt;
    for (int i = 0; i < k; ++i, lang = Other(lang))
      spans.push_back({1 + static_cast<int>(rng() % 40), lang});
    Utterance u = Make(spans, trial);
    auto segs = SegmentByLid(u);
    ASSERT_EQ(segs.size(), spans.size());
    std::vector<int> cat;
    for (size_t i = 0; i < segs.size(); ++i) {
      EXPECT_EQ(segs[i].language, spans[i].second);
      EXPECT_EQ(segs[i].end - segs[i].start, spans[i].first);
      cat.insert(cat.end(), segs[i].frames.begin(), segs[i].frames.end());
    }
    EXPECT_EQ(cat, u.frames);
  }
}

TEST(SegmentTest, InvalidSpansThrow) {
  Utterance u = Make({{10, Language::kTgt}, {10, Language::kSrc}}, 3);
  u.lid_spans[1].start = 11;
  EXPECT_THROW(SegmentByLid(u), PreconditionError);
  u = Make({{10, Language::kTgt}}, 3);
  u.lid_spans.clear();
  EXPECT_THROW(SegmentByLid(u), PreconditionError);
}

TEST(PipelineTest, SingleSpanIdentities) {
  Models m;
  Utterance tgt = Make({{60, Language::kTgt}}, 4);
  Utterance src = Make({{60, Language::kSrc}}, 5);
  EXPECT_EQ(PipelineDecode(tgt, m.asr, m.st), DecodeGreedy(m.asr, tgt.frames));
  EXPECT_EQ(PipelineDecode(src, m.asr, m.st), DecodeGreedy(m.st, src.frames));
  EXPECT_EQ(GivenLidDecode(tgt, m.last), LastDecode(tgt, m.last));
  EXPECT_EQ(GivenLidDecode(src, m.last), LastDecode(src, m.last));
  EXPECT_EQ(LastDecode(src, m.last), DecodeGreedy(m.last, src.frames));
}

TEST(PipelineTest, TwoSpansJoinWithOneSpace) {
  Models m;
  Utterance u = Make({{42, Language::kTgt}, {73, Language::kSrc}}, 6);
  const std::vector<int> a(u.frames.begin(), u.frames.begin() + 42);
  const std::vector<int> b(u.frames.begin() + 42, u.frames.end());
  EXPECT_EQ(PipelineDecode(u, m.asr, m.st),
            DecodeGreedy(m.asr, a) + " " + DecodeGreedy(m.st, b));
  EXPECT_EQ(GivenLidDecode(u, m.last),
            DecodeGreedy(m.last, a) + " " + DecodeGreedy(m.last, b));
  auto r = RoutePipeline(u, m.asr, m.st);
  ASSERT_EQ(r.segments.size(), 2u);
  EXPECT_EQ(r.segments[0].system, SystemKind::kAsr);
  EXPECT_EQ(r.segments[1].system, SystemKind::kSt);
}

TEST(PipelineTest, RoutingDependsOnlyOnLid) {
  Models m;
  Utterance u = Make({{30, Language::kSrc}, {25, Language::kTgt}, {40, Language::kSrc}}, 7);
  Utterance v = u;
  v.transcript = "completely different";
  v.target = "Other.";
  v.id = "v";
  EXPECT_EQ(PipelineDecode(u, m.asr, m.st), PipelineDecode(v, m.asr, m.st));
  auto r = RouteGivenLid(u, m.last);
  for (const auto& s : r.segments) EXPECT_EQ(s.system, SystemKind::kLast);
  // Joins equal segments minus one whenever no segment decodes to "".
  const std::string joined = r.Joined();
  size_t spaces = 0, inner = 0;
  for (char c : joined) spaces += c == ' ';
  for (const auto& s : r.segments)
    for (char c : s.text) inner += c == ' ';
  EXPECT_EQ(spaces - inner, r.segments.size() - 1);
}

TEST(PipelineTest, KindNames) {
  EXPECT_STREQ(SystemKindName(SystemKind::kAsr), "ASR");
  EXPECT_STREQ(SystemKindName(SystemKind::kSt), "ST");
  EXPECT_STREQ(SystemKindName(SystemKind::kLast), "LAST");
}

}  // namespace
}  // namespace csforge
