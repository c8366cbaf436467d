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

#include "csforge/manifest.h"

#include <filesystem>

#include <gtest/gtest.h>

#include "csforge/errors.h"

namespace csforge {
namespace {

namespace fs = std::filesystem;

TEST(ManifestTest, StringRoundTrip) {
  CorpusConfig c;
  c.lexicon_size = 20;
  c.n_asr = 5;
  c.n_st = 5;
  c.n_dev = 2;
  c.n_test = 3;
  Lexicon lex = BuildLexicon(20, 1);
  CorpusBundle b = GenerateCorpus(lex, c, 1);
  const std::string text = ManifestToString(b.st);
  Manifest back = ManifestFromString(text);
  EXPECT_EQ(ManifestToString(back), text);
  EXPECT_EQ(back.meta["part"], "train_st");
  const std::string ptext = ParallelSetToString(b.test_parallel);
  EXPECT_EQ(ParallelSetToString(ParallelSetFromString(ptext)), ptext);
}

TEST(ManifestTest, RecordLayout) {
  Utterance u;
  u.id = "x";
  u.frames = {3, 4, 1, 2};
  u.lid_spans = {{0, 2, Language::kTgt}, {2, 4, Language::kSrc}};
  u.transcript = "t0 s0";
  u.target = "T0.";
  u.kind = UtteranceKind::kMixed;
  EXPECT_EQ(UtteranceToJson(u).dump(),
            R"({"id":"x","frames":[3,4,1,2],"lid_spans":[[0,2,"TGT"],[2,4,"SRC"]],)"
            R"("transcript":"t0 s0","target":"T0.","kind":"mixed"})");
}

TEST(ManifestTest, FilesAndErrors) {
  const fs::path dir = fs::temp_directory_path() / "csforge_manifest_test";
  fs::remove_all(dir);
  Lexicon lex = BuildLexicon(15, 2);
  WriteLexicon(lex, dir / "a" / "lexicon.json");
  EXPECT_EQ(ReadLexicon(dir / "a" / "lexicon.json").tgt_words(), lex.tgt_words());
  EXPECT_THROW(ReadManifest(dir / "missing.jsonl"), MissingArtifactError);
  EXPECT_THROW(ManifestFromString("{\"meta\":{}}\nnot json\n"), ConfigError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace csforge
