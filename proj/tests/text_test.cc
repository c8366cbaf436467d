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

#include "csforge/text.h"

#include <set>

#include <gtest/gtest.h>

namespace csforge {
namespace {

TEST(TextTest, SplitAndJoin) {
  EXPECT_EQ(SplitWhitespace("  a  b\tc\n"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(SplitWhitespace("   ").empty());
  EXPECT_EQ(JoinWords({"a", "b", "c"}), "a b c");
  EXPECT_EQ(JoinWords({"a", "b"}, "+"), "a+b");
  EXPECT_EQ(JoinWords({}), "");
}

TEST(TextTest, Casing) {
  EXPECT_EQ(ToLowerAscii("T005 S001"), "t005 s001");
  EXPECT_EQ(CapitalizeFirst("t005"), "T005");
  EXPECT_EQ(CapitalizeFirst(""), "");
  EXPECT_TRUE(IsCapitalized("T005"));
  EXPECT_FALSE(IsCapitalized("t005"));
}

TEST(TextTest, SeedsAreDistinctAndStable) {
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 1000; ++i) seen.insert(DeriveSeed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(DeriveSeed(42, 7), DeriveSeed(42, 7));
  EXPECT_NE(DeriveSeed(42, 7), DeriveSeed(43, 7));
}

TEST(TextTest, HashHex) {
  // FNV-1a 64 of the empty string is the offset basis.
  EXPECT_EQ(HashHex(""), "cbf29ce484222325");
  EXPECT_EQ(HashHex("a"), "af63dc4c8601ec8c");
  EXPECT_NE(HashHex("ab"), HashHex("ba"));
}

}  // namespace
}  // namespace csforge
