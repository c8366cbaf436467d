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

#ifndef CSFORGE_TEXT_H_
#define CSFORGE_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace csforge {

std::vector<std::string> SplitWhitespace(std::string_view text);
std::string JoinWords(const std::vector<std::string>& words,
                      std::string_view sep = " ");
std::string ToLowerAscii(std::string_view text);
std::string CapitalizeFirst(std::string_view word);
bool IsCapitalized(std::string_view word);

// splitmix64 finalizer; used to derive independent per-item seeds.
uint64_t MixSeed(uint64_t x);
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

// Hex digest (FNV-1a, 64 bit) used for config echoes.
std::string HashHex(std::string_view data);

}  // namespace csforge

#endif  // CSFORGE_TEXT_H_
