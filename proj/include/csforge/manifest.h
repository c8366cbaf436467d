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

#ifndef CSFORGE_MANIFEST_H_
#define CSFORGE_MANIFEST_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "csforge/corpus.h"
#include "json.hpp"

namespace csforge {

// JSONL: a leading {"meta": {...}} line followed by one utterance per line.
nlohmann::ordered_json UtteranceToJson(const Utterance& utt);
Utterance UtteranceFromJson(const nlohmann::json& j);

std::string ManifestToString(const Manifest& manifest);
Manifest ManifestFromString(std::string_view text);
void WriteManifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest ReadManifest(const std::filesystem::path& path);

std::string ParallelSetToString(const ParallelSet& set);
ParallelSet ParallelSetFromString(std::string_view text);
void WriteParallelSet(const ParallelSet& set, const std::filesystem::path& path);
ParallelSet ReadParallelSet(const std::filesystem::path& path);

void WriteLexicon(const Lexicon& lexicon, const std::filesystem::path& path);
Lexicon ReadLexicon(const std::filesystem::path& path);

// Whole-file helpers; ReadTextFile throws MissingArtifactError.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view content);

}  // namespace csforge

#endif  // CSFORGE_MANIFEST_H_
