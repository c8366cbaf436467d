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

#include <fstream>
#include <sstream>

#include "csforge/errors.h"

namespace csforge {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json UtteranceToJson(const Utterance& utt) {
  ordered_json j;
  j["id"] = utt.id;
  j["frames"] = utt.frames;
  ordered_json spans = ordered_json::array();
  for (const auto& s : utt.lid_spans)
    spans.push_back(ordered_json::array({s.start, s.end, LanguageName(s.language)}));
  j["lid_spans"] = std::move(spans);
  j["transcript"] = utt.transcript;
  j["target"] = utt.target;
  j["kind"] = KindName(utt.kind);
  return j;
}

Utterance UtteranceFromJson(const json& j) {
  Utterance utt;
  utt.id = j.at("id").get<std::string>();
  utt.frames = j.at("frames").get<std::vector<int>>();
  for (const auto& s : j.at("lid_spans"))
    utt.lid_spans.push_back({s.at(0).get<int>(), s.at(1).get<int>(),
                             ParseLanguage(s.at(2).get<std::string>())});
  utt.transcript = j.value("transcript", "");
  utt.target = j.at("target").get<std::string>();
  utt.kind = ParseKind(j.at("kind").get<std::string>());
  return utt;
}

namespace {

template <typename Fn>
void ForEachLine(std::string_view text, Fn fn) {
  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!line.empty()) {
      try {
        fn(json::parse(line), line);
      } catch (const json::exception& e) {
        throw ConfigError("malformed JSONL at line " + std::to_string(line_no) +
                          ": " + e.what());
      }
    }
    pos = end + 1;
  }
}

}  // namespace

std::string ManifestToString(const Manifest& manifest) {
  std::string out;
  ordered_json meta_line;
  meta_line["meta"] = manifest.meta;
  out += meta_line.dump();
  out += '\n';
  for (const auto& utt : manifest.utterances) {
    out += UtteranceToJson(utt).dump();
    out += '\n';
  }
  return out;
}

Manifest ManifestFromString(std::string_view text) {
  Manifest m;
  ForEachLine(text, [&](const json& j, std::string_view line) {
    if (j.contains("meta") && !j.contains("id")) {
      // Reparsed ordered so the key order survives a round trip.
      m.meta = ordered_json::parse(line).at("meta");
    } else {
      m.utterances.push_back(UtteranceFromJson(j));
    }
  });
  return m;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("write failed for " + path.string());
}

void WriteManifest(const Manifest& manifest, const std::filesystem::path& path) {
  WriteTextFile(path, ManifestToString(manifest));
}

Manifest ReadManifest(const std::filesystem::path& path) {
  return ManifestFromString(ReadTextFile(path));
}

std::string ParallelSetToString(const ParallelSet& set) {
  std::string out;
  ordered_json meta_line;
  meta_line["meta"] = set.meta;
  out += meta_line.dump();
  out += '\n';
  for (const auto& ps : set.sentences) {
    ordered_json j;
    j["id"] = ps.id;
    j["target"] = ps.target;
    j["tgt_bare"] = ps.tgt_bare;
    j["src_bare"] = ps.src_bare;
    out += j.dump();
    out += '\n';
  }
  return out;
}

ParallelSet ParallelSetFromString(std::string_view text) {
  ParallelSet set;
  ForEachLine(text, [&](const json& j, std::string_view line) {
    if (j.contains("meta") && !j.contains("id")) {
      set.meta = ordered_json::parse(line).at("meta");
    } else {
      set.sentences.push_back({j.at("id").get<std::string>(),
                               j.at("target").get<std::string>(),
                               j.at("tgt_bare").get<std::string>(),
                               j.at("src_bare").get<std::string>()});
    }
  });
  return set;
}

void WriteParallelSet(const ParallelSet& set, const std::filesystem::path& path) {
  WriteTextFile(path, ParallelSetToString(set));
}

ParallelSet ReadParallelSet(const std::filesystem::path& path) {
  return ParallelSetFromString(ReadTextFile(path));
}

void WriteLexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  WriteTextFile(path, lexicon.ToJson().dump(1) + "\n");
}

Lexicon ReadLexicon(const std::filesystem::path& path) {
  try {
    return Lexicon::FromJson(json::parse(ReadTextFile(path)));
  } catch (const json::exception& e) {
    throw ConfigError("malformed lexicon " + path.string() + ": " + e.what());
  }
}

}  // namespace csforge
