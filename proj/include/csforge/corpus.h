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

#ifndef CSFORGE_CORPUS_H_
#define CSFORGE_CORPUS_H_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace csforge {

inline constexpr int kDefaultMaxFrames = 2000;  // 20 s at 100 frames/s
inline constexpr const char* kGeneratorVersion = "cs-forge-gen/2";

enum class Language { kSrc, kTgt };

const char* LanguageName(Language lang);
Language ParseLanguage(std::string_view name);
inline Language Other(Language lang) {
  return lang == Language::kSrc ? Language::kTgt : Language::kSrc;
}

// Index-aligned word lists of the two synthetic languages. Word i of SRC
// translates to word i of TGT.
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::vector<std::string> tgt_words, std::vector<std::string> src_words,
          int conjunction_index);

  int size() const { return static_cast<int>(tgt_words_.size()); }
  const std::vector<std::string>& tgt_words() const { return tgt_words_; }
  const std::vector<std::string>& src_words() const { return src_words_; }
  int conjunction_index() const { return conjunction_index_; }
  const std::string& conjunction() const { return tgt_words_[conjunction_index_]; }

  // -1 when the word is unknown.
  int TgtIndex(std::string_view word) const;
  int SrcIndex(std::string_view word) const;

  nlohmann::ordered_json ToJson() const;
  static Lexicon FromJson(const nlohmann::json& j);

 private:
  std::vector<std::string> tgt_words_;
  std::vector<std::string> src_words_;
  int conjunction_index_ = 0;
  std::unordered_map<std::string, int> tgt_index_;
  std::unordered_map<std::string, int> src_index_;
};

Lexicon BuildLexicon(int size, uint64_t seed);

// Word-by-word dictionary lookup followed by swapping adjacent pairs
// (0<->1, 2<->3, ...). A trailing odd word keeps its place.
std::vector<std::string> TranslateOracle(const std::vector<std::string>& src,
                                         const Lexicon& lexicon);
std::vector<std::string> InverseOracle(const std::vector<std::string>& tgt,
                                       const Lexicon& lexicon);

// Symbol table for pseudo-audio frames. Id 0 is padding.
struct AcousticAlphabet {
  static constexpr int kPad = 0;
  static constexpr int kBoundary = 1;
  static constexpr int kNumSymbols = 14;
  static constexpr int kFirstChar = 2;
  static constexpr int kNumChars = 12;  // s, t, 0..9

  // -1 if the character is not part of the alphabet.
  static int CharId(char c);
  static char IdChar(int id);
};

struct SynthesisOptions {
  int dwell_max = 3;
  double noise_prob = 0.0;
};

// Renders bare lowercase words as frames: each character repeated 1..dwell_max
// frames, one boundary frame between words, optional random insertions.
std::vector<int> SynthesizeAudio(const std::vector<std::string>& words,
                                 Language language,
                                 const SynthesisOptions& options,
                                 uint64_t seed);

enum class UtteranceKind { kAsr, kSt, kMixed };
const char* KindName(UtteranceKind kind);
UtteranceKind ParseKind(std::string_view name);

struct LidSpan {
  int start = 0;
  int end = 0;
  Language language = Language::kTgt;
  bool operator==(const LidSpan&) const = default;
};

struct Utterance {
  std::string id;
  std::vector<int> frames;
  std::vector<LidSpan> lid_spans;
  std::string transcript;  // spoken form, display only
  std::string target;      // TGT text with casing and punctuation
  UtteranceKind kind = UtteranceKind::kAsr;
};

// Throws PreconditionError when span coverage, frame cap or kind is violated.
void ValidateUtterance(const Utterance& utt, int max_frames = kDefaultMaxFrames);

struct Manifest {
  std::vector<Utterance> utterances;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
};

// A held-out TGT sentence together with its SRC rendering.
struct ParallelSentence {
  std::string id;
  std::string target;  // cased, punctuated
  std::string tgt_bare;
  std::string src_bare;
};

struct ParallelSet {
  std::vector<ParallelSentence> sentences;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

struct CorpusConfig {
  int lexicon_size = 200;
  int n_asr = 1000;
  int n_st = 1000;
  int n_dev = 200;
  int n_test = 300;
  int min_words = 3;
  int max_words = 12;
  // Sentences per training item; real corpora segment at arbitrary points.
  int min_sentences = 1;
  int max_sentences = 1;
  double comma_prob = 0.3;
  double zipf_exponent = 1.0;
  double conjunction_boost = 5.0;
  SynthesisOptions synth;
  int max_frames = kDefaultMaxFrames;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static CorpusConfig FromJson(const nlohmann::json& j);
};

// Samples TGT word indices (Zipfian with a boosted conjunction) and applies
// the casing/punctuation policy.
class SentenceSampler {
 public:
  SentenceSampler(const Lexicon& lexicon, const CorpusConfig& config);

  std::vector<int> SampleIndices(std::mt19937_64& rng) const;
  // First word capitalized, optional internal comma, terminal full stop.
  std::string Punctuate(const std::vector<std::string>& words,
                        std::mt19937_64& rng) const;
  const std::vector<double>& word_probs() const { return probs_; }

 private:
  const Lexicon& lexicon_;
  CorpusConfig config_;
  std::vector<double> probs_;
};

struct CorpusBundle {
  Manifest asr;
  Manifest st;
  Manifest dev;
  ParallelSet test_parallel;
};

CorpusBundle GenerateCorpus(const Lexicon& lexicon, const CorpusConfig& config,
                            uint64_t seed);

// Mono test sets from the parallel sentences: TGT audio (ASR) and SRC audio
// (ST), both with the TGT reference.
std::pair<Manifest, Manifest> RenderMonoTestsets(const ParallelSet& parallel,
                                                 const Lexicon& lexicon,
                                                 const SynthesisOptions& synth,
                                                 uint64_t seed);

// Lowercased words with punctuation removed, e.g. "T005 t012," -> t005 t012.
std::vector<std::string> BareWords(std::string_view target);

}  // namespace csforge

#endif  // CSFORGE_CORPUS_H_
