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

#include "csforge/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {

const char* LanguageName(Language lang) {
  return lang == Language::kSrc ? "SRC" : "TGT";
}

Language ParseLanguage(std::string_view name) {
  if (name == "SRC") return Language::kSrc;
  if (name == "TGT") return Language::kTgt;
  throw ConfigError("unknown language '" + std::string(name) + "'");
}

const char* KindName(UtteranceKind kind) {
  switch (kind) {
    case UtteranceKind::kAsr: return "asr";
    case UtteranceKind::kSt: return "st";
    case UtteranceKind::kMixed: return "mixed";
  }
  return "?";
}

UtteranceKind ParseKind(std::string_view name) {
  if (name == "asr") return UtteranceKind::kAsr;
  if (name == "st") return UtteranceKind::kSt;
  if (name == "mixed") return UtteranceKind::kMixed;
  throw ConfigError("unknown utterance kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Lexicon

Lexicon::Lexicon(std::vector<std::string> tgt_words,
                 std::vector<std::string> src_words, int conjunction_index)
    : tgt_words_(std::move(tgt_words)),
      src_words_(std::move(src_words)),
      conjunction_index_(conjunction_index) {
  if (tgt_words_.size() != src_words_.size() || tgt_words_.empty())
    throw ConfigError("lexicon word lists must be non-empty and equally long");
  if (conjunction_index_ < 0 || conjunction_index_ >= size())
    throw ConfigError("conjunction index out of range");
  for (int i = 0; i < size(); ++i) {
    if (!tgt_index_.emplace(tgt_words_[i], i).second ||
        !src_index_.emplace(src_words_[i], i).second)
      throw ConfigError("duplicate lexicon word at index " + std::to_string(i));
    if (tgt_index_.count(src_words_[i]) || src_index_.count(tgt_words_[i]))
      throw ConfigError("surface form shared across languages at index " +
                        std::to_string(i));
  }
}

int Lexicon::TgtIndex(std::string_view word) const {
  auto it = tgt_index_.find(std::string(word));
  return it == tgt_index_.end() ? -1 : it->second;
}

int Lexicon::SrcIndex(std::string_view word) const {
  auto it = src_index_.find(std::string(word));
  return it == src_index_.end() ? -1 : it->second;
}

nlohmann::ordered_json Lexicon::ToJson() const {
  nlohmann::ordered_json j;
  j["size"] = size();
  j["conjunction_index"] = conjunction_index_;
  j["tgt_words"] = tgt_words_;
  j["src_words"] = src_words_;
  return j;
}

Lexicon Lexicon::FromJson(const nlohmann::json& j) {
  Lexicon lex(j.at("tgt_words").get<std::vector<std::string>>(),
              j.at("src_words").get<std::vector<std::string>>(),
              j.at("conjunction_index").get<int>());
  if (j.contains("size") && j.at("size").get<int>() != lex.size())
    throw ConfigError("lexicon size field disagrees with word lists");
  return lex;
}

Lexicon BuildLexicon(int size, uint64_t seed) {
  if (size < 10 || size > 1000)
    throw ConfigError("lexicon size must be in [10, 1000], got " +
                      std::to_string(size));
  std::vector<std::string> tgt(size), src(size);
  char buf[16];
  for (int i = 0; i < size; ++i) {
    std::snprintf(buf, sizeof(buf), "%03d", i);
    tgt[i] = std::string("t") + buf;
    src[i] = std::string("s") + buf;
  }
  std::mt19937_64 rng(MixSeed(seed));
  std::uniform_int_distribution<int> pick(0, size - 1);
  return Lexicon(std::move(tgt), std::move(src), pick(rng));
}

namespace {

template <typename Seq>
void SwapAdjacentPairs(Seq& words) {
  for (size_t i = 0; i + 1 < words.size(); i += 2) std::swap(words[i], words[i + 1]);
}

}  // namespace

std::vector<std::string> TranslateOracle(const std::vector<std::string>& src,
                                         const Lexicon& lexicon) {
  std::vector<std::string> out;
  out.reserve(src.size());
  for (const auto& w : src) {
    int idx = lexicon.SrcIndex(w);
    if (idx < 0) throw VocabularyError("unknown SRC word '" + w + "'");
    out.push_back(lexicon.tgt_words()[idx]);
  }
  SwapAdjacentPairs(out);
  return out;
}

std::vector<std::string> InverseOracle(const std::vector<std::string>& tgt,
                                       const Lexicon& lexicon) {
  std::vector<std::string> swapped = tgt;
  SwapAdjacentPairs(swapped);
  for (auto& w : swapped) {
    int idx = lexicon.TgtIndex(w);
    if (idx < 0) throw VocabularyError("unknown TGT word '" + w + "'");
    w = lexicon.src_words()[idx];
  }
  return swapped;
}

// ---------------------------------------------------------------------------
// Pseudo-audio

int AcousticAlphabet::CharId(char c) {
  if (c == 's') return kFirstChar;
  if (c == 't') return kFirstChar + 1;
  if (c >= '0' && c <= '9') return kFirstChar + 2 + (c - '0');
  return -1;
}

char AcousticAlphabet::IdChar(int id) {
  if (id == kFirstChar) return 's';
  if (id == kFirstChar + 1) return 't';
  if (id >= kFirstChar + 2 && id < kNumSymbols)
    return static_cast<char>('0' + id - kFirstChar - 2);
  if (id == kBoundary) return '|';
  return '_';
}

std::vector<int> SynthesizeAudio(const std::vector<std::string>& words,
                                 Language language,
                                 const SynthesisOptions& options,
                                 uint64_t seed) {
  if (words.empty()) throw SynthesisError("cannot synthesize an empty word sequence");
  if (options.dwell_max < 1) throw ConfigError("dwell_max must be >= 1");
  if (options.noise_prob < 0.0 || options.noise_prob >= 1.0)
    throw ConfigError("noise_prob must be in [0, 1)");
  const char lead = language == Language::kSrc ? 's' : 't';
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dwell(1, options.dwell_max);
  std::uniform_int_distribution<int> noise_char(0, AcousticAlphabet::kNumChars - 1);
  std::bernoulli_distribution noise(options.noise_prob);

  std::vector<int> frames;
  auto emit = [&](int id) {
    frames.push_back(id);
    if (options.noise_prob > 0.0 && noise(rng))
      frames.push_back(AcousticAlphabet::kFirstChar + noise_char(rng));
  };
  for (size_t w = 0; w < words.size(); ++w) {
    const std::string& word = words[w];
    if (word.empty() || word[0] != lead)
      throw SynthesisError("word '" + word + "' does not belong to language " +
                           LanguageName(language));
    if (w > 0) emit(AcousticAlphabet::kBoundary);
    for (char c : word) {
      int id = AcousticAlphabet::CharId(c);
      if (id < 0)
        throw SynthesisError(std::string("character '") + c +
                             "' is outside the acoustic alphabet");
      int d = dwell(rng);
      for (int k = 0; k < d; ++k) emit(id);
    }
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Utterance checks

void ValidateUtterance(const Utterance& utt, int max_frames) {
  const int n = static_cast<int>(utt.frames.size());
  if (n > max_frames)
    throw PreconditionError("utterance " + utt.id + " has " + std::to_string(n) +
                            " frames, cap is " + std::to_string(max_frames));
  if (utt.lid_spans.empty())
    throw PreconditionError("utterance " + utt.id + " has no lid spans");
  int pos = 0;
  std::set<Language> langs;
  for (const auto& span : utt.lid_spans) {
    if (span.start != pos || span.end <= span.start)
      throw PreconditionError("utterance " + utt.id +
                              " lid spans are not a contiguous partition");
    pos = span.end;
    langs.insert(span.language);
  }
  if (pos != n)
    throw PreconditionError("utterance " + utt.id +
                            " lid spans do not cover all frames");
  const bool mixed = langs.size() >= 2;
  if (mixed != (utt.kind == UtteranceKind::kMixed))
    throw PreconditionError("utterance " + utt.id +
                            " kind disagrees with its lid spans");
}

// ---------------------------------------------------------------------------
// Corpus generation

void CorpusConfig::Validate() const {
  if (lexicon_size < 10 || lexicon_size > 1000)
    throw ConfigError("corpus.lexicon_size must be in [10, 1000]");
  if (n_asr < 0 || n_st < 0 || n_dev < 0 || n_test < 0)
    throw ConfigError("corpus counts must be non-negative");
  if (n_asr + n_st < 1)
    throw ConfigError("corpus.n_asr + corpus.n_st must be >= 1");
  if (min_words < 1 || max_words < min_words)
    throw ConfigError("corpus sentence length range is invalid");
  if (min_sentences < 1 || max_sentences < min_sentences)
    throw ConfigError("corpus sentences-per-item range is invalid");
  if (comma_prob < 0.0 || comma_prob > 1.0)
    throw ConfigError("corpus.comma_prob must be in [0, 1]");
  if (zipf_exponent < 0.0 || conjunction_boost <= 0.0)
    throw ConfigError("corpus Zipf parameters are invalid");
  if (synth.dwell_max < 1) throw ConfigError("corpus.dwell_max must be >= 1");
  if (synth.noise_prob < 0.0 || synth.noise_prob >= 1.0)
    throw ConfigError("corpus.noise_prob must be in [0, 1)");
  if (max_frames < 1) throw ConfigError("corpus.max_frames must be >= 1");
}

nlohmann::ordered_json CorpusConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["lexicon_size"] = lexicon_size;
  j["n_asr"] = n_asr;
  j["n_st"] = n_st;
  j["n_dev"] = n_dev;
  j["n_test"] = n_test;
  j["sentence_len_range"] = {min_words, max_words};
  j["sentences_per_item"] = {min_sentences, max_sentences};
  j["comma_prob"] = comma_prob;
  j["zipf_exponent"] = zipf_exponent;
  j["conjunction_boost"] = conjunction_boost;
  j["dwell_max"] = synth.dwell_max;
  j["noise_prob"] = synth.noise_prob;
  j["max_frames"] = max_frames;
  return j;
}

CorpusConfig CorpusConfig::FromJson(const nlohmann::json& j) {
  CorpusConfig c;
  c.lexicon_size = j.value("lexicon_size", c.lexicon_size);
  c.n_asr = j.value("n_asr", c.n_asr);
  c.n_st = j.value("n_st", c.n_st);
  c.n_dev = j.value("n_dev", c.n_dev);
  c.n_test = j.value("n_test", c.n_test);
  if (j.contains("sentence_len_range")) {
    auto r = j.at("sentence_len_range").get<std::vector<int>>();
    if (r.size() != 2) throw ConfigError("corpus.sentence_len_range needs 2 values");
    c.min_words = r[0];
    c.max_words = r[1];
  }
  if (j.contains("sentences_per_item")) {
    auto r = j.at("sentences_per_item").get<std::vector<int>>();
    if (r.size() != 2) throw ConfigError("corpus.sentences_per_item needs 2 values");
    c.min_sentences = r[0];
    c.max_sentences = r[1];
  }
  c.comma_prob = j.value("comma_prob", c.comma_prob);
  c.zipf_exponent = j.value("zipf_exponent", c.zipf_exponent);
  c.conjunction_boost = j.value("conjunction_boost", c.conjunction_boost);
  c.synth.dwell_max = j.value("dwell_max", c.synth.dwell_max);
  c.synth.noise_prob = j.value("noise_prob", c.synth.noise_prob);
  c.max_frames = j.value("max_frames", c.max_frames);
  return c;
}

SentenceSampler::SentenceSampler(const Lexicon& lexicon, const CorpusConfig& config)
    : lexicon_(lexicon), config_(config), probs_(lexicon.size()) {
  double total = 0.0;
  for (int i = 0; i < lexicon.size(); ++i) {
    probs_[i] = 1.0 / std::pow(static_cast<double>(i + 1), config.zipf_exponent);
    if (i == lexicon.conjunction_index()) probs_[i] *= config.conjunction_boost;
    total += probs_[i];
  }
  for (double& p : probs_) p /= total;
}

std::vector<int> SentenceSampler::SampleIndices(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> len(config_.min_words, config_.max_words);
  std::discrete_distribution<int> word(probs_.begin(), probs_.end());
  const int n = len(rng);
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = word(rng);
  return out;
}

std::string SentenceSampler::Punctuate(const std::vector<std::string>& words,
                                       std::mt19937_64& rng) const {
  std::vector<std::string> out = words;
  out[0] = CapitalizeFirst(out[0]);
  std::bernoulli_distribution has_comma(config_.comma_prob);
  if (out.size() >= 2 && has_comma(rng)) {
    std::uniform_int_distribution<int> pos(0, static_cast<int>(out.size()) - 2);
    out[pos(rng)] += ",";
  }
  out.back() += ".";
  return JoinWords(out);
}

std::vector<std::string> BareWords(std::string_view target) {
  std::vector<std::string> out;
  for (const auto& tok : SplitWhitespace(target)) {
    std::string w;
    for (char c : tok)
      if (std::isalnum(static_cast<unsigned char>(c))) w += c;
    if (!w.empty()) out.push_back(ToLowerAscii(w));
  }
  return out;
}

namespace {

struct ItemText {
  std::string target;
  std::vector<std::string> tgt_words;
};

ItemText SampleItem(const SentenceSampler& sampler, const Lexicon& lexicon,
                    int n_sentences, std::mt19937_64& rng) {
  ItemText item;
  std::vector<std::string> sentences;
  for (int s = 0; s < n_sentences; ++s) {
    std::vector<std::string> words;
    for (int idx : sampler.SampleIndices(rng)) words.push_back(lexicon.tgt_words()[idx]);
    sentences.push_back(sampler.Punctuate(words, rng));
    item.tgt_words.insert(item.tgt_words.end(), words.begin(), words.end());
  }
  item.target = JoinWords(sentences);
  return item;
}

std::string MakeId(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06d", prefix, index);
  return buf;
}

Utterance RenderUtterance(std::string id, const std::string& target,
                          const std::vector<std::string>& tgt_words,
                          Language language, const Lexicon& lexicon,
                          const SynthesisOptions& synth, uint64_t seed) {
  Utterance utt;
  utt.id = std::move(id);
  utt.target = target;
  std::vector<std::string> spoken =
      language == Language::kTgt ? tgt_words : InverseOracle(tgt_words, lexicon);
  utt.frames = SynthesizeAudio(spoken, language, synth, seed);
  utt.transcript = JoinWords(spoken);
  utt.lid_spans = {{0, static_cast<int>(utt.frames.size()), language}};
  utt.kind = language == Language::kTgt ? UtteranceKind::kAsr : UtteranceKind::kSt;
  return utt;
}

}  // namespace

CorpusBundle GenerateCorpus(const Lexicon& lexicon, const CorpusConfig& config,
                            uint64_t seed) {
  config.Validate();
  if (config.lexicon_size != lexicon.size())
    throw ConfigError("corpus.lexicon_size disagrees with the lexicon");
  SentenceSampler sampler(lexicon, config);

  // Item streams: asr, st, dev, test occupy disjoint index ranges.
  const uint64_t st_base = static_cast<uint64_t>(config.n_asr);
  const uint64_t dev_base = st_base + config.n_st;
  const uint64_t test_base = dev_base + config.n_dev;

  auto make = [&](const char* prefix, int i, uint64_t stream, Language lang) {
    std::mt19937_64 rng(DeriveSeed(seed, stream));
    std::uniform_int_distribution<int> n_sent(config.min_sentences,
                                              config.max_sentences);
    // Resample until the rendering fits the frame budget.
    for (int attempt = 0;; ++attempt) {
      ItemText item = SampleItem(sampler, lexicon, n_sent(rng), rng);
      Utterance utt = RenderUtterance(MakeId(prefix, i), item.target, item.tgt_words,
                                      lang, lexicon, config.synth, rng());
      if (static_cast<int>(utt.frames.size()) <= config.max_frames) return utt;
      if (attempt >= 100)
        throw BudgetError("cannot fit utterance " + utt.id + " into max_frames");
    }
  };

  CorpusBundle out;
  for (int i = 0; i < config.n_asr; ++i)
    out.asr.utterances.push_back(make("asr", i, i, Language::kTgt));
  for (int i = 0; i < config.n_st; ++i)
    out.st.utterances.push_back(make("st", i, st_base + i, Language::kSrc));
  for (int i = 0; i < config.n_dev; ++i)
    out.dev.utterances.push_back(make(i % 2 == 0 ? "dev-asr" : "dev-st", i, dev_base + i,
                                      i % 2 == 0 ? Language::kTgt : Language::kSrc));

  // Held-out sentences are always single sentences.
  for (int i = 0; i < config.n_test; ++i) {
    std::mt19937_64 rng(DeriveSeed(seed, test_base + i));
    ItemText item = SampleItem(sampler, lexicon, 1, rng);
    ParallelSentence ps;
    ps.id = MakeId("test", i);
    ps.target = item.target;
    ps.tgt_bare = JoinWords(item.tgt_words);
    ps.src_bare = JoinWords(InverseOracle(item.tgt_words, lexicon));
    out.test_parallel.sentences.push_back(std::move(ps));
  }

  nlohmann::ordered_json meta;
  meta["seed"] = seed;
  meta["generator_version"] = kGeneratorVersion;
  meta["params"] = config.ToJson();
  auto tag = [&](Manifest& m, const char* part) {
    m.meta = meta;
    m.meta["part"] = part;
  };
  tag(out.asr, "train_asr");
  tag(out.st, "train_st");
  tag(out.dev, "dev");
  out.test_parallel.meta = meta;
  out.test_parallel.meta["part"] = "test_parallel";
  return out;
}

std::pair<Manifest, Manifest> RenderMonoTestsets(const ParallelSet& parallel,
                                                 const Lexicon& lexicon,
                                                 const SynthesisOptions& synth,
                                                 uint64_t seed) {
  Manifest asr, st;
  for (size_t i = 0; i < parallel.sentences.size(); ++i) {
    const auto& ps = parallel.sentences[i];
    std::vector<std::string> tgt = SplitWhitespace(ps.tgt_bare);
    std::mt19937_64 rng(DeriveSeed(seed, i));
    asr.utterances.push_back(RenderUtterance(ps.id + "-asr", ps.target, tgt,
                                             Language::kTgt, lexicon, synth, rng()));
    st.utterances.push_back(RenderUtterance(ps.id + "-st", ps.target, tgt,
                                            Language::kSrc, lexicon, synth, rng()));
  }
  nlohmann::ordered_json meta;
  meta["seed"] = seed;
  meta["generator_version"] = kGeneratorVersion;
  meta["dwell_max"] = synth.dwell_max;
  meta["noise_prob"] = synth.noise_prob;
  asr.meta = meta;
  asr.meta["part"] = "test_asr";
  st.meta = meta;
  st.meta["part"] = "test_st";
  return {std::move(asr), std::move(st)};
}

}  // namespace csforge
