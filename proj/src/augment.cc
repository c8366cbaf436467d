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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {

void DAConfig::Validate() const {
  if (p_multi < 0.0 || p_multi > 0.75)
    throw ConfigError("augment.p_multi must be in [0, 0.75], got " +
                      std::to_string(p_multi));
  if (one_switch < 0.0 || two_switch < 0.0 ||
      std::abs(one_switch + two_switch - 1.0) > 1e-9)
    throw ConfigError("augment.switch_dist must sum to 1");
  if (max_frames < 1) throw ConfigError("augment.max_frames must be >= 1");
  if (max_retries < 0) throw ConfigError("augment.max_retries must be >= 0");
}

nlohmann::ordered_json DAConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["p_multi"] = p_multi;
  j["switch_dist"] = {{"1", one_switch}, {"2", two_switch}};
  j["max_frames"] = max_frames;
  j["max_retries"] = max_retries;
  j["seed"] = seed;
  return j;
}

DAConfig DAConfig::FromJson(const nlohmann::json& j) {
  DAConfig c;
  c.p_multi = j.value("p_multi", c.p_multi);
  if (j.contains("switch_dist")) {
    const auto& d = j.at("switch_dist");
    c.one_switch = d.value("1", c.one_switch);
    c.two_switch = d.value("2", c.two_switch);
  }
  c.max_frames = j.value("max_frames", c.max_frames);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.seed = j.value("seed", c.seed);
  return c;
}

Utterance ConcatUtterances(std::span<const Utterance> parts, int max_frames) {
  if (parts.size() < 2)
    throw PreconditionError("concatenation needs at least two parts");
  std::set<Language> langs;
  size_t total = 0;
  for (const auto& p : parts) {
    for (const auto& s : p.lid_spans) langs.insert(s.language);
    total += p.frames.size();
  }
  if (langs.size() < 2)
    throw PreconditionError("concatenated parts must span at least two languages");
  if (total > static_cast<size_t>(max_frames))
    throw BudgetError("concatenation needs " + std::to_string(total) +
                      " frames, budget is " + std::to_string(max_frames));

  Utterance out;
  out.kind = UtteranceKind::kMixed;
  out.frames.reserve(total);
  std::vector<std::string> ids, transcripts, targets;
  for (const auto& p : parts) {
    const int offset = static_cast<int>(out.frames.size());
    for (const auto& s : p.lid_spans)
      out.lid_spans.push_back({s.start + offset, s.end + offset, s.language});
    out.frames.insert(out.frames.end(), p.frames.begin(), p.frames.end());
    ids.push_back(p.id);
    transcripts.push_back(p.transcript);
    targets.push_back(p.target);
  }
  out.id = JoinWords(ids, "+");
  out.transcript = JoinWords(transcripts);
  out.target = JoinWords(targets);
  return out;
}

namespace {

// Cycles through a pool in shuffled order, reshuffling once exhausted, so no
// item repeats within an epoch. Items listed in `first` lead the first epoch.
class EpochSampler {
 public:
  EpochSampler(std::vector<size_t> first, std::vector<size_t> rest,
               std::mt19937_64* rng)
      : rng_(rng) {
    std::shuffle(first.begin(), first.end(), *rng_);
    std::shuffle(rest.begin(), rest.end(), *rng_);
    order_ = std::move(first);
    order_.insert(order_.end(), rest.begin(), rest.end());
  }

  size_t Next() {
    if (pos_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), *rng_);
      pos_ = 0;
      ++epochs_;
    }
    return order_[pos_++];
  }
  int epochs() const { return epochs_; }

 private:
  std::mt19937_64* rng_;
  std::vector<size_t> order_;
  size_t pos_ = 0;
  int epochs_ = 0;
};

}  // namespace

Manifest ApplyDA(const Manifest& asr, const Manifest& st, const DAConfig& config) {
  config.Validate();
  if (asr.empty() || st.empty())
    throw PreconditionError("augmentation needs non-empty ASR and ST manifests");

  const size_t n_asr = asr.size();
  const size_t n = n_asr + st.size();
  const long requested = std::lround(config.p_multi * static_cast<double>(n));
  const long n_two = static_cast<long>(
      std::floor(config.two_switch * static_cast<double>(requested) + 1e-9));
  const long n_one = requested - n_two;

  std::mt19937_64 rng(MixSeed(config.seed));
  auto item = [&](size_t k) -> const Utterance& {
    return k < n_asr ? asr.utterances[k] : st.utterances[k - n_asr];
  };

  // Pass-through selection: a seeded sample of N - M inputs.
  std::vector<size_t> pool(n);
  std::iota(pool.begin(), pool.end(), size_t{0});
  std::shuffle(pool.begin(), pool.end(), rng);
  const size_t n_mono = n - static_cast<size_t>(requested);
  std::vector<bool> is_mono(n, false);
  for (size_t i = 0; i < n_mono; ++i) is_mono[pool[i]] = true;

  std::vector<size_t> tgt_free, tgt_used, src_free, src_used;
  for (size_t k = 0; k < n; ++k) {
    auto& bucket = k < n_asr ? (is_mono[k] ? tgt_used : tgt_free)
                             : (is_mono[k] ? src_used : src_free);
    bucket.push_back(k);
  }
  EpochSampler tgt_sampler(tgt_free, tgt_used, &rng);
  EpochSampler src_sampler(src_free, src_used, &rng);

  std::vector<Utterance> out;
  out.reserve(n);
  for (size_t i = 0; i < n_mono; ++i) out.push_back(item(pool[i]));

  std::bernoulli_distribution src_first(0.5);
  long built_one = 0, built_two = 0, skipped = 0, resampled = 0;
  std::vector<size_t> spare;  // mono fillers for skipped combinations
  for (long m = 0; m < requested; ++m) {
    const int n_parts = m < n_one ? 2 : 3;
    bool done = false;
    for (int attempt = 0; attempt <= config.max_retries && !done; ++attempt) {
      Language lang = src_first(rng) ? Language::kSrc : Language::kTgt;
      std::vector<Utterance> parts;
      for (int p = 0; p < n_parts; ++p) {
        parts.push_back(item(lang == Language::kTgt ? tgt_sampler.Next()
                                                    : src_sampler.Next()));
        lang = Other(lang);
      }
      try {
        Utterance u = ConcatUtterances(parts, config.max_frames);
        char prefix[32];
        std::snprintf(prefix, sizeof(prefix), "da-%06ld:", m);
        u.id = prefix + u.id;
        out.push_back(std::move(u));
        (n_parts == 2 ? built_one : built_two) += 1;
        done = true;
      } catch (const BudgetError&) {
        ++resampled;
      }
    }
    if (!done) {
      ++skipped;
      out.push_back(item(pool[n_mono + static_cast<size_t>(skipped - 1)]));
    }
  }

  std::shuffle(out.begin(), out.end(), rng);

  Manifest result;
  result.utterances = std::move(out);
  auto& meta = result.meta;
  meta["generator_version"] = kGeneratorVersion;
  meta["augment"] = config.ToJson();
  meta["n_inputs"] = n;
  meta["n_outputs"] = result.utterances.size();
  meta["requested_multi"] = requested;
  meta["achieved_multi"] = built_one + built_two;
  meta["achieved_fraction"] =
      static_cast<double>(built_one + built_two) / static_cast<double>(n);
  meta["one_switch"] = built_one;
  meta["two_switch"] = built_two;
  meta["budget_resamples"] = resampled;
  meta["skipped_combinations"] = skipped;
  meta["rounding"] = "two-switch count floored, remainder to one-switch class";
  meta["part_sampling"] = "without replacement per epoch";
  meta["part_epochs"] = {{"TGT", tgt_sampler.epochs()}, {"SRC", src_sampler.epochs()}};
  return result;
}

std::vector<std::string> SplitAtSwitchPoints(std::string_view text,
                                             const SwitchPointRule& rule) {
  std::vector<std::string> parts;
  std::vector<std::string> current;
  const std::string conj = ToLowerAscii(rule.conjunction);
  for (const auto& tok : SplitWhitespace(text)) {
    current.push_back(tok);
    const char last = tok.back();
    bool cut = (rule.after_comma && last == ',') || (rule.after_period && last == '.');
    if (!cut && !conj.empty() && ToLowerAscii(tok) == conj) cut = true;
    if (cut) {
      parts.push_back(JoinWords(current));
      current.clear();
    }
  }
  if (!current.empty()) parts.push_back(JoinWords(current));
  return parts;
}

void CsTestsetConfig::Validate() const {
  if (min_sentences < 1 || max_sentences < min_sentences)
    throw ConfigError("testset sentences_per_utterance range is invalid");
  if (n_utterances < 1) throw ConfigError("testset.n_utterances must be >= 1");
  if (max_frames < 1) throw ConfigError("testset.max_frames must be >= 1");
}

nlohmann::ordered_json CsTestsetConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["sentences_per_utterance"] = {min_sentences, max_sentences};
  j["n_utterances"] = n_utterances;
  j["dwell_max"] = synth.dwell_max;
  j["noise_prob"] = synth.noise_prob;
  j["max_frames"] = max_frames;
  return j;
}

CsTestsetConfig CsTestsetConfig::FromJson(const nlohmann::json& j) {
  CsTestsetConfig c;
  if (j.contains("sentences_per_utterance")) {
    auto r = j.at("sentences_per_utterance").get<std::vector<int>>();
    if (r.size() != 2)
      throw ConfigError("testset.sentences_per_utterance needs 2 values");
    c.min_sentences = r[0];
    c.max_sentences = r[1];
  }
  c.n_utterances = j.value("n_utterances", c.n_utterances);
  c.synth.dwell_max = j.value("dwell_max", c.synth.dwell_max);
  c.synth.noise_prob = j.value("noise_prob", c.synth.noise_prob);
  c.max_frames = j.value("max_frames", c.max_frames);
  return c;
}

Manifest BuildCsTestset(const ParallelSet& parallel, const Lexicon& lexicon,
                        const CsTestsetConfig& config, uint64_t seed) {
  config.Validate();
  const int n_sent = static_cast<int>(parallel.sentences.size());
  if (n_sent < config.max_sentences)
    throw PreconditionError("parallel set has " + std::to_string(n_sent) +
                            " sentences, need at least " +
                            std::to_string(config.max_sentences));
  const SwitchPointRule rule{lexicon.conjunction()};

  // Exactly half of the utterances start in SRC (the odd one out is random).
  std::vector<int> order(config.n_utterances);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 assign_rng(MixSeed(seed));
  std::shuffle(order.begin(), order.end(), assign_rng);
  std::vector<Language> start(config.n_utterances, Language::kTgt);
  int n_src_first = config.n_utterances / 2;
  if (config.n_utterances % 2 == 1 && std::bernoulli_distribution(0.5)(assign_rng))
    ++n_src_first;
  for (int i = 0; i < n_src_first; ++i) start[order[i]] = Language::kSrc;

  Manifest out;
  std::map<int, int> switch_hist;
  int total_parts = 0;
  for (int u = 0; u < config.n_utterances; ++u) {
    std::mt19937_64 rng(DeriveSeed(seed, static_cast<uint64_t>(u)));
    std::uniform_int_distribution<int> n_pick(config.min_sentences,
                                              config.max_sentences);
    bool done = false;
    for (int attempt = 0; attempt <= 100 && !done; ++attempt) {
      std::vector<int> idx(n_sent);
      std::iota(idx.begin(), idx.end(), 0);
      const int k = n_pick(rng);
      for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n_sent - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      std::vector<std::string> targets;
      for (int i = 0; i < k; ++i) targets.push_back(parallel.sentences[idx[i]].target);
      const std::string target = JoinWords(targets);
      const auto parts = SplitAtSwitchPoints(target, rule);
      if (parts.size() < 2) continue;

      Utterance utt;
      char id[32];
      std::snprintf(id, sizeof(id), "cs-%06d", u);
      utt.id = id;
      utt.target = target;
      utt.kind = UtteranceKind::kMixed;
      std::vector<std::string> spoken_all;
      Language lang = start[u];
      for (const auto& part : parts) {
        std::vector<std::string> bare = BareWords(part);
        std::vector<std::string> spoken =
            lang == Language::kTgt ? bare : InverseOracle(bare, lexicon);
        std::vector<int> frames = SynthesizeAudio(spoken, lang, config.synth, rng());
        // The whole utterance is one word sequence, so a switch point still
        // gets its boundary frame. It closes the preceding span.
        if (!utt.lid_spans.empty()) {
          utt.frames.push_back(AcousticAlphabet::kBoundary);
          utt.lid_spans.back().end += 1;
        }
        const int begin = static_cast<int>(utt.frames.size());
        utt.frames.insert(utt.frames.end(), frames.begin(), frames.end());
        utt.lid_spans.push_back({begin, static_cast<int>(utt.frames.size()), lang});
        spoken_all.insert(spoken_all.end(), spoken.begin(), spoken.end());
        lang = Other(lang);
      }
      if (static_cast<int>(utt.frames.size()) > config.max_frames) continue;
      utt.transcript = JoinWords(spoken_all);
      switch_hist[static_cast<int>(parts.size()) - 1] += 1;
      total_parts += static_cast<int>(parts.size());
      out.utterances.push_back(std::move(utt));
      done = true;
    }
    if (!done)
      throw BudgetError("cannot build test utterance " + std::to_string(u) +
                        " within max_frames");
  }

  auto& meta = out.meta;
  meta["seed"] = seed;
  meta["generator_version"] = kGeneratorVersion;
  meta["testset"] = config.ToJson();
  meta["conjunction"] = lexicon.conjunction();
  meta["n_utterances"] = config.n_utterances;
  meta["n_segments"] = total_parts;
  meta["src_first"] = n_src_first;
  nlohmann::ordered_json hist;
  for (const auto& [switches, count] : switch_hist) hist[std::to_string(switches)] = count;
  meta["switch_histogram"] = hist;
  return out;
}

}  // namespace csforge
