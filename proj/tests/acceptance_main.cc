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

// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csforge/augment.h"
#include "csforge/corpus.h"
#include "csforge/evaluate.h"
#include "csforge/experiment.h"
#include "csforge/gradcheck.h"
#include "csforge/manifest.h"
#include "csforge/pipeline.h"
#include "csforge/text.h"
#include "json.hpp"

namespace csforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Words = std::vector<std::string>;

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void Report(int id, const std::string& name, const Verdict& v) {
  std::printf("%s  criterion %d  %-30s %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

std::string Fmt(const char* fmt, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double CpuSeconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// ---------------------------------------------------------------------------
// 1. Metric oracles

int RecursiveEdit(const Words& r, const Words& h, size_t i, size_t j,
                  std::vector<int>& memo) {
  int& slot = memo[i * (h.size() + 1) + j];
  if (slot >= 0) return slot;
  if (i == r.size()) return slot = static_cast<int>(h.size() - j);
  if (j == h.size()) return slot = static_cast<int>(r.size() - i);
  const int sub = RecursiveEdit(r, h, i + 1, j + 1, memo) + (r[i] == h[j] ? 0 : 1);
  const int del = RecursiveEdit(r, h, i + 1, j, memo) + 1;
  const int ins = RecursiveEdit(r, h, i, j + 1, memo) + 1;
  return slot = std::min({sub, del, ins});
}

double NaiveBleu(const std::vector<Words>& refs, const std::vector<Words>& hyps) {
  long c = 0, r = 0;
  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    long matched = 0, total = 0;
    for (size_t s = 0; s < refs.size(); ++s) {
      std::map<Words, long> hc, rc;
      for (size_t i = 0; i + n <= hyps[s].size(); ++i)
        ++hc[Words(hyps[s].begin() + i, hyps[s].begin() + i + n)];
      for (size_t i = 0; i + n <= refs[s].size(); ++i)
        ++rc[Words(refs[s].begin() + i, refs[s].begin() + i + n)];
      for (const auto& [g, k] : hc) {
        total += k;
        auto it = rc.find(g);
        matched += std::min(k, it == rc.end() ? 0L : it->second);
      }
    }
    const double p = static_cast<double>(matched) / static_cast<double>(std::max(1L, total));
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
  }
  for (size_t s = 0; s < refs.size(); ++s) {
    c += static_cast<long>(hyps[s].size());
    r += static_cast<long>(refs[s].size());
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / c);
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

Verdict MetricOracles() {
  Stopwatch watch;
  Verdict v;
  std::vector<Words> all = {{}};
  for (size_t begin = 0, len = 0; len < 6; ++len) {
    const size_t end = all.size();
    for (size_t i = begin; i < end; ++i)
      for (const char* w : {"a", "b", "c"}) {
        Words x = all[i];
        x.push_back(w);
        all.push_back(std::move(x));
      }
    begin = end;
  }
  long pairs = 0, mismatches = 0;
  std::vector<int> memo;
  for (const auto& r : all)
    for (const auto& h : all) {
      memo.assign((r.size() + 1) * (h.size() + 1), -1);
      const int oracle = RecursiveEdit(r, h, 0, 0, memo);
      ++pairs;
      if (EditDistance(r, h) != oracle) ++mismatches;
      if (!r.empty()) {
        const double wer = Wer({JoinWords(r)}, {JoinWords(h)});
        if (wer != static_cast<double>(oracle) / static_cast<double>(r.size())) ++mismatches;
      }
    }

  std::mt19937_64 rng(20260101);
  const Words alphabet = {"a", "b", "c", "d", "e", ".", ","};
  double worst = 0.0;
  int nonzero = 0;
  for (int corpus = 0; corpus < 100; ++corpus) {
    const int segments = 1 + static_cast<int>(rng() % 5);
    std::vector<Words> refs, hyps;
    std::vector<std::string> ref_text, hyp_text;
    for (int s = 0; s < segments; ++s) {
      Words ref, hyp;
      const int len = 1 + static_cast<int>(rng() % 9);
      for (int i = 0; i < len; ++i) ref.push_back(alphabet[rng() % alphabet.size()]);
      for (const auto& w : ref) {
        const int action = static_cast<int>(rng() % 10);
        if (action == 0) continue;
        hyp.push_back(action == 1 ? alphabet[rng() % alphabet.size()] : w);
        if (action == 2) hyp.push_back(alphabet[rng() % alphabet.size()]);
      }
      refs.push_back(ref);
      hyps.push_back(hyp);
      ref_text.push_back(JoinWords(ref));
      hyp_text.push_back(JoinWords(hyp));
    }
    const double oracle = NaiveBleu(refs, hyps);
    const double got = CorpusBleu(ref_text, hyp_text).score;
    worst = std::max(worst, std::abs(oracle - got));
    nonzero += oracle > 0.0;
  }

  bool hand = Wer({"A B C D"}, {"A C D"}) == 0.25;
  hand &= CorpusBleu({"a b x d"}, {"a b c d"}).score == 0.0;
  hand &= std::abs(CorpusBleu({"a b c d e f"}, {"a b c d"}).score - 60.65) < 0.005;

  const double secs = watch.Seconds();
  v.pass = mismatches == 0 && worst <= 1e-9 && hand && secs < 10.0;
  v.detail = std::to_string(pairs) + " WER pairs, " + std::to_string(mismatches) +
             " mismatches; BLEU max |diff| " + Fmt("%.2e", worst) + " over 100 corpora (" +
             std::to_string(nonzero) + " non-zero); hand examples " +
             (hand ? "ok" : "WRONG") + Fmt("; %.2f s", secs);
  return v;
}

// ---------------------------------------------------------------------------
// 2. Gradient check

Verdict GradientCheck(uint64_t experiment_seed) {
  Stopwatch watch;
  const uint64_t seed = DeriveSeed(experiment_seed, 5);
  Lexicon lexicon = BuildLexicon(10, seed);
  TargetVocab vocab = TargetVocab::FromLexicon(lexicon);
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.hidden_dim = 8;
  auto model = Seq2Seq<double>::Init(mc, vocab, seed);
  const Words words = {lexicon.tgt_words()[1], lexicon.tgt_words()[2]};
  SynthesisOptions synth;
  synth.dwell_max = 1;
  std::vector<int> frames = SynthesizeAudio(words, Language::kTgt, synth, seed);
  frames.resize(5);
  Example sample{frames, vocab.Encode(CapitalizeFirst(words[0]) + ", " + words[1] + ".")};
  GradCheckResult r = GradCheck(model, sample, 1e-4, 100, seed);
  const double secs = watch.Seconds();
  Verdict v;
  v.pass = r.max_rel_error < 1e-4 && secs < 60.0;
  v.detail = Fmt("max rel error %.2e over ", r.max_rel_error) + std::to_string(r.checked) +
             " of " + std::to_string(model.num_params()) + Fmt(" params; %.2f s", secs);
  return v;
}

// ---------------------------------------------------------------------------
// 3. Augmentation contract

Verdict AugmentationContract(const ExperimentConfig& config) {
  Stopwatch watch;
  CorpusConfig cc = config.corpus;
  cc.n_asr = 1000;
  cc.n_st = 1000;
  cc.n_dev = 0;
  cc.n_test = 10;
  const uint64_t seed = DeriveSeed(config.seed, 77);
  Lexicon lexicon = BuildLexicon(cc.lexicon_size, seed);
  CorpusBundle pool = GenerateCorpus(lexicon, cc, seed);
  const long n = static_cast<long>(pool.asr.size() + pool.st.size());
  Verdict v;
  std::string detail = "N=" + std::to_string(n);
  for (double p : {0.05, 0.15, 0.75}) {
    DAConfig da = config.augment.ForP(p, DeriveSeed(seed, static_cast<uint64_t>(p * 100)));
    Manifest a = ApplyDA(pool.asr, pool.st, da);
    Manifest b = ApplyDA(pool.asr, pool.st, da);
    const long m = std::lround(p * static_cast<double>(n));
    long multi = 0, two = 0, too_long = 0;
    for (const auto& u : a.utterances) {
      too_long += u.frames.size() > 2000;
      if (u.kind != UtteranceKind::kMixed) continue;
      ++multi;
      two += u.lid_spans.size() == 3;
    }
    const long one = multi - two;
    const bool identical = ManifestToString(a) == ManifestToString(b);
    const bool split_ok = std::abs(static_cast<double>(two) - 0.2 * static_cast<double>(m)) <= 1.0 &&
                          std::abs(static_cast<double>(one) - 0.8 * static_cast<double>(m)) <= 1.0;
    const bool ok = multi == m && static_cast<long>(a.size()) == n && split_ok &&
                    too_long == 0 && identical;
    v.pass &= ok;
    detail += Fmt("; p=%.2f multi %.0f/%.0f (1sw %.0f", p, static_cast<double>(multi),
                  static_cast<double>(m), static_cast<double>(one)) +
              Fmt(", 2sw %.0f)", static_cast<double>(two)) + (identical ? "" : " NOT identical") +
              (too_long ? " OVER 2000 frames" : "");
  }
  const double secs = watch.Seconds();
  v.pass &= secs < 10.0;
  v.detail = detail + Fmt("; %.2f s", secs);
  return v;
}

// ---------------------------------------------------------------------------
// 4-6. Default reproduction

struct ReportView {
  json cells;
  std::optional<double> Get(const std::string& sys, const std::string& ts,
                            const std::string& metric) const {
    for (const auto& c : cells)
      if (c["system"] == sys && c["testset"] == ts && c["metric"] == metric &&
          c["value"].is_number())
        return c["value"].get<double>();
    return std::nullopt;
  }
};

struct RunTiming {
  std::optional<double> wall, cpu;
  bool recorded = false;  // taken from an earlier complete run
};

RunTiming RunReproduce(const ExperimentConfig& config) {
  const fs::path timing_path = config.output_dir / "acceptance_timing.json";
  const int expected_models =
      4 + (config.HasSystem(kSystemLastDa) ? static_cast<int>(config.augment.sweep.size()) : 0);
  Stopwatch watch;
  const double cpu0 = CpuSeconds();
  Experiment ex(config, [](const std::string& line) { std::cerr << line << "\n"; });
  ex.Reproduce();
  RunTiming t;
  if (ex.models_trained() == expected_models) {
    t.wall = watch.Seconds();
    t.cpu = CpuSeconds() - cpu0;
    WriteTextFile(timing_path, json{{"wall_seconds", *t.wall}, {"cpu_seconds", *t.cpu}}.dump(2));
  } else if (fs::exists(timing_path)) {
    json j = json::parse(ReadTextFile(timing_path));
    t.wall = j["wall_seconds"].get<double>();
    t.cpu = j["cpu_seconds"].get<double>();
    t.recorded = true;
  }
  return t;
}

std::string Opt(const std::optional<double>& x, const char* fmt = "%.2f") {
  return x ? Fmt(fmt, *x) : std::string("missing");
}

void ReproductionCriteria(const ExperimentConfig& config, const RunTiming& timing) {
  ReportView r{json::parse(ReadTextFile(config.output_dir / "eval" / "report.json"))["cells"]};

  const auto last = r.Get(kSystemLast, "test_cs", "BLEU");
  const auto pipe = r.Get(kSystemPipeline, "test_cs", "BLEU");
  std::optional<double> best_da;
  std::string best_name;
  for (double p : config.augment.sweep) {
    auto b = r.Get(DaSystemName(p), "test_cs", "BLEU");
    if (b && (!best_da || *b > *best_da)) {
      best_da = b;
      best_name = DaSystemName(p);
    }
  }
  const bool runtime_ok = timing.cpu && *timing.cpu < 1800.0;
  const std::string runtime =
      timing.cpu ? Fmt("reproduce %.0f s CPU, %.0f s wall", *timing.cpu, *timing.wall) +
                       (timing.recorded ? " (recorded by the first run)" : "")
                 : std::string("reproduce runtime unknown");
  {
    Verdict v;
    v.pass = last && pipe && *last > *pipe;
    v.detail = "BLEU(LAST) " + Opt(last) + " vs BLEU(pipeline) " + Opt(pipe);
    Report(4, "LAST beats pipeline", v);
  }
  {
    Verdict v;
    v.pass = last && best_da && *best_da >= *last;
    v.detail = "best DA " + best_name + " " + Opt(best_da) + " vs LAST " + Opt(last);
    Report(4, "DA does not hurt LAST", v);
  }
  {
    Verdict v;
    v.pass = runtime_ok;
    v.detail = runtime + " (limit 1800 s CPU)";
    Report(4, "reproduce runtime", v);
  }
  {
    const auto last_np = r.Get(kSystemLast, "test_cs", "BLEU-nopunct");
    const auto pipe_np = r.Get(kSystemPipeline, "test_cs", "BLEU-nopunct");
    Verdict v;
    v.pass = last && pipe && last_np && pipe_np && (*pipe_np - *pipe) > (*last_np - *last);
    if (v.pass || (last && pipe && last_np && pipe_np))
      v.detail = Fmt("pipeline %.2f -> %.2f (%+.2f)", *pipe, *pipe_np, *pipe_np - *pipe) +
                 Fmt(" vs LAST %.2f -> %.2f (%+.2f)", *last, *last_np, *last_np - *last);
    else
      v.detail = "missing report cells";
    Report(5, "punctuation-join effect", v);
  }
  {
    const auto last_wer = r.Get(kSystemLast, "test_asr", "WER");
    const auto asr_wer = r.Get(kSystemAsr, "test_asr", "WER");
    const auto last_bleu = r.Get(kSystemLast, "test_st", "BLEU");
    const auto st_bleu = r.Get(kSystemSt, "test_st", "BLEU");
    auto rel = [](std::optional<double> a, std::optional<double> b) -> std::optional<double> {
      if (!a || !b || *b == 0.0) return std::nullopt;
      return std::abs(*a - *b) / *b;
    };
    const auto rw = rel(last_wer, asr_wer), rb = rel(last_bleu, st_bleu);
    Verdict v;
    v.pass = rw && rb && *rw <= 0.15 && *rb <= 0.15;
    v.detail = "WER LAST " + Opt(last_wer, "%.4f") + " vs ASR " + Opt(asr_wer, "%.4f") +
               " (rel " + Opt(rw, "%.3f") + "); BLEU LAST " + Opt(last_bleu) + " vs ST " +
               Opt(st_bleu) + " (rel " + Opt(rb, "%.3f") + ")";
    Report(6, "monolingual parity", v);
  }
}

// ---------------------------------------------------------------------------
// 7. Single-span identity

Verdict SingleSpanIdentity(const Experiment& ex) {
  const Seq2SeqModel asr = LoadModel(ex.ModelPath(kSystemAsr)).model;
  const Seq2SeqModel st = LoadModel(ex.ModelPath(kSystemSt)).model;
  const Seq2SeqModel last = LoadModel(ex.ModelPath(kSystemLast)).model;
  long checked = 0, mismatches = 0;
  for (const char* name : {"test_asr.jsonl", "test_st.jsonl"}) {
    for (const auto& u : ReadManifest(ex.DataPath(name)).utterances) {
      if (u.lid_spans.size() != 1) continue;
      ++checked;
      const bool tgt = u.lid_spans[0].language == Language::kTgt;
      if (PipelineDecode(u, asr, st) != DecodeGreedy(tgt ? asr : st, u.frames)) ++mismatches;
      if (GivenLidDecode(u, last) != LastDecode(u, last)) ++mismatches;
    }
  }
  Verdict v;
  v.pass = checked > 0 && mismatches == 0;
  v.detail = std::to_string(checked) + " single-span utterances, " +
             std::to_string(mismatches) + " mismatches";
  return v;
}

// ---------------------------------------------------------------------------
// 8. CS test-set construction

Verdict CsConstruction(const Experiment& ex) {
  Manifest cs = ReadManifest(ex.DataPath("test_cs.jsonl"));
  long src_first = 0, no_switch = 0, bad_partition = 0;
  for (const auto& u : cs.utterances) {
    src_first += u.lid_spans.front().language == Language::kSrc;
    bool switched = false;
    for (size_t k = 1; k < u.lid_spans.size(); ++k)
      switched |= u.lid_spans[k].language != u.lid_spans[k - 1].language;
    no_switch += !switched;
    try {
      ValidateUtterance(u, static_cast<int>(u.frames.size()));
    } catch (const std::exception&) {
      ++bad_partition;
    }
  }
  const long n = static_cast<long>(cs.size());
  Verdict v;
  v.pass = n > 0 && n % 2 == 0 && 2 * src_first == n && no_switch == 0 && bad_partition == 0;
  v.detail = std::to_string(src_first) + "/" + std::to_string(n) + " start in SRC, " +
             std::to_string(no_switch) + " without a switch, " + std::to_string(bad_partition) +
             " bad partitions";
  return v;
}

}  // namespace
}  // namespace csforge

int main(int argc, char** argv) {
  using namespace csforge;
  CLI::App app{"Acceptance checks"};
  std::string config_path, out;
  app.add_option("--config", config_path, "Experiment config")->required();
  app.add_option("--out", out, "Output directory of the default run");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config = ExperimentConfig::Load(config_path);
  if (!out.empty()) config.output_dir = out;
  config.Validate();

  Report(1, "metric oracles", MetricOracles());
  Report(2, "gradient check", GradientCheck(config.seed));
  Report(3, "augmentation contract", AugmentationContract(config));

  const RunTiming timing = RunReproduce(config);
  ReproductionCriteria(config, timing);
  Experiment ex(config);
  Report(7, "single-span identity", SingleSpanIdentity(ex));
  Report(8, "CS test-set construction", CsConstruction(ex));

  std::printf("%d criteria line(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
