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

#include "csforge/evaluate.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {

int EditDistance(const std::vector<std::string>& ref,
                 const std::vector<std::string>& hyp) {
  const size_t m = hyp.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double Wer(const std::vector<std::string>& references,
           const std::vector<std::string>& hypotheses) {
  if (references.size() != hypotheses.size())
    throw PreconditionError("WER needs equally many references and hypotheses");
  long errors = 0, words = 0;
  for (size_t i = 0; i < references.size(); ++i) {
    const auto ref = SplitWhitespace(references[i]);
    errors += EditDistance(ref, SplitWhitespace(hypotheses[i]));
    words += static_cast<long>(ref.size());
  }
  if (words == 0) throw UndefinedMetricError("WER is undefined for zero reference words");
  return static_cast<double>(errors) / static_cast<double>(words);
}

std::vector<std::string> BleuTokenize(std::string_view text) {
  std::string spaced;
  spaced.reserve(text.size() * 2);
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc < 128 && std::ispunct(uc)) {
      spaced += ' ';
      spaced += c;
      spaced += ' ';
    } else {
      spaced += c;
    }
  }
  return SplitWhitespace(spaced);
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts CountNgrams(const std::vector<std::string>& toks, int n) {
  NgramCounts counts;
  for (size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  return counts;
}

}  // namespace

BleuResult CorpusBleu(const std::vector<std::string>& references,
                      const std::vector<std::string>& hypotheses, int max_n) {
  if (references.size() != hypotheses.size())
    throw PreconditionError("BLEU needs equally many references and hypotheses");
  if (max_n < 1) throw ConfigError("BLEU max_n must be >= 1");
  std::vector<long> matches(max_n, 0), totals(max_n, 0);
  BleuResult r;
  for (size_t s = 0; s < references.size(); ++s) {
    const auto ref = BleuTokenize(references[s]);
    const auto hyp = BleuTokenize(hypotheses[s]);
    r.ref_len += static_cast<long>(ref.size());
    r.hyp_len += static_cast<long>(hyp.size());
    for (int n = 1; n <= max_n; ++n) {
      const NgramCounts ref_counts = CountNgrams(ref, n);
      for (const auto& [gram, count] : CountNgrams(hyp, n)) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(count, it->second);
        totals[n - 1] += count;
      }
    }
  }
  if (r.hyp_len == 0) {
    r.note = "empty hypothesis corpus, BLEU set to 0";
    r.precisions.assign(max_n, 0.0);
    return r;
  }
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < max_n; ++n) {
    const double p = static_cast<double>(matches[n]) /
                     static_cast<double>(std::max<long>(1, totals[n]));
    r.precisions.push_back(p);
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }
  r.brevity_penalty =
      r.hyp_len >= r.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len));
  r.score = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / max_n);
  return r;
}

std::string StripPunct(std::string_view text) {
  static const std::string_view kRemove = ".,;:!?\"()";
  std::string cleaned;
  cleaned.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    // « and » are two-byte UTF-8 sequences C2 AB / C2 BB.
    if (static_cast<unsigned char>(text[i]) == 0xC2 && i + 1 < text.size()) {
      const auto next = static_cast<unsigned char>(text[i + 1]);
      if (next == 0xAB || next == 0xBB) {
        cleaned += ' ';
        ++i;
        continue;
      }
    }
    cleaned += kRemove.find(text[i]) == std::string_view::npos ? text[i] : ' ';
  }
  std::vector<std::string> kept;
  for (auto& tok : SplitWhitespace(cleaned)) {
    // Hyphens used as separators: tokens made only of hyphens, or hyphens
    // dangling at a token edge. Word-internal hyphens stay.
    size_t b = 0, e = tok.size();
    while (b < e && tok[b] == '-') ++b;
    while (e > b && tok[e - 1] == '-') --e;
    if (e > b) kept.push_back(tok.substr(b, e - b));
  }
  return JoinWords(kept);
}

const char* TestsetKindName(TestsetKind kind) {
  switch (kind) {
    case TestsetKind::kAsr: return "asr";
    case TestsetKind::kSt: return "st";
    case TestsetKind::kCs: return "cs";
  }
  return "?";
}

TestsetKind ParseTestsetKind(std::string_view name) {
  if (name == "asr") return TestsetKind::kAsr;
  if (name == "st") return TestsetKind::kSt;
  if (name == "cs") return TestsetKind::kCs;
  throw ConfigError("unknown testset kind '" + std::string(name) + "'");
}

const EvalCell* EvalReport::Find(std::string_view system, std::string_view testset,
                                 std::string_view metric) const {
  for (const auto& c : cells)
    if (c.system == system && c.testset == testset && c.metric == metric) return &c;
  return nullptr;
}

nlohmann::ordered_json EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["systems"] = systems;
  j["testsets"] = testsets;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json cj;
    cj["system"] = c.system;
    cj["testset"] = c.testset;
    cj["metric"] = c.metric;
    if (c.value) {
      // Rounded so the stored value is stable under re-serialization.
      cj["value"] = std::round(*c.value * 1e6) / 1e6;
    } else {
      cj["value"] = nullptr;
    }
    cj["n_segments"] = c.n_segments;
    arr.push_back(std::move(cj));
  }
  j["cells"] = std::move(arr);
  j["config"] = config;
  j["notes"] = notes;
  return j;
}

std::string EvalReport::FormatTable() const {
  std::vector<std::pair<std::string, std::string>> columns;
  for (const auto& t : testsets)
    for (const auto& c : cells)
      if (c.testset == t &&
          std::find(columns.begin(), columns.end(), std::make_pair(t, c.metric)) ==
              columns.end())
        columns.emplace_back(t, c.metric);

  size_t name_w = 6;
  for (const auto& s : systems) name_w = std::max(name_w, s.size());
  std::vector<size_t> widths;
  for (const auto& [t, m] : columns) widths.push_back(std::max<size_t>(8, t.size() + m.size() + 1));

  std::string out;
  auto pad = [](const std::string& s, size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
  };
  out += pad("system", name_w, false);
  for (size_t k = 0; k < columns.size(); ++k)
    out += " | " + pad(columns[k].first + ":" + columns[k].second, widths[k], true);
  out += '\n';
  out += std::string(name_w, '-');
  for (size_t k = 0; k < columns.size(); ++k) out += "-+-" + std::string(widths[k], '-');
  out += '\n';
  for (const auto& s : systems) {
    out += pad(s, name_w, false);
    for (size_t k = 0; k < columns.size(); ++k) {
      const EvalCell* c = Find(s, columns[k].first, columns[k].second);
      std::string v = "--";
      if (c && c->value) {
        char buf[32];
        if (c->metric == "WER") std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *c->value);
        else std::snprintf(buf, sizeof(buf), "%.2f", *c->value);
        v = buf;
      } else if (c) {
        v = "missing";
      }
      out += " | " + pad(v, widths[k], true);
    }
    out += '\n';
  }
  return out;
}

EvalReport EvaluateSuite(
    const std::vector<std::string>& systems, const std::vector<SystemOutput>& outputs,
    const std::vector<Testset>& testsets, const EvalFlags& flags,
    const std::function<bool(const std::string&, const std::string&)>& applicable) {
  EvalReport report;
  report.systems = systems;
  for (const auto& t : testsets) report.testsets.push_back(t.name);
  report.config["wer"] = "whitespace tokens, unit-cost Levenshtein, cased";
  report.config["bleu"] =
      "corpus BLEU, n=1..4, unsmoothed, clipped counts, denominators max(1,.), "
      "punctuation split into tokens, cased";
  report.config["no_punct"] = flags.no_punct_bleu
                                  ? "punctuation stripped from hypothesis and reference"
                                  : "disabled";
  report.config["join"] = "segment outputs joined with a single space";

  for (const auto& system : systems) {
    for (const auto& t : testsets) {
      if (applicable && !applicable(system, t.name)) continue;
      const SystemOutput* found = nullptr;
      for (const auto& o : outputs)
        if (o.system == system && o.testset == t.name) found = &o;

      std::vector<std::string> metrics;
      if (t.kind == TestsetKind::kAsr) metrics = {"WER"};
      else metrics = {"BLEU"};
      if (t.kind == TestsetKind::kCs && flags.no_punct_bleu) metrics.push_back("BLEU-nopunct");

      std::vector<std::string> hyps;
      bool complete = found != nullptr;
      if (found) {
        for (const auto& id : t.ids) {
          auto it = found->hypotheses.find(id);
          if (it == found->hypotheses.end()) {
            complete = false;
            break;
          }
          hyps.push_back(it->second);
        }
      }
      for (const auto& metric : metrics) {
        EvalCell cell{system, t.name, metric, std::nullopt,
                      static_cast<int>(t.ids.size())};
        if (complete) {
          if (metric == "WER") {
            cell.value = Wer(t.references, hyps);
          } else if (metric == "BLEU") {
            BleuResult b = CorpusBleu(t.references, hyps);
            if (!b.note.empty()) report.notes.push_back(system + "/" + t.name + ": " + b.note);
            cell.value = b.score;
          } else {
            std::vector<std::string> refs_np, hyps_np;
            for (const auto& r : t.references) refs_np.push_back(StripPunct(r));
            for (const auto& h : hyps) hyps_np.push_back(StripPunct(h));
            cell.value = CorpusBleu(refs_np, hyps_np).score;
          }
        }
        report.cells.push_back(std::move(cell));
      }
      if (!complete)
        report.notes.push_back("missing decode output: " + system + " on " + t.name);
    }
  }
  return report;
}

}  // namespace csforge
