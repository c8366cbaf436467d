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

#include "csforge/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csforge/errors.h"
#include "csforge/gradcheck.h"
#include "csforge/manifest.h"
#include "csforge/pipeline.h"
#include "csforge/punct.h"
#include "csforge/text.h"

namespace csforge {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Seed streams derived from the experiment seed.
constexpr uint64_t kStreamLexicon = 1;
constexpr uint64_t kStreamCorpus = 2;
constexpr uint64_t kStreamMono = 3;
constexpr uint64_t kStreamCsTest = 4;
constexpr uint64_t kStreamGradCheck = 5;
constexpr uint64_t kStreamTrainBase = 10;
constexpr uint64_t kStreamDaData = 1000000;
constexpr uint64_t kStreamDaTrain = 2000000;

uint64_t PStream(double p) { return static_cast<uint64_t>(std::llround(p * 10000.0)); }

// Rejects keys that the section does not define.
void CheckKeys(const nlohmann::json& j, const ordered_json& known, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError(section + "." + key + ": unknown field");
}

template <typename F>
auto ParseSection(const nlohmann::json& j, const char* section, F&& parse) {
  try {
    return parse(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(section) + ": " + e.what());
  }
}

template <typename F>
void ValidateSection(const char* section, F&& validate) {
  try {
    validate();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    // Sections sharing a config type (train/finetune) are re-prefixed.
    const std::string prefix = std::string(section) + ".";
    if (msg.rfind(prefix, 0) != 0) msg = std::string(section) + ": " + msg;
    throw ConfigError(msg);
  }
}

std::string FileStem(const std::string& system) {
  std::string out;
  for (char c : system) {
    if (c == ' ')
      out += '_';
    else if (c == '%')
      out += "pct";
    else
      out += c;
  }
  return out;
}

Manifest FilterKind(const Manifest& m, UtteranceKind kind) {
  Manifest out;
  out.meta = m.meta;
  for (const auto& u : m.utterances)
    if (u.kind == kind) out.utterances.push_back(u);
  return out;
}

Manifest Concat(const Manifest& a, const Manifest& b) {
  Manifest out;
  out.meta = a.meta;
  out.utterances = a.utterances;
  out.utterances.insert(out.utterances.end(), b.utterances.begin(), b.utterances.end());
  return out;
}

// Every second utterance, starting with the first.
Manifest EverySecond(const Manifest& m) {
  Manifest out;
  out.meta = m.meta;
  for (size_t i = 0; i < m.utterances.size(); i += 2) out.utterances.push_back(m.utterances[i]);
  return out;
}

void RequireFile(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifactError("missing artifact: " + path.string());
}

std::map<std::string, std::string> ReadDecodeOutput(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(ReadTextFile(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    out[j.at("id").get<std::string>()] = j.at("hypothesis").get<std::string>();
  }
  return out;
}

const char* kTestsets[] = {"test_asr", "test_st", "test_cs"};

TestsetKind KindOfTestset(const std::string& name) {
  if (name == "test_asr") return TestsetKind::kAsr;
  if (name == "test_st") return TestsetKind::kSt;
  return TestsetKind::kCs;
}

std::string DisplayName(const std::string& system) {
  if (system == kSystemPipeline) return "given LID + ASR or ST";
  if (system == kSystemGivenLidLast) return "given LID + LAST";
  if (system == kSystemLastHalf) return "LAST half data";
  if (system.rfind("LAST+DA ", 0) == 0) return "  +DA " + system.substr(8);
  return system;
}

std::string FormatValue(const EvalCell* cell, bool percent) {
  if (!cell || !cell->value) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", percent ? *cell->value * 100.0 : *cell->value);
  return buf;
}

}  // namespace

// --- configuration ----------------------------------------------------------

void AugmentSweep::Validate() const {
  for (size_t i = 0; i < sweep.size(); ++i)
    if (!(sweep[i] >= 0.0 && sweep[i] <= 0.75))
      throw ConfigError("augment.sweep[" + std::to_string(i) + "] must be in [0, 0.75], got " +
                        std::to_string(sweep[i]));
  std::set<uint64_t> seen;
  for (double p : sweep)
    if (!seen.insert(PStream(p)).second)
      throw ConfigError("augment.sweep contains a duplicate value");
  ForP(0.0, 0).Validate();
}

ordered_json AugmentSweep::ToJson() const {
  ordered_json j;
  j["sweep"] = sweep;
  j["switch_dist"] = {{"1", one_switch}, {"2", two_switch}};
  j["max_frames"] = max_frames;
  j["max_retries"] = max_retries;
  return j;
}

AugmentSweep AugmentSweep::FromJson(const nlohmann::json& j) {
  AugmentSweep a;
  CheckKeys(j, a.ToJson(), "augment");
  if (j.contains("sweep")) a.sweep = j.at("sweep").get<std::vector<double>>();
  if (j.contains("switch_dist")) {
    const auto& d = j.at("switch_dist");
    a.one_switch = d.value("1", a.one_switch);
    a.two_switch = d.value("2", a.two_switch);
  }
  a.max_frames = j.value("max_frames", a.max_frames);
  a.max_retries = j.value("max_retries", a.max_retries);
  return a;
}

DAConfig AugmentSweep::ForP(double p, uint64_t seed) const {
  DAConfig c;
  c.p_multi = p;
  c.one_switch = one_switch;
  c.two_switch = two_switch;
  c.max_frames = max_frames;
  c.max_retries = max_retries;
  c.seed = seed;
  return c;
}

ordered_json PunctStepConfig::ToJson() const {
  ordered_json j;
  j["heldout"] = heldout;
  return j;
}

PunctStepConfig PunctStepConfig::FromJson(const nlohmann::json& j) {
  PunctStepConfig p;
  CheckKeys(j, p.ToJson(), "punct");
  p.heldout = j.value("heldout", p.heldout);
  return p;
}

bool ExperimentConfig::HasSystem(std::string_view name) const {
  return std::find(systems.begin(), systems.end(), name) != systems.end();
}

void ExperimentConfig::Validate() const {
  ValidateSection("corpus", [&] { corpus.Validate(); });
  ValidateSection("testset", [&] { testset.Validate(); });
  ValidateSection("augment", [&] { augment.Validate(); });
  ValidateSection("model", [&] { model.Validate(); });
  ValidateSection("train", [&] { train.Validate(); });
  ValidateSection("finetune", [&] { finetune.Validate(); });
  if (model.acoustic_vocab != AcousticAlphabet::kNumSymbols)
    throw ConfigError("model.acoustic_vocab must be " +
                      std::to_string(AcousticAlphabet::kNumSymbols));
  if (punct.heldout < 0) throw ConfigError("punct.heldout must be >= 0");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");

  static const std::set<std::string> kKnown = {
      kSystemAsr,    kSystemSt,       kSystemLast,        kSystemLastHalf,
      kSystemLastDa, kSystemPipeline, kSystemGivenLidLast};
  for (size_t i = 0; i < systems.size(); ++i)
    if (!kKnown.count(systems[i]))
      throw ConfigError("systems[" + std::to_string(i) + "]: unknown system '" + systems[i] +
                        "'");
  if (systems.empty()) throw ConfigError("systems: must not be empty");
  if (HasSystem(kSystemLastDa) && augment.sweep.empty())
    throw ConfigError("augment.sweep: LAST+DA requires at least one value");
  if (corpus.n_asr < 1 &&
      (HasSystem(kSystemAsr) || HasSystem(kSystemPipeline)))
    throw ConfigError("corpus.n_asr: the ASR system needs training data");
  if (corpus.n_st < 1 && (HasSystem(kSystemSt) || HasSystem(kSystemPipeline)))
    throw ConfigError("corpus.n_st: the ST system needs training data");
  if (corpus.n_test < 1) throw ConfigError("corpus.n_test must be >= 1");
}

ordered_json ExperimentConfig::ToJson() const {
  ordered_json j;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["corpus"] = corpus.ToJson();
  j["testset"] = testset.ToJson();
  j["augment"] = augment.ToJson();
  j["model"] = model.ToJson();
  j["train"] = train.ToJson();
  j["finetune"] = finetune.ToJson();
  j["systems"] = systems;
  j["eval"] = {{"no_punct_bleu", eval.no_punct_bleu}};
  j["punct"] = punct.ToJson();
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  CheckKeys(j, c.ToJson(), "config");
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("systems")) c.systems = j.at("systems").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;

  auto section = [&](const char* name) -> nlohmann::json {
    return j.contains(name) ? j.at(name) : nlohmann::json::object();
  };
  c.corpus = ParseSection(section("corpus"), "corpus", [&](const nlohmann::json& s) {
    CheckKeys(s, c.corpus.ToJson(), "corpus");
    return CorpusConfig::FromJson(s);
  });
  c.testset = ParseSection(section("testset"), "testset", [&](const nlohmann::json& s) {
    CheckKeys(s, c.testset.ToJson(), "testset");
    return CsTestsetConfig::FromJson(s);
  });
  c.augment = ParseSection(section("augment"), "augment", AugmentSweep::FromJson);
  c.model = ParseSection(section("model"), "model", [&](const nlohmann::json& s) {
    CheckKeys(s, c.model.ToJson(), "model");
    return ModelConfig::FromJson(s);
  });
  c.train = ParseSection(section("train"), "train", [&](const nlohmann::json& s) {
    CheckKeys(s, c.train.ToJson(), "train");
    return TrainConfig::FromJson(s);
  });
  c.finetune = ParseSection(section("finetune"), "finetune", [&](const nlohmann::json& s) {
    CheckKeys(s, c.finetune.ToJson(), "finetune");
    return TrainConfig::FromJson(s);
  });
  ParseSection(section("eval"), "eval", [&](const nlohmann::json& s) {
    CheckKeys(s, ordered_json{{"no_punct_bleu", true}}, "eval");
    c.eval.no_punct_bleu = s.value("no_punct_bleu", c.eval.no_punct_bleu);
    return 0;
  });
  c.punct = ParseSection(section("punct"), "punct", PunctStepConfig::FromJson);
  c.Validate();
  return c;
}

ExperimentConfig ExperimentConfig::Load(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifactError("missing config file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return FromJson(j, fs::absolute(path).parent_path());
}

std::string DaSystemName(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "LAST+DA %g%%", p * 100.0);
  return buf;
}

std::string DaFileStem(double p) { return FileStem(DaSystemName(p)); }

// --- experiment steps -------------------------------------------------------

Experiment::Experiment(ExperimentConfig config, Sink log)
    : config_(std::move(config)), log_(std::move(log)) {
  config_.Validate();
  std::error_code ec;
  fs::create_directories(config_.output_dir, ec);
  if (ec || !fs::is_directory(config_.output_dir))
    throw ConfigError("output_dir: cannot create " + config_.output_dir.string());
}

fs::path Experiment::DataPath(const std::string& name) const {
  return out() / "data" / name;
}

fs::path Experiment::ModelPath(const std::string& stem) const {
  return out() / "models" / (stem + ".bin");
}

fs::path Experiment::DecodePath(const std::string& system, const std::string& testset) const {
  return out() / "decode" / FileStem(system) / (testset + ".jsonl");
}

std::vector<std::string> Experiment::TestsetNames() {
  return {std::begin(kTestsets), std::end(kTestsets)};
}

std::vector<std::string> Experiment::SystemsFor(TestsetKind kind) const {
  std::vector<std::string> out;
  auto add = [&](const char* name) {
    if (config_.HasSystem(name)) out.push_back(name);
  };
  if (kind == TestsetKind::kCs) {
    add(kSystemPipeline);
    add(kSystemGivenLidLast);
  } else {
    add(kind == TestsetKind::kAsr ? kSystemAsr : kSystemSt);
  }
  add(kSystemLastHalf);
  add(kSystemLast);
  if (config_.HasSystem(kSystemLastDa))
    for (double p : config_.augment.sweep) out.push_back(DaSystemName(p));
  return out;
}

void Experiment::Log(const std::string& line) const {
  if (log_) log_(line);
}

Experiment::Echo Experiment::MakeEcho(const fs::path& echo_path, const std::string& step,
                                      ordered_json config) const {
  ordered_json key;
  key["step"] = step;
  key["generator"] = kGeneratorVersion;
  key["config"] = std::move(config);
  Echo e;
  e.path = echo_path;
  e.hash = HashHex(key.dump());
  e.body = key;
  e.body["hash"] = e.hash;
  return e;
}

bool Experiment::UpToDate(const Echo& echo, const std::vector<fs::path>& outputs) {
  if (!fs::exists(echo.path)) return false;
  for (const auto& p : outputs)
    if (!fs::exists(p)) return false;
  try {
    auto j = nlohmann::json::parse(ReadTextFile(echo.path));
    if (j.value("hash", std::string()) != echo.hash) return false;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  ++steps_skipped_;
  Log("[" + echo.body["step"].get<std::string>() + "] up to date: " + echo.path.string());
  return true;
}

void Experiment::WriteEcho(const Echo& echo) const {
  WriteTextFile(echo.path, echo.body.dump(2) + "\n");
}

std::string Experiment::UpstreamHash(const fs::path& echo_path) const {
  RequireFile(echo_path);
  try {
    return nlohmann::json::parse(ReadTextFile(echo_path)).at("hash").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw MissingArtifactError("unreadable config echo: " + echo_path.string());
  }
}

void Experiment::Synth() {
  ordered_json cfg;
  cfg["seed"] = config_.seed;
  cfg["generator_version"] = kGeneratorVersion;
  cfg["corpus"] = config_.corpus.ToJson();
  Echo echo = MakeEcho(DataPath("synth.config.json"), "synth", cfg);
  const std::vector<fs::path> outputs = {
      DataPath("lexicon.json"),       DataPath("train_asr.jsonl"), DataPath("train_st.jsonl"),
      DataPath("dev.jsonl"),          DataPath("test_parallel.jsonl"),
      DataPath("test_asr.jsonl"),     DataPath("test_st.jsonl")};
  if (UpToDate(echo, outputs)) return;

  const CorpusConfig& cc = config_.corpus;
  Lexicon lexicon = BuildLexicon(cc.lexicon_size, DeriveSeed(config_.seed, kStreamLexicon));
  CorpusBundle bundle = GenerateCorpus(lexicon, cc, DeriveSeed(config_.seed, kStreamCorpus));
  auto [test_asr, test_st] = RenderMonoTestsets(bundle.test_parallel, lexicon, cc.synth,
                                                DeriveSeed(config_.seed, kStreamMono));
  WriteLexicon(lexicon, outputs[0]);
  WriteManifest(bundle.asr, outputs[1]);
  WriteManifest(bundle.st, outputs[2]);
  WriteManifest(bundle.dev, outputs[3]);
  WriteParallelSet(bundle.test_parallel, outputs[4]);
  WriteManifest(test_asr, outputs[5]);
  WriteManifest(test_st, outputs[6]);
  WriteEcho(echo);
  Log("[synth] " + std::to_string(bundle.asr.size()) + " asr, " +
      std::to_string(bundle.st.size()) + " st, " + std::to_string(bundle.dev.size()) +
      " dev, " + std::to_string(bundle.test_parallel.sentences.size()) + " test sentences");
}

void Experiment::Testset() {
  ordered_json cfg;
  cfg["seed"] = config_.seed;
  cfg["testset"] = config_.testset.ToJson();
  cfg["upstream"] = {{"synth", UpstreamHash(DataPath("synth.config.json"))}};
  const fs::path output = DataPath("test_cs.jsonl");
  Echo echo = MakeEcho(DataPath("test_cs.config.json"), "testset", cfg);
  if (UpToDate(echo, {output})) return;

  Lexicon lexicon = ReadLexicon(DataPath("lexicon.json"));
  ParallelSet parallel = ReadParallelSet(DataPath("test_parallel.jsonl"));
  Manifest cs = BuildCsTestset(parallel, lexicon, config_.testset,
                               DeriveSeed(config_.seed, kStreamCsTest));
  WriteManifest(cs, output);
  WriteEcho(echo);
  Log("[testset] " + std::to_string(cs.size()) + " code-switched utterances");
}

void Experiment::Augment() {
  const std::string synth_hash = UpstreamHash(DataPath("synth.config.json"));
  std::optional<std::pair<Manifest, Manifest>> pool;
  for (double p : config_.augment.sweep) {
    const DAConfig da =
        config_.augment.ForP(p, DeriveSeed(config_.seed, kStreamDaData + PStream(p)));
    ordered_json cfg;
    cfg["augment"] = da.ToJson();
    cfg["upstream"] = {{"synth", synth_hash}};
    const std::string stem = "da_" + DaFileStem(p);
    const fs::path output = DataPath(stem + ".jsonl");
    Echo echo = MakeEcho(DataPath(stem + ".config.json"), "augment", cfg);
    if (UpToDate(echo, {output})) continue;
    if (!pool)
      pool.emplace(ReadManifest(DataPath("train_asr.jsonl")),
                   ReadManifest(DataPath("train_st.jsonl")));
    Manifest out = ApplyDA(pool->first, pool->second, da);
    WriteManifest(out, output);
    WriteEcho(echo);
    Log("[augment] p=" + std::to_string(p) + ": " +
        std::to_string(out.meta.value("achieved_multi", 0)) + " multi-language of " +
        std::to_string(out.size()));
  }
}

Seq2SeqModel Experiment::LoadSystemModel(const std::string& stem) const {
  const fs::path path = ModelPath(stem);
  RequireFile(path);
  return LoadModel(path).model;
}

void Experiment::TrainSystem(const std::string& stem, const Manifest& train,
                             const Manifest& dev, const std::vector<fs::path>& inputs,
                             uint64_t stream) {
  TrainConfig tc = config_.train;
  tc.seed = DeriveSeed(config_.seed, stream);
  ordered_json cfg;
  cfg["system"] = stem;
  cfg["model"] = config_.model.ToJson();
  cfg["train"] = tc.ToJson();
  ordered_json upstream = ordered_json::object();
  for (const auto& in : inputs) upstream[in.filename().string()] = UpstreamHash(in);
  cfg["upstream"] = upstream;
  const fs::path output = ModelPath(stem);
  Echo echo = MakeEcho(out() / "models" / (stem + ".config.json"), "train", cfg);
  if (UpToDate(echo, {output})) return;

  Lexicon lexicon = ReadLexicon(DataPath("lexicon.json"));
  Seq2SeqModel model =
      Seq2SeqModel::Init(config_.model, TargetVocab::FromLexicon(lexicon), tc.seed);
  TrainLog log;
  log.sink = [&](const std::string& line) { Log("[train " + stem + "] " + line); };
  Log("[train " + stem + "] " + std::to_string(train.size()) + " utterances, " +
      std::to_string(model.num_params()) + " parameters");
  std::vector<Checkpoint> checkpoints = csforge::Train(model, train, dev, tc, &log);
  Seq2SeqModel averaged = AverageCheckpoints(model, checkpoints, tc.epochs_to_average);

  ordered_json meta;
  meta["system"] = stem;
  meta["hash"] = echo.hash;
  meta["filtered_utterances"] = log.filtered_utterances;
  meta["updates"] = log.updates;
  auto ckpts = ordered_json::array();
  for (const auto& c : checkpoints)
    ckpts.push_back({{"epoch", c.epoch}, {"updates", c.updates},
                     {"dev_perplexity", c.dev_perplexity}});
  meta["checkpoints"] = ckpts;
  meta["averaged_epochs"] = SelectBestCheckpoints(checkpoints, tc.epochs_to_average);
  if (!dev.empty()) meta["dev_perplexity"] = Perplexity(averaged, dev);
  SaveModel(output, averaged, meta);
  WriteEcho(echo);
  ++models_trained_;
  Log("[train " + stem + "] saved " + output.string());
}

void Experiment::Train() {
  const fs::path synth_echo = DataPath("synth.config.json");
  RequireFile(synth_echo);
  const Manifest asr = ReadManifest(DataPath("train_asr.jsonl"));
  const Manifest st = ReadManifest(DataPath("train_st.jsonl"));
  const Manifest dev = ReadManifest(DataPath("dev.jsonl"));
  const auto& c = config_;
  if (c.HasSystem(kSystemAsr) || c.HasSystem(kSystemPipeline))
    TrainSystem(kSystemAsr, asr, FilterKind(dev, UtteranceKind::kAsr), {synth_echo},
                kStreamTrainBase + 0);
  if (c.HasSystem(kSystemSt) || c.HasSystem(kSystemPipeline))
    TrainSystem(kSystemSt, st, FilterKind(dev, UtteranceKind::kSt), {synth_echo},
                kStreamTrainBase + 1);
  const Manifest both = Concat(asr, st);
  if (c.HasSystem(kSystemLast) || c.HasSystem(kSystemLastDa) ||
      c.HasSystem(kSystemGivenLidLast))
    TrainSystem(kSystemLast, both, dev, {synth_echo}, kStreamTrainBase + 2);
  if (c.HasSystem(kSystemLastHalf))
    TrainSystem(kSystemLastHalf, EverySecond(both), dev, {synth_echo}, kStreamTrainBase + 3);
}

void Experiment::FinetuneDA() {
  if (!config_.HasSystem(kSystemLastDa)) return;
  const fs::path last_echo = out() / "models" / (std::string(kSystemLast) + ".config.json");
  std::optional<Seq2SeqModel> last;
  std::optional<Manifest> dev;
  for (double p : config_.augment.sweep) {
    const std::string stem = DaFileStem(p);
    const fs::path data_echo = DataPath("da_" + stem + ".config.json");
    TrainConfig tc = config_.finetune;
    tc.seed = DeriveSeed(config_.seed, kStreamDaTrain + PStream(p));
    ordered_json cfg;
    cfg["system"] = DaSystemName(p);
    cfg["finetune"] = tc.ToJson();
    cfg["upstream"] = {{"LAST", UpstreamHash(last_echo)}, {"data", UpstreamHash(data_echo)}};
    const fs::path output = ModelPath(stem);
    Echo echo = MakeEcho(out() / "models" / (stem + ".config.json"), "finetune-da", cfg);
    if (UpToDate(echo, {output})) continue;

    if (!last) last = LoadSystemModel(kSystemLast);
    if (!dev) dev = ReadManifest(DataPath("dev.jsonl"));
    const Manifest da = ReadManifest(DataPath("da_" + stem + ".jsonl"));
    TrainLog log;
    log.sink = [&](const std::string& line) { Log("[finetune " + stem + "] " + line); };
    Seq2SeqModel tuned = csforge::FinetuneDA(*last, da, *dev, tc, &log);
    ordered_json meta;
    meta["system"] = DaSystemName(p);
    meta["hash"] = echo.hash;
    meta["p_multi"] = p;
    meta["updates"] = log.updates;
    if (!dev->empty()) meta["dev_perplexity"] = Perplexity(tuned, *dev);
    SaveModel(output, tuned, meta);
    WriteEcho(echo);
    if (tc.max_updates > 0) ++models_trained_;
    Log("[finetune " + stem + "] saved " + output.string());
  }
}

void Experiment::Decode() {
  std::map<std::string, Seq2SeqModel> models;
  auto model = [&](const std::string& stem) -> const Seq2SeqModel& {
    auto it = models.find(stem);
    if (it == models.end()) it = models.emplace(stem, LoadSystemModel(stem)).first;
    return it->second;
  };
  auto model_echo = [&](const std::string& stem) {
    return out() / "models" / (stem + ".config.json");
  };
  std::map<std::string, std::string> da_stems;
  for (double p : config_.augment.sweep) da_stems[DaSystemName(p)] = DaFileStem(p);

  for (const std::string& testset : TestsetNames()) {
    const fs::path test_path = DataPath(testset + ".jsonl");
    const fs::path test_echo =
        testset == "test_cs" ? DataPath("test_cs.config.json") : DataPath("synth.config.json");
    std::optional<Manifest> manifest;
    for (const std::string& system : SystemsFor(KindOfTestset(testset))) {
      std::vector<std::string> stems;
      if (system == kSystemPipeline)
        stems = {kSystemAsr, kSystemSt};
      else if (system == kSystemGivenLidLast)
        stems = {kSystemLast};
      else if (da_stems.count(system))
        stems = {da_stems[system]};
      else
        stems = {system};
      ordered_json cfg;
      cfg["system"] = system;
      cfg["testset"] = testset;
      cfg["decoding"] = "greedy";
      ordered_json upstream;
      upstream[testset] = UpstreamHash(test_echo);
      for (const auto& s : stems) upstream[s] = UpstreamHash(model_echo(s));
      cfg["upstream"] = upstream;
      const fs::path output = DecodePath(system, testset);
      fs::path echo_path = output;
      echo_path.replace_extension(".config.json");
      Echo echo = MakeEcho(echo_path, "decode", cfg);
      if (UpToDate(echo, {output})) continue;

      if (!manifest) {
        RequireFile(test_path);
        manifest = ReadManifest(test_path);
      }
      std::string body;
      for (const auto& utt : manifest->utterances) {
        std::string hyp;
        if (system == kSystemPipeline)
          hyp = PipelineDecode(utt, model(kSystemAsr), model(kSystemSt));
        else if (system == kSystemGivenLidLast)
          hyp = GivenLidDecode(utt, model(kSystemLast));
        else
          hyp = LastDecode(utt, model(stems[0]));
        ordered_json line;
        line["id"] = utt.id;
        line["system"] = system;
        line["hypothesis"] = hyp;
        body += line.dump() + "\n";
      }
      WriteTextFile(output, body);
      WriteEcho(echo);
      Log("[decode] " + system + " on " + testset);
    }
  }
}

namespace {

EvalReport BuildReport(const Experiment& ex, ordered_json* upstream) {
  std::vector<Testset> testsets;
  std::vector<SystemOutput> outputs;
  std::vector<std::string> systems;
  auto add_system = [&](const std::string& s) {
    if (std::find(systems.begin(), systems.end(), s) == systems.end()) systems.push_back(s);
  };
  for (const std::string& name : Experiment::TestsetNames()) {
    const fs::path path = ex.DataPath(name + ".jsonl");
    RequireFile(path);
    Manifest m = ReadManifest(path);
    Testset t;
    t.name = name;
    t.kind = KindOfTestset(name);
    for (const auto& u : m.utterances) {
      t.ids.push_back(u.id);
      t.references.push_back(u.target);
    }
    testsets.push_back(std::move(t));
    for (const std::string& system : ex.SystemsFor(KindOfTestset(name))) {
      add_system(system);
      const fs::path dec = ex.DecodePath(system, name);
      fs::path echo = dec;
      echo.replace_extension(".config.json");
      const std::string key = system + "/" + name;
      if (!fs::exists(dec)) {
        (*upstream)[key] = "missing";
        continue;
      }
      (*upstream)[key] = fs::exists(echo)
                             ? nlohmann::json::parse(ReadTextFile(echo)).value("hash", "")
                             : "unechoed";
      outputs.push_back({system, name, ReadDecodeOutput(dec)});
    }
  }
  auto applicable = [&](const std::string& system, const std::string& testset) {
    const auto planned = ex.SystemsFor(KindOfTestset(testset));
    return std::find(planned.begin(), planned.end(), system) != planned.end();
  };
  EvalReport report = EvaluateSuite(systems, outputs, testsets, ex.config().eval, applicable);
  report.config = {{"seed", ex.config().seed},
                   {"no_punct_bleu", ex.config().eval.no_punct_bleu}};
  return report;
}

}  // namespace

void Experiment::Evaluate() {
  ordered_json upstream = ordered_json::object();
  EvalReport report = BuildReport(*this, &upstream);
  ordered_json cfg;
  cfg["eval"] = {{"no_punct_bleu", config_.eval.no_punct_bleu}};
  cfg["upstream"] = upstream;
  const fs::path json_path = out() / "eval" / "report.json";
  const fs::path text_path = out() / "eval" / "report.txt";
  Echo echo = MakeEcho(out() / "eval" / "report.config.json", "evaluate", cfg);
  if (UpToDate(echo, {json_path, text_path})) return;
  WriteTextFile(json_path, report.ToJson().dump(2) + "\n");
  WriteTextFile(text_path, report.FormatTable());
  WriteEcho(echo);
  Log("[evaluate] wrote " + json_path.string());
}

void Experiment::Compare() {
  ordered_json upstream = ordered_json::object();
  EvalReport report = BuildReport(*this, &upstream);
  ordered_json cfg;
  cfg["eval"] = {{"no_punct_bleu", config_.eval.no_punct_bleu}};
  cfg["upstream"] = upstream;
  const fs::path text_path = out() / "eval" / "compare.txt";
  Echo echo = MakeEcho(out() / "eval" / "compare.config.json", "compare", cfg);
  if (UpToDate(echo, {text_path})) return;
  const std::string table = FormatComparison(report, config_);
  WriteTextFile(text_path, table);
  WriteEcho(echo);
  Log("[compare] wrote " + text_path.string());
}

void Experiment::GradCheck() {
  constexpr double kEpsilon = 1e-4;
  constexpr int kSamples = 100;
  constexpr double kThreshold = 1e-4;
  const uint64_t seed = DeriveSeed(config_.seed, kStreamGradCheck);
  ordered_json cfg;
  cfg["seed"] = seed;
  cfg["epsilon"] = kEpsilon;
  cfg["samples"] = kSamples;
  const fs::path output = out() / "gradcheck.json";
  Echo echo = MakeEcho(out() / "gradcheck.config.json", "gradcheck", cfg);
  if (UpToDate(echo, {output})) return;

  // Tiny double-precision model on a 5-frame sample.
  Lexicon lexicon = BuildLexicon(10, seed);
  TargetVocab vocab = TargetVocab::FromLexicon(lexicon);
  ModelConfig mc;
  mc.embed_dim = 8;
  mc.hidden_dim = 8;
  auto model = Seq2Seq<double>::Init(mc, vocab, seed);
  const std::vector<std::string> words = {lexicon.tgt_words()[1], lexicon.tgt_words()[2]};
  SynthesisOptions synth;
  synth.dwell_max = 1;
  std::vector<int> frames = SynthesizeAudio(words, Language::kTgt, synth, seed);
  frames.resize(5);
  Example sample{frames, vocab.Encode(CapitalizeFirst(words[0]) + ", " + words[1] + ".")};
  GradCheckResult r = csforge::GradCheck(model, sample, kEpsilon, kSamples, seed);

  ordered_json result;
  result["max_rel_error"] = r.max_rel_error;
  result["checked"] = r.checked;
  result["worst_index"] = r.worst_index;
  result["parameters"] = model.num_params();
  result["epsilon"] = kEpsilon;
  result["threshold"] = kThreshold;
  result["pass"] = r.max_rel_error < kThreshold;
  WriteTextFile(output, result.dump(2) + "\n");
  WriteEcho(echo);
  Log("[gradcheck] max relative error " + std::to_string(r.max_rel_error) + " over " +
      std::to_string(r.checked) + " parameters");
  if (!(r.max_rel_error < kThreshold))
    throw NumericError("gradient check failed: max relative error " +
                       std::to_string(r.max_rel_error));
}

void Experiment::PunctTrain() {
  ordered_json cfg;
  cfg["punct"] = config_.punct.ToJson();
  cfg["upstream"] = {{"synth", UpstreamHash(DataPath("synth.config.json"))}};
  const fs::path model_path = out() / "punct" / "restorer.json";
  const fs::path eval_path = out() / "punct" / "restorer.eval.json";
  Echo echo = MakeEcho(out() / "punct" / "restorer.config.json", "punct-train", cfg);
  if (UpToDate(echo, {model_path, eval_path})) return;

  std::vector<std::string> texts;
  for (const char* part : {"train_asr.jsonl", "train_st.jsonl"})
    for (const auto& u : ReadManifest(DataPath(part)).utterances) texts.push_back(u.target);
  Restorer restorer = Restorer::Train(texts);

  const ParallelSet parallel = ReadParallelSet(DataPath("test_parallel.jsonl"));
  long correct = 0, total = 0;
  const size_t n = std::min<size_t>(parallel.sentences.size(), config_.punct.heldout);
  for (size_t i = 0; i < n; ++i) {
    StrippedText gold = StripCasePunct(parallel.sentences[i].target);
    std::vector<PunctLabel> pred = restorer.Predict(SplitWhitespace(gold.bare));
    for (size_t k = 0; k < gold.labels.size(); ++k, ++total)
      if (pred[k] == gold.labels[k]) ++correct;
  }
  ordered_json eval;
  eval["heldout_sentences"] = n;
  eval["labels"] = total;
  eval["label_accuracy"] = total ? static_cast<double>(correct) / total : 0.0;
  WriteTextFile(model_path, restorer.ToJson().dump(1) + "\n");
  WriteTextFile(eval_path, eval.dump(2) + "\n");
  WriteEcho(echo);
  Log("[punct-train] held-out label accuracy " + eval["label_accuracy"].dump());
}

void Experiment::PunctApply(const fs::path& input, const fs::path& output) {
  const fs::path model_path = out() / "punct" / "restorer.json";
  const fs::path model_echo = out() / "punct" / "restorer.config.json";
  std::vector<std::string> lines;
  std::string input_id;
  if (input.empty()) {
    for (const auto& s : ReadParallelSet(DataPath("test_parallel.jsonl")).sentences)
      lines.push_back(s.tgt_bare);
    input_id = UpstreamHash(DataPath("synth.config.json"));
  } else {
    const std::string text = ReadTextFile(input);
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    input_id = HashHex(text);
  }
  const fs::path target = output.empty() ? out() / "punct" / "heldout_restored.txt" : output;
  ordered_json cfg;
  cfg["input"] = input_id;
  cfg["upstream"] = {{"restorer", UpstreamHash(model_echo)}};
  fs::path echo_path = target;
  echo_path += ".config.json";
  Echo echo = MakeEcho(echo_path, "punct-apply", cfg);
  if (UpToDate(echo, {target})) return;

  RequireFile(model_path);
  Restorer restorer = Restorer::FromJson(nlohmann::json::parse(ReadTextFile(model_path)));
  std::string body;
  for (const auto& line : lines) body += restorer.Restore(line) + "\n";
  WriteTextFile(target, body);
  WriteEcho(echo);
  Log("[punct-apply] restored " + std::to_string(lines.size()) + " lines into " +
      target.string());
}

void Experiment::Reproduce() {
  WriteTextFile(out() / "experiment.config.json", config_.ToJson().dump(2) + "\n");
  Synth();
  Testset();
  Augment();
  GradCheck();
  Train();
  FinetuneDA();
  PunctTrain();
  PunctApply();
  Decode();
  Evaluate();
  Compare();
}

std::string FormatComparison(const EvalReport& report, const ExperimentConfig& config) {
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::vector<std::string>& cells) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-24s", name.c_str());
    os << buf;
    for (const auto& c : cells) {
      std::snprintf(buf, sizeof(buf), " %14s", c.c_str());
      os << buf;
    }
    os << "\n";
  };

  os << "Bilingual code-switching test set (test_cs)\n";
  std::vector<std::string> header = {"BLEU"};
  if (config.eval.no_punct_bleu) header.push_back("BLEU no punct");
  row("System", header);
  std::vector<std::string> cs_order;
  for (const char* s : {kSystemPipeline, kSystemGivenLidLast, kSystemLastHalf, kSystemLast})
    if (config.HasSystem(s)) cs_order.push_back(s);
  if (config.HasSystem(kSystemLastDa))
    for (double p : config.augment.sweep) cs_order.push_back(DaSystemName(p));
  for (const auto& s : cs_order) {
    std::vector<std::string> cells = {FormatValue(report.Find(s, "test_cs", "BLEU"), false)};
    if (config.eval.no_punct_bleu)
      cells.push_back(FormatValue(report.Find(s, "test_cs", "BLEU-nopunct"), false));
    row(DisplayName(s), cells);
  }

  os << "\nMonolingual test sets\n";
  row("System", {"test_asr WER", "test_st BLEU"});
  std::vector<std::string> mono_order;
  for (const char* s : {kSystemAsr, kSystemSt, kSystemLastHalf, kSystemLast})
    if (config.HasSystem(s)) mono_order.push_back(s);
  if (config.HasSystem(kSystemLastDa))
    for (double p : config.augment.sweep) mono_order.push_back(DaSystemName(p));
  for (const auto& s : mono_order)
    row(DisplayName(s), {FormatValue(report.Find(s, "test_asr", "WER"), true),
                         FormatValue(report.Find(s, "test_st", "BLEU"), false)});
  for (const auto& note : report.notes) os << "note: " << note << "\n";
  return os.str();
}

}  // namespace csforge
