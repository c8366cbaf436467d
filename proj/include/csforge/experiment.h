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

#ifndef CSFORGE_EXPERIMENT_H_
#define CSFORGE_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "csforge/augment.h"
#include "csforge/corpus.h"
#include "csforge/evaluate.h"
#include "csforge/model.h"
#include "csforge/trainer.h"
#include "json.hpp"

namespace csforge {

struct AugmentSweep {
  std::vector<double> sweep = {0.05, 0.15, 0.30, 0.75};
  double one_switch = 0.8;
  double two_switch = 0.2;
  int max_frames = kDefaultMaxFrames;
  int max_retries = 100;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static AugmentSweep FromJson(const nlohmann::json& j);
  DAConfig ForP(double p, uint64_t seed) const;
};

struct PunctStepConfig {
  int heldout = 300;  // test_parallel sentences used for label accuracy

  nlohmann::ordered_json ToJson() const;
  static PunctStepConfig FromJson(const nlohmann::json& j);
};

// System names accepted in ExperimentConfig::systems.
inline constexpr const char* kSystemAsr = "ASR";
inline constexpr const char* kSystemSt = "ST";
inline constexpr const char* kSystemLast = "LAST";
inline constexpr const char* kSystemLastHalf = "LAST_half";
inline constexpr const char* kSystemLastDa = "LAST+DA";
inline constexpr const char* kSystemPipeline = "pipeline";
inline constexpr const char* kSystemGivenLidLast = "given-LID+LAST";

struct ExperimentConfig {
  uint64_t seed = 1;
  std::filesystem::path output_dir = "runs/default";
  CorpusConfig corpus;
  CsTestsetConfig testset;
  AugmentSweep augment;
  ModelConfig model;
  TrainConfig train;
  TrainConfig finetune;
  std::vector<std::string> systems = {kSystemAsr,  kSystemSt,       kSystemLast,
                                      kSystemLastHalf, kSystemLastDa, kSystemPipeline,
                                      kSystemGivenLidLast};
  EvalFlags eval;
  PunctStepConfig punct;

  bool HasSystem(std::string_view name) const;
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  // Relative output_dir is resolved against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);
  static ExperimentConfig Load(const std::filesystem::path& path);
};

// Decoded system name for a DA sweep value, e.g. "LAST+DA 5%".
std::string DaSystemName(double p);
// File-name safe form, e.g. "LAST+DA_p0.05".
std::string DaFileStem(double p);

// Steps of the experiment grid. Every artifact is written under output_dir
// next to a "<artifact>.config.json" echo holding the producing
// configuration, the hashes of upstream artifacts and its own hash. A step
// whose echo hash matches and whose outputs exist is skipped.
class Experiment {
 public:
  using Sink = std::function<void(const std::string&)>;

  explicit Experiment(ExperimentConfig config, Sink log = {});

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& out() const { return config_.output_dir; }

  void Synth();
  void Testset();
  void Augment();
  void Train();
  void FinetuneDA();
  void Decode();
  void Evaluate();
  void Compare();
  void GradCheck();
  void PunctTrain();
  // Restores casing and punctuation line by line. Empty paths select the
  // bare held-out sentences and punct/heldout_restored.txt.
  void PunctApply(const std::filesystem::path& input = {},
                  const std::filesystem::path& output = {});
  void Reproduce();

  // Number of models trained (not skipped) by this object.
  int models_trained() const { return models_trained_; }
  int steps_skipped() const { return steps_skipped_; }

  // Canonical artifact paths.
  std::filesystem::path DataPath(const std::string& name) const;
  std::filesystem::path ModelPath(const std::string& stem) const;
  std::filesystem::path DecodePath(const std::string& system,
                                   const std::string& testset) const;

  // Systems decoded on each test set, in report order.
  std::vector<std::string> SystemsFor(TestsetKind kind) const;
  static std::vector<std::string> TestsetNames();

 private:
  struct Echo {
    std::filesystem::path path;
    nlohmann::ordered_json body;
    std::string hash;
  };

  Echo MakeEcho(const std::filesystem::path& artifact, const std::string& step,
                nlohmann::ordered_json config) const;
  bool UpToDate(const Echo& echo, const std::vector<std::filesystem::path>& outputs);
  void WriteEcho(const Echo& echo) const;
  // Hash recorded by an upstream artifact's echo; throws MissingArtifactError
  // when the artifact or its echo is absent.
  std::string UpstreamHash(const std::filesystem::path& artifact) const;
  void Log(const std::string& line) const;

  Seq2SeqModel LoadSystemModel(const std::string& stem) const;
  void TrainSystem(const std::string& stem, const Manifest& train, const Manifest& dev,
                   const std::vector<std::filesystem::path>& inputs, uint64_t stream);

  ExperimentConfig config_;
  Sink log_;
  int models_trained_ = 0;
  int steps_skipped_ = 0;
};

// Table-3 style comparison on the code-switching set and Table-2 style
// comparison on the monolingual sets, rendered from an EvalReport.
std::string FormatComparison(const EvalReport& report, const ExperimentConfig& config);

}  // namespace csforge

#endif  // CSFORGE_EXPERIMENT_H_
