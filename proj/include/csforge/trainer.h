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

#ifndef CSFORGE_TRAINER_H_
#define CSFORGE_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csforge/corpus.h"
#include "csforge/model.h"
#include "json.hpp"

namespace csforge {

struct TrainConfig {
  int max_updates = 3000;
  int tokens_per_update = 2000;  // cap on summed target tokens per step
  double peak_lr = 1e-3;
  int warmup_updates = 300;
  int max_frames = kDefaultMaxFrames;
  bool freeze_target_embeddings = true;
  uint64_t seed = 0;
  int epochs_to_average = 5;
  double label_smoothing = 0.1;
  double dropout = 0.1;
  double clip_norm = 5.0;  // global gradient norm clip, 0 disables
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

// Linear warmup to peak_lr, then inverse square-root decay. `update` is
// 1-based.
double LearningRate(const TrainConfig& config, int update);

struct Checkpoint {
  ParamVector<float> params;
  int epoch = 0;
  int updates = 0;
  double dev_perplexity = 0.0;
};

struct TrainLog {
  std::function<void(const std::string&)> sink;
  int filtered_utterances = 0;
  int updates = 0;
};

// Teacher-forced cross-entropy training with Adam. Returns one checkpoint per
// completed epoch (plus one for a trailing partial epoch).
std::vector<Checkpoint> Train(Seq2SeqModel& model, const Manifest& train,
                              const Manifest& dev, const TrainConfig& config,
                              TrainLog* log = nullptr);

// Mean of the parameters of the `k` lowest-perplexity checkpoints (all if
// fewer). `like` supplies configuration and vocabulary.
Seq2SeqModel AverageCheckpoints(const Seq2SeqModel& like,
                                const std::vector<Checkpoint>& checkpoints, int k);
std::vector<int> SelectBestCheckpoints(const std::vector<Checkpoint>& checkpoints, int k);

// Continued training on augmented data followed by checkpoint averaging.
// max_updates == 0 returns the input model.
Seq2SeqModel FinetuneDA(const Seq2SeqModel& model, const Manifest& da,
                        const Manifest& dev, const TrainConfig& config,
                        TrainLog* log = nullptr);

// exp(mean token NLL), EOS included, padding excluded.
double Perplexity(const Seq2SeqModel& model, const Manifest& manifest);

// Greedy packing into batches of at most `tokens_per_batch` target tokens
// (EOS included). Returns index lists.
std::vector<std::vector<size_t>> PackBatches(const std::vector<Example>& examples,
                                             int tokens_per_batch, uint64_t seed);

std::vector<Example> MakeExamples(const Manifest& manifest, const TargetVocab& vocab);

}  // namespace csforge

#endif  // CSFORGE_TRAINER_H_
