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

#include "csforge/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "csforge/errors.h"
#include "csforge/text.h"

namespace csforge {

void TrainConfig::Validate() const {
  if (max_updates < 0) throw ConfigError("train.max_updates must be >= 0");
  if (tokens_per_update <= 0) throw ConfigError("train.tokens_per_update must be > 0");
  if (max_updates > 0 && warmup_updates >= max_updates)
    throw ConfigError("train.warmup_updates must be < train.max_updates");
  if (warmup_updates < 1) throw ConfigError("train.warmup_updates must be >= 1");
  if (!(peak_lr > 0.0)) throw ConfigError("train.peak_lr must be > 0");
  if (epochs_to_average < 1) throw ConfigError("train.epochs_to_average must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw ConfigError("train.label_smoothing must be in [0, 1)");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("train.dropout must be in [0, 1)");
  if (max_frames < 1) throw ConfigError("train.max_frames must be >= 1");
}

nlohmann::ordered_json TrainConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["max_updates"] = max_updates;
  j["tokens_per_update"] = tokens_per_update;
  j["peak_lr"] = peak_lr;
  j["warmup_updates"] = warmup_updates;
  j["max_frames"] = max_frames;
  j["freeze_target_embeddings"] = freeze_target_embeddings;
  j["seed"] = seed;
  j["epochs_to_average"] = epochs_to_average;
  j["label_smoothing"] = label_smoothing;
  j["dropout"] = dropout;
  j["clip_norm"] = clip_norm;
  j["adam"] = {adam_beta1, adam_beta2, adam_eps};
  return j;
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.max_updates = j.value("max_updates", c.max_updates);
  c.tokens_per_update = j.value("tokens_per_update", c.tokens_per_update);
  c.peak_lr = j.value("peak_lr", c.peak_lr);
  c.warmup_updates = j.value("warmup_updates", c.warmup_updates);
  c.max_frames = j.value("max_frames", c.max_frames);
  c.freeze_target_embeddings = j.value("freeze_target_embeddings", c.freeze_target_embeddings);
  c.seed = j.value("seed", c.seed);
  c.epochs_to_average = j.value("epochs_to_average", c.epochs_to_average);
  c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
  c.dropout = j.value("dropout", c.dropout);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  if (j.contains("adam")) {
    auto a = j.at("adam").get<std::vector<double>>();
    if (a.size() != 3) throw ConfigError("train.adam needs [beta1, beta2, eps]");
    c.adam_beta1 = a[0];
    c.adam_beta2 = a[1];
    c.adam_eps = a[2];
  }
  return c;
}

double LearningRate(const TrainConfig& config, int update) {
  if (update <= config.warmup_updates)
    return config.peak_lr * update / config.warmup_updates;
  return config.peak_lr * std::sqrt(static_cast<double>(config.warmup_updates) / update);
}

std::vector<Example> MakeExamples(const Manifest& manifest, const TargetVocab& vocab) {
  std::vector<Example> out;
  out.reserve(manifest.size());
  for (const auto& u : manifest.utterances) out.push_back({u.frames, vocab.Encode(u.target)});
  return out;
}

std::vector<std::vector<size_t>> PackBatches(const std::vector<Example>& examples,
                                             int tokens_per_batch, uint64_t seed) {
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(MixSeed(seed));
  std::shuffle(order.begin(), order.end(), rng);
  // Length-sorted windows keep padding low.
  constexpr size_t kWindow = 512;
  for (size_t b = 0; b < order.size(); b += kWindow) {
    const auto end = order.begin() + static_cast<long>(std::min(order.size(), b + kWindow));
    std::stable_sort(order.begin() + static_cast<long>(b), end, [&](size_t x, size_t y) {
      return examples[x].frames.size() < examples[y].frames.size();
    });
  }
  std::vector<std::vector<size_t>> batches;
  std::vector<size_t> cur;
  long tokens = 0;
  for (size_t idx : order) {
    const long t = static_cast<long>(examples[idx].tokens.size()) + 1;
    if (!cur.empty() && tokens + t > tokens_per_batch) {
      batches.push_back(std::move(cur));
      cur.clear();
      tokens = 0;
    }
    cur.push_back(idx);
    tokens += t;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

namespace {

double PerplexityOf(const Seq2SeqModel& model, const std::vector<Example>& examples) {
  if (examples.empty()) throw PreconditionError("perplexity of an empty set");
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  double nll = 0.0;
  long tokens = 0;
  constexpr size_t kBatch = 64;
  for (size_t b = 0; b < order.size(); b += kBatch) {
    std::vector<Example> batch(examples.begin() + static_cast<long>(b),
                               examples.begin() + static_cast<long>(std::min(order.size(), b + kBatch)));
    LossStats s = model.ForwardBackward(batch, {}, nullptr);
    nll += s.nll;
    tokens += s.tokens;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

void Emit(TrainLog* log, const std::string& line) {
  if (log && log->sink) log->sink(line);
}

}  // namespace

double Perplexity(const Seq2SeqModel& model, const Manifest& manifest) {
  if (manifest.empty()) throw PreconditionError("perplexity needs a non-empty manifest");
  return PerplexityOf(model, MakeExamples(manifest, model.vocab()));
}

std::vector<Checkpoint> Train(Seq2SeqModel& model, const Manifest& train,
                              const Manifest& dev, const TrainConfig& config,
                              TrainLog* log) {
  config.Validate();
  if (train.empty()) throw PreconditionError("training manifest is empty");

  std::vector<Example> examples;
  int filtered = 0;
  for (const auto& u : train.utterances) {
    if (static_cast<int>(u.frames.size()) > config.max_frames) {
      ++filtered;
      continue;
    }
    examples.push_back({u.frames, model.vocab().Encode(u.target)});
  }
  if (examples.empty()) throw PreconditionError("no training utterance fits max_frames");
  if (log) log->filtered_utterances = filtered;
  if (filtered > 0)
    Emit(log, "filtered " + std::to_string(filtered) + " utterances longer than " +
                  std::to_string(config.max_frames) + " frames");
  std::vector<Example> dev_examples =
      dev.empty() ? examples : MakeExamples(dev, model.vocab());

  const size_t n = model.num_params();
  ParamVector<float> grad(n);
  std::vector<float> m(n, 0.0f), v(n, 0.0f);
  size_t frozen_begin = 0, frozen_end = 0;
  if (config.freeze_target_embeddings) {
    const ParamSpec& s = model.layout().Get("tgt_embed");
    frozen_begin = s.offset;
    frozen_end = s.offset + s.size();
  }
  std::mt19937_64 rng(MixSeed(config.seed));
  ForwardOptions fwd{config.label_smoothing, config.dropout, &rng};

  std::vector<Checkpoint> checkpoints;
  int update = 0;
  int epoch = 0;
  while (update < config.max_updates) {
    ++epoch;
    const auto batches = PackBatches(examples, config.tokens_per_update,
                                     DeriveSeed(config.seed, static_cast<uint64_t>(epoch)));
    double epoch_loss = 0.0;
    long epoch_tokens = 0;
    for (const auto& idx : batches) {
      if (update >= config.max_updates) break;
      ++update;
      std::vector<Example> batch;
      batch.reserve(idx.size());
      long tokens = 0;
      for (size_t k : idx) {
        batch.push_back(examples[k]);
        tokens += static_cast<long>(examples[k].tokens.size()) + 1;
      }
      std::fill(grad.begin(), grad.end(), 0.0f);
      const double lr = LearningRate(config, update);
      LossStats s = model.ForwardBackward(batch, fwd, &grad, 1.0f / static_cast<float>(tokens));
      if (!std::isfinite(s.objective)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "non-finite loss at update %d (lr=%.3g, epoch %d)",
                      update, lr, epoch);
        throw NumericError(buf);
      }
      epoch_loss += s.nll;
      epoch_tokens += s.tokens;

      for (size_t i = frozen_begin; i < frozen_end; ++i) grad[i] = 0.0f;
      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (float gv : grad) sq += static_cast<double>(gv) * gv;
        const double norm = std::sqrt(sq);
        if (!std::isfinite(norm)) {
          char buf[160];
          std::snprintf(buf, sizeof(buf), "non-finite gradient at update %d (lr=%.3g)",
                        update, lr);
          throw NumericError(buf);
        }
        if (norm > config.clip_norm) {
          const float scale = static_cast<float>(config.clip_norm / norm);
          for (float& gv : grad) gv *= scale;
        }
      }
      const double b1 = config.adam_beta1, b2 = config.adam_beta2;
      const double c1 = 1.0 - std::pow(b1, update), c2 = 1.0 - std::pow(b2, update);
      const float step = static_cast<float>(lr / c1);
      const float inv_c2 = static_cast<float>(1.0 / c2);
      const float eps = static_cast<float>(config.adam_eps);
      auto& p = model.params();
      for (size_t i = 0; i < n; ++i) {
        if (i >= frozen_begin && i < frozen_end) continue;
        m[i] = static_cast<float>(b1) * m[i] + static_cast<float>(1.0 - b1) * grad[i];
        v[i] = static_cast<float>(b2) * v[i] + static_cast<float>(1.0 - b2) * grad[i] * grad[i];
        p[i] -= step * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
      }
    }
    Checkpoint ck;
    ck.params = model.params();
    ck.epoch = epoch;
    ck.updates = update;
    ck.dev_perplexity = PerplexityOf(model, dev_examples);
    if (!std::isfinite(ck.dev_perplexity))
      throw NumericError("non-finite dev perplexity after epoch " + std::to_string(epoch));
    char buf[200];
    std::snprintf(buf, sizeof(buf), "epoch %d  updates %d  lr %.2e  train-ppl %.4f  dev-ppl %.4f",
                  epoch, update, LearningRate(config, std::max(update, 1)),
                  std::exp(epoch_loss / std::max<long>(1, epoch_tokens)), ck.dev_perplexity);
    Emit(log, buf);
    checkpoints.push_back(std::move(ck));
  }
  if (log) log->updates = update;
  return checkpoints;
}

std::vector<int> SelectBestCheckpoints(const std::vector<Checkpoint>& checkpoints, int k) {
  std::vector<int> idx(checkpoints.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return checkpoints[a].dev_perplexity < checkpoints[b].dev_perplexity;
  });
  if (static_cast<int>(idx.size()) > k) idx.resize(k);
  return idx;
}

Seq2SeqModel AverageCheckpoints(const Seq2SeqModel& like,
                                const std::vector<Checkpoint>& checkpoints, int k) {
  if (checkpoints.empty()) throw PreconditionError("no checkpoints to average");
  if (k < 1) throw ConfigError("number of checkpoints to average must be >= 1");
  const auto chosen = SelectBestCheckpoints(checkpoints, k);
  const size_t n = like.num_params();
  std::vector<double> sum(n, 0.0);
  for (int c : chosen) {
    const auto& p = checkpoints[c].params;
    if (p.size() != n) throw PreconditionError("checkpoint shape mismatch");
    for (size_t i = 0; i < n; ++i) sum[i] += p[i];
  }
  Seq2SeqModel out = like;
  for (size_t i = 0; i < n; ++i)
    out.params()[i] = static_cast<float>(sum[i] / static_cast<double>(chosen.size()));
  return out;
}

Seq2SeqModel FinetuneDA(const Seq2SeqModel& model, const Manifest& da, const Manifest& dev,
                        const TrainConfig& config, TrainLog* log) {
  if (config.max_updates == 0) return model;
  Seq2SeqModel work = model;
  auto checkpoints = Train(work, da, dev, config, log);
  return AverageCheckpoints(model, checkpoints, config.epochs_to_average);
}

}  // namespace csforge
