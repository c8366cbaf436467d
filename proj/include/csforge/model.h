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

#ifndef CSFORGE_MODEL_H_
#define CSFORGE_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csforge/corpus.h"
#include "csforge/vocab.h"
#include "json.hpp"

namespace csforge {

// Parameter and gradient storage. Eigen's vectorised reductions peel a number
// of leading elements that depends on the buffer address; aligning the buffer
// keeps results independent of where the allocation lands.
template <typename T>
using ParamVector = std::vector<T, Eigen::aligned_allocator<T>>;

struct ModelConfig {
  int acoustic_vocab = AcousticAlphabet::kNumSymbols;
  int embed_dim = 32;       // acoustic and target embeddings
  int hidden_dim = 64;      // per encoder direction and decoder
  int encoder_layers = 1;
  int decoder_layers = 1;
  int frame_stack = 1;      // consecutive frames concatenated per encoder step

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

struct ParamSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  size_t offset = 0;
  size_t size() const { return static_cast<size_t>(rows) * cols; }
};

// Named row-major tensors packed into one flat buffer.
class ParamLayout {
 public:
  ParamLayout() = default;
  ParamLayout(const ModelConfig& config, int target_vocab);

  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec& Get(const std::string& name) const;
  size_t total() const { return total_; }

 private:
  void Add(std::string name, int rows, int cols);
  std::vector<ParamSpec> specs_;
  size_t total_ = 0;
};

// One training example: frames and target token ids (without BOS/EOS).
struct Example {
  std::vector<int> frames;
  std::vector<int> tokens;
};

struct LossStats {
  double objective = 0.0;  // label-smoothed training loss, summed over tokens
  double nll = 0.0;        // summed gold negative log-likelihood
  long tokens = 0;         // non-pad target positions, EOS included
};

struct ForwardOptions {
  double label_smoothing = 0.0;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;  // required when dropout > 0
};

// Attention encoder-decoder: stacked bidirectional GRU encoder over frame
// embeddings, GRU decoder with input feeding and bilinear attention over the
// encoder states, tanh attentional layer and a projection to the target
// vocabulary.
template <typename T>
class Seq2Seq {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  Seq2Seq() = default;
  Seq2Seq(ModelConfig config, TargetVocab vocab);

  static Seq2Seq Init(const ModelConfig& config, const TargetVocab& vocab,
                      uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const TargetVocab& vocab() const { return vocab_; }
  const ParamLayout& layout() const { return layout_; }
  ParamVector<T>& params() { return params_; }
  const ParamVector<T>& params() const { return params_; }
  size_t num_params() const { return params_.size(); }

  template <typename U>
  Seq2Seq<U> Cast() const {
    Seq2Seq<U> out(config_, vocab_);
    for (size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<U>(params_[i]);
    return out;
  }

  // Teacher-forced loss over a batch. When `grad` is non-null it must have
  // num_params() entries and receives d(objective * grad_scale)/d(params).
  LossStats ForwardBackward(const std::vector<Example>& batch,
                            const ForwardOptions& options, ParamVector<T>* grad,
                            T grad_scale = T(1)) const;

  // Incremental inference for a single utterance.
  struct Encoded {
    Matrix states;  // 2H x T
    Matrix keys;    // H x T
  };
  struct DecoderState {
    std::vector<Vector> hidden;  // per decoder layer
    Vector feed;                 // previous attentional vector
  };
  Encoded Encode(const std::vector<int>& frames) const;
  DecoderState InitialState() const;
  // Log-probabilities over the vocabulary for the next token.
  Vector Step(const Encoded& enc, DecoderState& state, int prev_token) const;

  bool AllFinite() const;

 private:
  struct BatchGraph;

  ModelConfig config_;
  TargetVocab vocab_;
  ParamLayout layout_;
  ParamVector<T> params_;
};

using Seq2SeqModel = Seq2Seq<float>;

// Autoregressive argmax decoding from BOS until EOS or max_len tokens.
// max_len <= 0 selects 4 + 2 * ceil(frames / 5).
std::string DecodeGreedy(const Seq2SeqModel& model, const std::vector<int>& frames,
                         int max_len = 0);
std::vector<int> DecodeGreedyIds(const Seq2SeqModel& model,
                                 const std::vector<int>& frames, int max_len = 0);
int DefaultMaxDecodeLength(size_t num_frames);

// Binary checkpoint: magic, format version, JSON header (hyperparameters,
// vocabulary, tensor layout, metadata), raw little-endian float32 params.
struct ModelFile {
  Seq2SeqModel model;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};
void SaveModel(const std::filesystem::path& path, const Seq2SeqModel& model,
               const nlohmann::ordered_json& meta);
ModelFile LoadModel(const std::filesystem::path& path);

}  // namespace csforge

#endif  // CSFORGE_MODEL_H_
