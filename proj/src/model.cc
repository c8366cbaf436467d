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

#include "csforge/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "csforge/errors.h"
#include "csforge/manifest.h"

namespace csforge {

using Eigen::Dynamic;

void ModelConfig::Validate() const {
  if (acoustic_vocab < 2 || embed_dim < 1 || hidden_dim < 1 || encoder_layers < 1 ||
      decoder_layers < 1 || frame_stack < 1)
    throw ConfigError("model dimensions must be positive");
}

nlohmann::ordered_json ModelConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["acoustic_vocab"] = acoustic_vocab;
  j["embed_dim"] = embed_dim;
  j["hidden_dim"] = hidden_dim;
  j["encoder_layers"] = encoder_layers;
  j["decoder_layers"] = decoder_layers;
  j["frame_stack"] = frame_stack;
  return j;
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.acoustic_vocab = j.value("acoustic_vocab", c.acoustic_vocab);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.frame_stack = j.value("frame_stack", c.frame_stack);
  return c;
}

ParamLayout::ParamLayout(const ModelConfig& c, int target_vocab) {
  const int h = c.hidden_dim, e = c.embed_dim;
  Add("src_embed", c.acoustic_vocab, e);
  for (int l = 0; l < c.encoder_layers; ++l) {
    const int in = l == 0 ? e * c.frame_stack : 2 * h;
    for (const char* dir : {"f", "b"}) {
      const std::string p = "enc" + std::to_string(l) + "." + dir + ".";
      Add(p + "Wi", 3 * h, in);
      Add(p + "Wh", 3 * h, h);
      Add(p + "bi", 3 * h, 1);
      Add(p + "bh", 3 * h, 1);
    }
  }
  Add("att.W", h, 2 * h);
  Add("tgt_embed", target_vocab, e);
  for (int l = 0; l < c.decoder_layers; ++l) {
    const std::string p = "dec" + std::to_string(l) + ".";
    Add(p + "Wi", 3 * h, l == 0 ? e + h : h);
    Add(p + "Wh", 3 * h, h);
    Add(p + "bi", 3 * h, 1);
    Add(p + "bh", 3 * h, 1);
  }
  Add("out.Wc", h, 3 * h);
  Add("out.bc", h, 1);
  Add("out.W", target_vocab, h);
  Add("out.b", target_vocab, 1);
}

void ParamLayout::Add(std::string name, int rows, int cols) {
  specs_.push_back({std::move(name), rows, cols, total_});
  total_ += static_cast<size_t>(rows) * cols;
}

const ParamSpec& ParamLayout::Get(const std::string& name) const {
  for (const auto& s : specs_)
    if (s.name == name) return s;
  throw ConfigError("unknown parameter tensor '" + name + "'");
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Dynamic, Dynamic, Eigen::RowMajor>;
template <typename T>
using Mat = Eigen::Matrix<T, Dynamic, Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Dynamic, 1>;
template <typename T>
using StridedMap = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

// Views of one tensor inside a flat parameter (or gradient) buffer.
template <typename T>
struct Tensor {
  T* data = nullptr;
  int rows = 0;
  int cols = 0;
  Eigen::Map<RowMat<T>> m() const { return {data, rows, cols}; }
  Eigen::Map<Vec<T>> v() const { return {data, rows}; }
};

template <typename T>
Tensor<T> View(const ParamLayout& layout, const std::string& name, T* base) {
  const ParamSpec& s = layout.Get(name);
  return {base + s.offset, s.rows, s.cols};
}

template <typename T>
struct GruTensors {
  Tensor<T> wi, wh, bi, bh;
};

template <typename T>
GruTensors<T> GruView(const ParamLayout& layout, const std::string& prefix, T* base) {
  return {View(layout, prefix + "Wi", base), View(layout, prefix + "Wh", base),
          View(layout, prefix + "bi", base), View(layout, prefix + "bh", base)};
}

// Everything a model pass needs, resolved once.
template <typename T>
struct Tensors {
  Tensor<T> src_embed, att, tgt_embed, wc, bc, wout, bout;
  std::vector<GruTensors<T>> enc_f, enc_b, dec;

  Tensors(const ModelConfig& c, const ParamLayout& layout, T* base) {
    src_embed = View(layout, "src_embed", base);
    att = View(layout, "att.W", base);
    tgt_embed = View(layout, "tgt_embed", base);
    wc = View(layout, "out.Wc", base);
    bc = View(layout, "out.bc", base);
    wout = View(layout, "out.W", base);
    bout = View(layout, "out.b", base);
    for (int l = 0; l < c.encoder_layers; ++l) {
      enc_f.push_back(GruView(layout, "enc" + std::to_string(l) + ".f.", base));
      enc_b.push_back(GruView(layout, "enc" + std::to_string(l) + ".b.", base));
    }
    for (int l = 0; l < c.decoder_layers; ++l)
      dec.push_back(GruView(layout, "dec" + std::to_string(l) + ".", base));
  }
};

template <typename T>
struct GruCache {
  Mat<T> r, z, n, hn;
};

template <typename T>
Mat<T> Sigmoid(const Mat<T>& x) {
  return (T(1) / (T(1) + (-x.array()).exp())).matrix();
}

// h = (1 - z) * n + z * h_prev with PyTorch gate conventions; `gi` already
// holds Wi x + bi.
template <typename T>
Mat<T> GruStep(const GruTensors<T>& w, const Mat<T>& gi, const Mat<T>& h_prev,
               GruCache<T>* cache) {
  const int h = static_cast<int>(h_prev.rows());
  Mat<T> gh = w.wh.m() * h_prev;
  gh.colwise() += w.bh.v();
  Mat<T> r = Sigmoid<T>(gi.topRows(h) + gh.topRows(h));
  Mat<T> z = Sigmoid<T>(gi.middleRows(h, h) + gh.middleRows(h, h));
  Mat<T> hn = gh.bottomRows(h);
  Mat<T> n = (gi.bottomRows(h).array() + r.array() * hn.array()).tanh().matrix();
  Mat<T> out = ((T(1) - z.array()) * n.array() + z.array() * h_prev.array()).matrix();
  if (cache) {
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(n);
    cache->hn = std::move(hn);
  }
  return out;
}

// Returns d(h_prev); writes d(gi) and d(gh) (pre-activation gate grads).
template <typename T>
Mat<T> GruStepBackward(const GruTensors<T>& w, const GruCache<T>& c,
                       const Mat<T>& h_prev, const Mat<T>& dh, Mat<T>* dgi,
                       Mat<T>* dgh) {
  const int h = static_cast<int>(h_prev.rows());
  const int b = static_cast<int>(h_prev.cols());
  auto r = c.r.array();
  auto z = c.z.array();
  auto n = c.n.array();
  Mat<T> dn_pre = (dh.array() * (T(1) - z) * (T(1) - n * n)).matrix();
  Mat<T> dz_pre = (dh.array() * (h_prev.array() - n) * z * (T(1) - z)).matrix();
  Mat<T> dr_pre = (dn_pre.array() * c.hn.array() * r * (T(1) - r)).matrix();
  dgi->resize(3 * h, b);
  dgi->topRows(h) = dr_pre;
  dgi->middleRows(h, h) = dz_pre;
  dgi->bottomRows(h) = dn_pre;
  *dgh = *dgi;
  dgh->bottomRows(h).array() *= r;
  Mat<T> dh_prev = (dh.array() * z).matrix();
  dh_prev.noalias() += w.wh.m().transpose() * *dgh;
  return dh_prev;
}

template <typename T>
void LogSoftmaxColumns(Mat<T>* logits) {
  for (Eigen::Index b = 0; b < logits->cols(); ++b) {
    auto col = logits->col(b);
    const T mx = col.maxCoeff();
    const T lse = mx + std::log((col.array() - mx).exp().sum());
    col.array() -= lse;
  }
}

// One encoder layer (both directions) over a padded batch laid out as
// columns t * B + b.
template <typename T>
struct EncoderLayerCache {
  Mat<T> x;                   // in x T*B
  std::vector<GruCache<T>> fwd, bwd;
  Mat<T> y;                   // 2H x T*B
};

template <typename T>
void EncoderLayerForward(const GruTensors<T>& wf, const GruTensors<T>& wb,
                         const std::vector<int>& lens, int steps,
                         EncoderLayerCache<T>* cache, bool keep) {
  const int batch = static_cast<int>(lens.size());
  const int h = wf.wh.cols;
  const Mat<T>& x = cache->x;
  cache->y.setZero(2 * h, static_cast<Eigen::Index>(steps) * batch);
  if (keep) {
    cache->fwd.assign(steps, {});
    cache->bwd.assign(steps, {});
  }
  for (int dir = 0; dir < 2; ++dir) {
    const GruTensors<T>& w = dir == 0 ? wf : wb;
    Mat<T> gi_all = w.wi.m() * x;
    gi_all.colwise() += w.bi.v();
    Mat<T> hstate = Mat<T>::Zero(h, batch);
    for (int k = 0; k < steps; ++k) {
      const int t = dir == 0 ? k : steps - 1 - k;
      Mat<T> gi = gi_all.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
      GruCache<T>* gc = keep ? &(dir == 0 ? cache->fwd : cache->bwd)[t] : nullptr;
      Mat<T> next = GruStep(w, gi, hstate, gc);
      for (int b = 0; b < batch; ++b)
        if (t >= lens[b]) next.col(b) = hstate.col(b);
      hstate = std::move(next);
      cache->y.block(dir * h, static_cast<Eigen::Index>(t) * batch, h, batch) = hstate;
    }
  }
}

// Accumulates parameter grads and returns d(x).
template <typename T>
Mat<T> EncoderLayerBackward(const GruTensors<T>& wf, const GruTensors<T>& wb,
                            const GruTensors<T>& gf, const GruTensors<T>& gb,
                            const std::vector<int>& lens, int steps,
                            const EncoderLayerCache<T>& cache, const Mat<T>& dy) {
  const int batch = static_cast<int>(lens.size());
  const int h = wf.wh.cols;
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * batch;
  Mat<T> dx = Mat<T>::Zero(cache.x.rows(), cols);
  for (int dir = 0; dir < 2; ++dir) {
    const GruTensors<T>& w = dir == 0 ? wf : wb;
    const GruTensors<T>& g = dir == 0 ? gf : gb;
    const auto& caches = dir == 0 ? cache.fwd : cache.bwd;
    Mat<T> dgi_all(3 * h, cols), dgh_all(3 * h, cols), hprev_all(h, cols);
    Mat<T> carry = Mat<T>::Zero(h, batch);
    Mat<T> zero = Mat<T>::Zero(h, batch);
    for (int k = steps - 1; k >= 0; --k) {
      const int t = dir == 0 ? k : steps - 1 - k;
      const int prev_t = dir == 0 ? t - 1 : t + 1;
      const bool has_prev = dir == 0 ? t > 0 : t + 1 < steps;
      Mat<T> h_prev = has_prev ? Mat<T>(cache.y.block(dir * h,
                                                      static_cast<Eigen::Index>(prev_t) * batch,
                                                      h, batch))
                               : zero;
      Mat<T> dh = dy.block(dir * h, static_cast<Eigen::Index>(t) * batch, h, batch) + carry;
      Mat<T> pass = Mat<T>::Zero(h, batch);
      for (int b = 0; b < batch; ++b)
        if (t >= lens[b]) {
          pass.col(b) = dh.col(b);
          dh.col(b).setZero();
        }
      Mat<T> dgi, dgh;
      carry = GruStepBackward(w, caches[t], h_prev, dh, &dgi, &dgh) + pass;
      dgi_all.middleCols(static_cast<Eigen::Index>(t) * batch, batch) = dgi;
      dgh_all.middleCols(static_cast<Eigen::Index>(t) * batch, batch) = dgh;
      hprev_all.middleCols(static_cast<Eigen::Index>(t) * batch, batch) = h_prev;
    }
    g.wh.m().noalias() += dgh_all * hprev_all.transpose();
    g.bh.v() += dgh_all.rowwise().sum();
    g.wi.m().noalias() += dgi_all * cache.x.transpose();
    g.bi.v() += dgi_all.rowwise().sum();
    dx.noalias() += w.wi.m().transpose() * dgi_all;
  }
  return dx;
}

// Stacked frame embeddings: column t * B + b.
template <typename T>
Mat<T> EmbedFrames(const Tensor<T>& table, const std::vector<const std::vector<int>*>& frames,
                   int stack, int steps) {
  const int batch = static_cast<int>(frames.size());
  const int e = table.cols;
  Mat<T> x = Mat<T>::Zero(static_cast<Eigen::Index>(e) * stack,
                          static_cast<Eigen::Index>(steps) * batch);
  auto emb = table.m();
  for (int b = 0; b < batch; ++b) {
    const auto& f = *frames[b];
    for (int t = 0; t < steps; ++t)
      for (int k = 0; k < stack; ++k) {
        const size_t idx = static_cast<size_t>(t) * stack + k;
        const int id = idx < f.size() ? f[idx] : AcousticAlphabet::kPad;
        if (id < 0 || id >= table.rows)
          throw PreconditionError("frame symbol " + std::to_string(id) + " out of range");
        x.block(static_cast<Eigen::Index>(k) * e, static_cast<Eigen::Index>(t) * batch + b, e, 1) =
            emb.row(id).transpose();
      }
  }
  return x;
}

template <typename T>
void EmbedFramesBackward(const Tensor<T>& gtable,
                         const std::vector<const std::vector<int>*>& frames, int stack,
                         int steps, const Mat<T>& dx) {
  const int batch = static_cast<int>(frames.size());
  const int e = gtable.cols;
  auto g = gtable.m();
  for (int b = 0; b < batch; ++b) {
    const auto& f = *frames[b];
    for (int t = 0; t < steps; ++t)
      for (int k = 0; k < stack; ++k) {
        const size_t idx = static_cast<size_t>(t) * stack + k;
        const int id = idx < f.size() ? f[idx] : AcousticAlphabet::kPad;
        g.row(id) += dx.block(static_cast<Eigen::Index>(k) * e,
                              static_cast<Eigen::Index>(t) * batch + b, e, 1)
                         .transpose();
      }
  }
}

int EncoderSteps(size_t frames, int stack) {
  return static_cast<int>((frames + stack - 1) / stack);
}

}  // namespace

template <typename T>
Seq2Seq<T>::Seq2Seq(ModelConfig config, TargetVocab vocab)
    : config_(config), vocab_(std::move(vocab)), layout_(config_, vocab_.size()) {
  config_.Validate();
  params_.assign(layout_.total(), T(0));
}

template <typename T>
Seq2Seq<T> Seq2Seq<T>::Init(const ModelConfig& config, const TargetVocab& vocab,
                            uint64_t seed) {
  Seq2Seq<T> model(config, vocab);
  std::mt19937_64 rng(seed);
  for (const auto& spec : model.layout_.specs()) {
    T* p = model.params_.data() + spec.offset;
    const bool embed = spec.name.find("embed") != std::string::npos;
    if (spec.cols == 1) continue;  // biases start at zero
    const double bound = embed ? 0.5 : 1.0 / std::sqrt(static_cast<double>(spec.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (size_t i = 0; i < spec.size(); ++i) p[i] = static_cast<T>(dist(rng));
  }
  return model;
}

template <typename T>
bool Seq2Seq<T>::AllFinite() const {
  return std::all_of(params_.begin(), params_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
LossStats Seq2Seq<T>::ForwardBackward(const std::vector<Example>& batch_in,
                                      const ForwardOptions& options, ParamVector<T>* grad,
                                      T grad_scale) const {
  LossStats stats;
  if (batch_in.empty()) return stats;
  const int batch = static_cast<int>(batch_in.size());
  const int h = config_.hidden_dim;
  const int e = config_.embed_dim;
  const int vocab = vocab_.size();
  const int stack = config_.frame_stack;
  const bool train = grad != nullptr;
  const bool use_dropout = options.dropout > 0.0;
  if (use_dropout && options.rng == nullptr)
    throw PreconditionError("dropout requires a random generator");

  Tensors<T> w(config_, layout_, const_cast<T*>(params_.data()));

  // ---- encoder
  std::vector<const std::vector<int>*> frames;
  std::vector<int> lens;
  int steps = 0;
  for (const auto& ex : batch_in) {
    if (ex.frames.empty()) throw PreconditionError("example without frames");
    frames.push_back(&ex.frames);
    lens.push_back(EncoderSteps(ex.frames.size(), stack));
    steps = std::max(steps, lens.back());
  }
  std::vector<EncoderLayerCache<T>> enc(config_.encoder_layers);
  enc[0].x = EmbedFrames(w.src_embed, frames, stack, steps);
  for (int l = 0; l < config_.encoder_layers; ++l) {
    if (l > 0) enc[l].x = enc[l - 1].y;
    EncoderLayerForward(w.enc_f[l], w.enc_b[l], lens, steps, &enc[l], train);
  }
  const Mat<T>& states = enc.back().y;  // 2H x T*B
  Mat<T> keys = w.att.m() * states;     // H x T*B
  const Eigen::Index stride_k = static_cast<Eigen::Index>(h) * batch;
  const Eigen::Index stride_s = static_cast<Eigen::Index>(2 * h) * batch;

  // ---- decoder inputs
  int dec_len = 0;
  for (const auto& ex : batch_in) dec_len = std::max<int>(dec_len, ex.tokens.size() + 1);
  auto token_in = [&](int i, int b) {
    const auto& toks = batch_in[b].tokens;
    if (i == 0) return TargetVocab::kBos;
    return i - 1 < static_cast<int>(toks.size()) ? toks[i - 1] : TargetVocab::kPad;
  };
  auto token_out = [&](int i, int b) {
    const auto& toks = batch_in[b].tokens;
    if (i < static_cast<int>(toks.size())) return toks[i];
    return i == static_cast<int>(toks.size()) ? TargetVocab::kEos : TargetVocab::kPad;
  };

  struct StepCache {
    Mat<T> x;                           // decoder layer-0 input
    std::vector<GruCache<T>> gru;
    std::vector<Mat<T>> hidden;         // per layer output
    Mat<T> alpha;                       // T x B
    Mat<T> sc;                          // [s; c]  3H x B
    Mat<T> o;                           // tanh output
    Mat<T> drop;                        // dropout multipliers
    Mat<T> feed;                        // o after dropout
    Mat<T> dlogits;
  };
  std::vector<StepCache> cache(dec_len);
  const int layers = config_.decoder_layers;
  const double eps = options.label_smoothing;

  Mat<T> feed = Mat<T>::Zero(h, batch);
  std::vector<Mat<T>> hidden(layers, Mat<T>::Zero(h, batch));
  for (int i = 0; i < dec_len; ++i) {
    StepCache& sc = cache[i];
    Mat<T> x(e + h, batch);
    for (int b = 0; b < batch; ++b)
      x.block(0, b, e, 1) = w.tgt_embed.m().row(token_in(i, b)).transpose();
    x.bottomRows(h) = feed;
    if (train) {
      sc.gru.resize(layers);
      sc.hidden.resize(layers);
    }
    Mat<T> layer_in = x;
    for (int l = 0; l < layers; ++l) {
      Mat<T> gi = w.dec[l].wi.m() * layer_in;
      gi.colwise() += w.dec[l].bi.v();
      hidden[l] = GruStep(w.dec[l], gi, hidden[l], train ? &sc.gru[l] : nullptr);
      if (train) sc.hidden[l] = hidden[l];
      layer_in = hidden[l];
    }
    if (train) sc.x = std::move(x);
    const Mat<T>& s = hidden.back();

    Mat<T> alpha = Mat<T>::Zero(steps, batch);
    Mat<T> context(2 * h, batch);
    for (int b = 0; b < batch; ++b) {
      ConstStridedMap<T> kb(keys.data() + static_cast<Eigen::Index>(b) * h, h, lens[b],
                            Eigen::OuterStride<>(stride_k));
      ConstStridedMap<T> yb(states.data() + static_cast<Eigen::Index>(b) * 2 * h, 2 * h,
                            lens[b], Eigen::OuterStride<>(stride_s));
      Vec<T> score = kb.transpose() * s.col(b);
      score.array() -= score.maxCoeff();
      score = score.array().exp().matrix();
      score /= score.sum();
      alpha.col(b).head(lens[b]) = score;
      context.col(b) = yb * score;
    }
    Mat<T> concat(3 * h, batch);
    concat.topRows(h) = s;
    concat.bottomRows(2 * h) = context;
    Mat<T> pre = w.wc.m() * concat;
    pre.colwise() += w.bc.v();
    Mat<T> o = pre.array().tanh().matrix();
    Mat<T> drop;
    if (use_dropout) {
      drop.resize(h, batch);
      std::bernoulli_distribution keep(1.0 - options.dropout);
      const T scale = static_cast<T>(1.0 / (1.0 - options.dropout));
      for (Eigen::Index k = 0; k < drop.size(); ++k)
        drop.data()[k] = keep(*options.rng) ? scale : T(0);
      feed = (o.array() * drop.array()).matrix();
    } else {
      feed = o;
    }
    Mat<T> logits = w.wout.m() * feed;
    logits.colwise() += w.bout.v();
    LogSoftmaxColumns(&logits);

    Mat<T> dlogits;
    if (train) dlogits = Mat<T>::Zero(vocab, batch);
    for (int b = 0; b < batch; ++b) {
      const int gold = token_out(i, b);
      if (gold == TargetVocab::kPad) continue;
      const double lp_gold = static_cast<double>(logits(gold, b));
      const double lp_sum = static_cast<double>(logits.col(b).sum());
      stats.nll -= lp_gold;
      stats.objective -= (1.0 - eps) * lp_gold + eps / vocab * lp_sum;
      stats.tokens += 1;
      if (train) {
        auto d = dlogits.col(b);
        d = logits.col(b).array().exp().matrix();
        d.array() -= static_cast<T>(eps / vocab);
        d(gold) -= static_cast<T>(1.0 - eps);
        d *= grad_scale;
      }
    }
    if (train) {
      sc.alpha = std::move(alpha);
      sc.sc = std::move(concat);
      sc.o = std::move(o);
      sc.drop = std::move(drop);
      sc.feed = feed;
      sc.dlogits = std::move(dlogits);
    }
  }
  if (!train) return stats;

  // ---- backward
  if (grad->size() != params_.size())
    throw PreconditionError("gradient buffer has the wrong size");
  Tensors<T> g(config_, layout_, grad->data());
  Mat<T> dstates = Mat<T>::Zero(2 * h, states.cols());
  Mat<T> dkeys = Mat<T>::Zero(h, keys.cols());
  Mat<T> dfeed_next = Mat<T>::Zero(h, batch);
  std::vector<Mat<T>> dh_next(layers, Mat<T>::Zero(h, batch));
  const Mat<T> zero = Mat<T>::Zero(h, batch);

  for (int i = dec_len - 1; i >= 0; --i) {
    StepCache& sc = cache[i];
    g.wout.m().noalias() += sc.dlogits * sc.feed.transpose();
    g.bout.v() += sc.dlogits.rowwise().sum();
    Mat<T> dfeed = w.wout.m().transpose() * sc.dlogits + dfeed_next;
    Mat<T> dout = use_dropout ? Mat<T>((dfeed.array() * sc.drop.array()).matrix()) : dfeed;
    Mat<T> dpre = (dout.array() * (T(1) - sc.o.array() * sc.o.array())).matrix();
    g.wc.m().noalias() += dpre * sc.sc.transpose();
    g.bc.v() += dpre.rowwise().sum();
    Mat<T> dconcat = w.wc.m().transpose() * dpre;
    Mat<T> ds = dconcat.topRows(h);
    const Mat<T>& s = sc.hidden.back();
    for (int b = 0; b < batch; ++b) {
      ConstStridedMap<T> kb(keys.data() + static_cast<Eigen::Index>(b) * h, h, lens[b],
                            Eigen::OuterStride<>(stride_k));
      ConstStridedMap<T> yb(states.data() + static_cast<Eigen::Index>(b) * 2 * h, 2 * h,
                            lens[b], Eigen::OuterStride<>(stride_s));
      StridedMap<T> dkb(dkeys.data() + static_cast<Eigen::Index>(b) * h, h, lens[b],
                        Eigen::OuterStride<>(stride_k));
      StridedMap<T> dyb(dstates.data() + static_cast<Eigen::Index>(b) * 2 * h, 2 * h, lens[b],
                        Eigen::OuterStride<>(stride_s));
      Vec<T> a = sc.alpha.col(b).head(lens[b]);
      Vec<T> dc = dconcat.col(b).tail(2 * h);
      Vec<T> da = yb.transpose() * dc;
      dyb.noalias() += dc * a.transpose();
      Vec<T> dscore = (a.array() * (da.array() - a.dot(da))).matrix();
      dkb.noalias() += s.col(b) * dscore.transpose();
      ds.col(b).noalias() += kb * dscore;
    }
    Mat<T> dh = ds + dh_next[layers - 1];
    for (int l = layers - 1; l >= 0; --l) {
      const Mat<T>& h_prev = i > 0 ? cache[i - 1].hidden[l] : zero;
      const Mat<T>& input = l == 0 ? sc.x : sc.hidden[l - 1];
      Mat<T> dgi, dgh;
      dh_next[l] = GruStepBackward(w.dec[l], sc.gru[l], h_prev, dh, &dgi, &dgh);
      g.dec[l].wh.m().noalias() += dgh * h_prev.transpose();
      g.dec[l].bh.v() += dgh.rowwise().sum();
      g.dec[l].wi.m().noalias() += dgi * input.transpose();
      g.dec[l].bi.v() += dgi.rowwise().sum();
      Mat<T> dx = w.dec[l].wi.m().transpose() * dgi;
      if (l > 0) {
        dh = dx + dh_next[l - 1];
      } else {
        for (int b = 0; b < batch; ++b)
          g.tgt_embed.m().row(token_in(i, b)) += dx.block(0, b, e, 1).transpose();
        dfeed_next = dx.bottomRows(h);
      }
    }
  }

  g.att.m().noalias() += dkeys * states.transpose();
  dstates.noalias() += w.att.m().transpose() * dkeys;
  Mat<T> dy = std::move(dstates);
  for (int l = config_.encoder_layers - 1; l >= 0; --l) {
    dy = EncoderLayerBackward(w.enc_f[l], w.enc_b[l], g.enc_f[l], g.enc_b[l], lens, steps,
                              enc[l], dy);
  }
  EmbedFramesBackward(g.src_embed, frames, stack, steps, dy);
  return stats;
}

template <typename T>
typename Seq2Seq<T>::Encoded Seq2Seq<T>::Encode(const std::vector<int>& frames) const {
  if (frames.empty()) throw PreconditionError("cannot encode an empty frame sequence");
  Tensors<T> w(config_, layout_, const_cast<T*>(params_.data()));
  const int steps = EncoderSteps(frames.size(), config_.frame_stack);
  std::vector<const std::vector<int>*> ptrs = {&frames};
  std::vector<int> lens = {steps};
  EncoderLayerCache<T> layer;
  layer.x = EmbedFrames(w.src_embed, ptrs, config_.frame_stack, steps);
  for (int l = 0; l < config_.encoder_layers; ++l) {
    if (l > 0) layer.x = layer.y;
    EncoderLayerForward(w.enc_f[l], w.enc_b[l], lens, steps, &layer, false);
  }
  Encoded out;
  out.states = std::move(layer.y);
  out.keys = w.att.m() * out.states;
  return out;
}

template <typename T>
typename Seq2Seq<T>::DecoderState Seq2Seq<T>::InitialState() const {
  DecoderState state;
  state.hidden.assign(config_.decoder_layers, Vector::Zero(config_.hidden_dim));
  state.feed = Vector::Zero(config_.hidden_dim);
  return state;
}

template <typename T>
typename Seq2Seq<T>::Vector Seq2Seq<T>::Step(const Encoded& enc, DecoderState& state,
                                             int prev_token) const {
  Tensors<T> w(config_, layout_, const_cast<T*>(params_.data()));
  const int h = config_.hidden_dim;
  const int e = config_.embed_dim;
  Mat<T> x(e + h, 1);
  x.topRows(e) = w.tgt_embed.m().row(prev_token).transpose();
  x.bottomRows(h) = state.feed;
  for (int l = 0; l < config_.decoder_layers; ++l) {
    Mat<T> gi = w.dec[l].wi.m() * x;
    gi += w.dec[l].bi.v();
    Mat<T> hp = state.hidden[l];
    state.hidden[l] = GruStep<T>(w.dec[l], gi, hp, nullptr);
    x = state.hidden[l];
  }
  const Vector& s = state.hidden.back();
  Vector score = enc.keys.transpose() * s;
  score.array() -= score.maxCoeff();
  score = score.array().exp().matrix();
  score /= score.sum();
  Vector context = enc.states * score;
  Vector concat(3 * h);
  concat << s, context;
  Vector o = (w.wc.m() * concat + w.bc.v()).array().tanh().matrix();
  state.feed = o;
  Mat<T> logits = w.wout.m() * o + w.bout.v();
  LogSoftmaxColumns(&logits);
  return logits.col(0);
}

template class Seq2Seq<float>;
template class Seq2Seq<double>;

int DefaultMaxDecodeLength(size_t num_frames) {
  return 4 + 2 * static_cast<int>((num_frames + 4) / 5);
}

std::vector<int> DecodeGreedyIds(const Seq2SeqModel& model, const std::vector<int>& frames,
                                 int max_len) {
  if (frames.empty()) throw PreconditionError("cannot decode an empty frame sequence");
  if (max_len <= 0) max_len = DefaultMaxDecodeLength(frames.size());
  const auto enc = model.Encode(frames);
  auto state = model.InitialState();
  std::vector<int> out;
  int prev = TargetVocab::kBos;
  for (int i = 0; i < max_len; ++i) {
    Eigen::VectorXf logp = model.Step(enc, state, prev);
    Eigen::Index best = 0;
    logp.maxCoeff(&best);
    const int tok = static_cast<int>(best);
    if (tok == TargetVocab::kEos) break;
    out.push_back(tok);
    prev = tok;
  }
  return out;
}

std::string DecodeGreedy(const Seq2SeqModel& model, const std::vector<int>& frames,
                         int max_len) {
  return model.vocab().Decode(DecodeGreedyIds(model, frames, max_len));
}

// ---------------------------------------------------------------------------
// Checkpoint files

namespace {
constexpr char kMagic[4] = {'C', 'S', 'F', 'G'};
constexpr uint32_t kFormatVersion = 1;
}  // namespace

void SaveModel(const std::filesystem::path& path, const Seq2SeqModel& model,
               const nlohmann::ordered_json& meta) {
  nlohmann::ordered_json header;
  header["format"] = "cs-forge-checkpoint";
  header["version"] = kFormatVersion;
  header["dtype"] = "float32";
  header["layout"] = "row-major";
  header["model"] = model.config().ToJson();
  header["vocab"] = model.vocab().ToJson();
  auto tensors = nlohmann::ordered_json::array();
  for (const auto& s : model.layout().specs())
    tensors.push_back({{"name", s.name}, {"shape", {s.rows, s.cols}}, {"offset", s.offset}});
  header["tensors"] = tensors;
  header["meta"] = meta;
  const std::string text = header.dump();

  std::string blob(kMagic, 4);
  auto put_u32 = [&](uint32_t v) {
    for (int k = 0; k < 4; ++k) blob += static_cast<char>((v >> (8 * k)) & 0xff);
  };
  put_u32(kFormatVersion);
  put_u32(static_cast<uint32_t>(text.size()));
  blob += text;
  for (float v : model.params()) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
  }
  WriteTextFile(path, blob);
}

ModelFile LoadModel(const std::filesystem::path& path) {
  const std::string blob = ReadTextFile(path);
  auto get_u32 = [&](size_t pos) {
    if (pos + 4 > blob.size()) throw ConfigError("truncated checkpoint " + path.string());
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(blob[pos + k])) << (8 * k);
    return v;
  };
  if (blob.size() < 12 || std::memcmp(blob.data(), kMagic, 4) != 0)
    throw ConfigError("not a cs-forge checkpoint: " + path.string());
  if (get_u32(4) != kFormatVersion)
    throw ConfigError("unsupported checkpoint version in " + path.string());
  const uint32_t header_len = get_u32(8);
  if (12 + static_cast<size_t>(header_len) > blob.size())
    throw ConfigError("truncated checkpoint " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint header: " + std::string(e.what()));
  }
  ModelFile out;
  out.model = Seq2SeqModel(ModelConfig::FromJson(header.at("model")),
                           TargetVocab::FromJson(header.at("vocab")));
  const size_t n = out.model.num_params();
  size_t pos = 12 + header_len;
  if (blob.size() != pos + 4 * n)
    throw ConfigError("checkpoint parameter count mismatch in " + path.string());
  for (size_t i = 0; i < n; ++i, pos += 4) {
    uint32_t bits = get_u32(pos);
    std::memcpy(&out.model.params()[i], &bits, 4);
  }
  out.meta = nlohmann::ordered_json::parse(header.at("meta").dump());
  return out;
}

}  // namespace csforge
