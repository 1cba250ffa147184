// Copyright 2026 The plrnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "plrnn/tasks.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "plrnn/random.hpp"

namespace plrnn {

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::kCopying: return "copying";
    case TaskKind::kCueReward: return "cue_reward";
    case TaskKind::kRegression: return "regression";
    case TaskKind::kOneShot: return "oneshot";
  }
  return "copying";
}

const char* to_string(RegressionKind k) { return k == RegressionKind::kLinear ? "linear" : "mlp"; }

TaskKind parse_task(const std::string& s) {
  if (s == "copying") return TaskKind::kCopying;
  if (s == "cue_reward") return TaskKind::kCueReward;
  if (s == "regression") return TaskKind::kRegression;
  if (s == "oneshot") return TaskKind::kOneShot;
  throw std::invalid_argument("task: expected copying|cue_reward|regression|oneshot, got '" + s + "'");
}

RegressionKind parse_regression_kind(const std::string& s) {
  if (s == "linear") return RegressionKind::kLinear;
  if (s == "mlp") return RegressionKind::kMlp;
  throw std::invalid_argument("regression.kind: expected linear|mlp, got '" + s + "'");
}

void TaskConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string(name) + ": must be positive");
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0)) throw std::invalid_argument(std::string(name) + ": must be >= 0");
  };
  switch (kind) {
    case TaskKind::kCopying:
      positive(copying.n, "copying.n");
      if (copying.m < 0) throw std::invalid_argument("copying.m: must be >= 0");
      break;
    case TaskKind::kCueReward:
      positive(cue_reward.n, "cue_reward.n");
      positive(cue_reward.length, "cue_reward.length");
      positive(cue_reward.d, "cue_reward.d");
      if (cue_reward.length % 2 != 0) throw std::invalid_argument("cue_reward.length: must be even");
      nonneg(cue_reward.noise, "cue_reward.noise");
      break;
    case TaskKind::kRegression:
      positive(regression.k, "regression.k");
      if (regression.d < 0) throw std::invalid_argument("regression.d: must be >= 0");
      positive(regression.query_steps, "regression.query_steps");
      if (regression.normalization_samples < 2)
        throw std::invalid_argument("regression.normalization_samples: must be >= 2");
      nonneg(regression.noise, "regression.noise");
      break;
    case TaskKind::kOneShot:
      positive(oneshot.classes, "oneshot.classes");
      positive(oneshot.embed_dim, "oneshot.embed_dim");
      nonneg(oneshot.noise, "oneshot.noise");
      break;
  }
}

int TaskConfig::length() const {
  switch (kind) {
    case TaskKind::kCopying: return 2 * copying.n + copying.m;
    case TaskKind::kCueReward: return cue_reward.length;
    case TaskKind::kRegression: return regression.k + regression.query_steps;
    case TaskKind::kOneShot: return 2 * oneshot.classes;
  }
  return 0;
}

int TaskConfig::input_dim() const {
  switch (kind) {
    case TaskKind::kCopying: return 3;
    case TaskKind::kCueReward: return cue_reward.d + 2;
    case TaskKind::kRegression: return regression.dim() + 2;
    case TaskKind::kOneShot: return oneshot.embed_dim + oneshot.classes;
  }
  return 0;
}

int TaskConfig::pred_dim() const { return kind == TaskKind::kOneShot ? oneshot.classes : 1; }
int TaskConfig::target_dim() const { return 1; }

TrialBatch::TrialBatch(TaskKind kind, Index t, Index b, Index din, Index dt)
    : task(kind),
      steps(t),
      batch(b),
      input_dim(din),
      target_dim(dt),
      inputs(static_cast<std::size_t>(t * b * din), 0.0),
      targets(static_cast<std::size_t>(t * b * dt), 0.0),
      loss_mask(static_cast<std::size_t>(t * b), 0.0),
      query(static_cast<std::size_t>(t), 0) {}

double TrialBatch::mask_total() const { return std::accumulate(loss_mask.begin(), loss_mask.end(), 0.0); }

double TrialBatch::mask_total(Index b) const {
  double s = 0.0;
  for (Index t = 0; t < steps; ++t) s += mask(t, b);
  return s;
}

// ---------------------------------------------------------------------------
// Generators

void gen_copying_trial(const CopyingConfig& cfg, Rng& rng, TrialBatch& out, Index b) {
  const Index n = cfg.n, m = cfg.m;
  std::vector<double> r(static_cast<std::size_t>(n));
  for (double& v : r) v = rng.uniform(-1.0, 1.0);
  for (Index t = 0; t < n; ++t) {
    auto x = out.input(t, b);
    x << r[static_cast<std::size_t>(t)], 1.0, 0.0;
  }
  for (Index t = n; t < n + m; ++t) out.input(t, b).setZero();
  for (Index i = 0; i < n; ++i) {
    const Index t = n + m + i;
    auto x = out.input(t, b);
    x << 0.0, 0.0, 1.0;
    out.target(t, b)(0) = r[static_cast<std::size_t>(i)];
    out.mask(t, b) = 1.0;
  }
}

void gen_cue_reward_trial(const CueRewardConfig& cfg, Rng& rng, TrialBatch& out, Index b) {
  const Index n = cfg.n, d = cfg.d, len = cfg.length;
  Mat cues(n, d);
  for (Index i = 0; i < cues.size(); ++i) cues.data()[i] = rng.uniform();
  std::vector<double> rewards(static_cast<std::size_t>(n));
  for (double& r : rewards) r = rng.uniform();
  for (Index t = 0; t < len; ++t) {
    const Index i = static_cast<Index>(rng.index(static_cast<std::uint64_t>(n)));
    auto x = out.input(t, b);
    for (Index j = 0; j < d; ++j) x(j) = cues(i, j) + rng.normal(cfg.noise);
    const bool query = t >= len / 2;
    x(d) = query ? 0.0 : rewards[static_cast<std::size_t>(i)];
    x(d + 1) = query ? 1.0 : 0.0;
    out.target(t, b)(0) = rewards[static_cast<std::size_t>(i)];
    out.mask(t, b) = 1.0;
  }
}

double RegressionFunction::raw(const Eigen::Ref<const RowVec>& v) const {
  if (kind == RegressionKind::kLinear) return v.dot(w.transpose()) + bias;
  const RowVec hidden = ((v * w1) + b1).array().tanh().matrix();
  return hidden.dot(w2) + bias;
}

RegressionFunction sample_regression_function(const RegressionConfig& cfg, Rng& rng) {
  RegressionFunction f;
  f.kind = cfg.kind;
  const Index d = cfg.dim();
  // Fan-out bounds: 1/N with N the output width of each layer.
  if (cfg.kind == RegressionKind::kLinear) {
    f.w.resize(d);
    for (Index i = 0; i < d; ++i) f.w(i) = rng.uniform(-1.0, 1.0);
    f.bias = rng.uniform(-1.0, 1.0);
  } else {
    f.w1.resize(d, 2);
    for (Index i = 0; i < f.w1.size(); ++i) f.w1.data()[i] = rng.uniform(-0.5, 0.5);
    f.b1.resize(2);
    for (Index i = 0; i < 2; ++i) f.b1(i) = rng.uniform(-0.5, 0.5);
    f.w2.resize(2);
    for (Index i = 0; i < 2; ++i) f.w2(i) = rng.uniform(-1.0, 1.0);
    f.bias = rng.uniform(-1.0, 1.0);
  }
  // Empirical moments from fresh probe inputs.
  const int s = cfg.normalization_samples;
  RowVec v(d);
  double mean = 0.0, sq = 0.0;
  for (int k = 0; k < s; ++k) {
    for (Index i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
    const double y = f.raw(v);
    mean += y;
    sq += y * y;
  }
  mean /= s;
  const double var = std::max(sq / s - mean * mean, 0.0);
  const double sd = std::sqrt(var);
  f.scale = sd > 1e-12 ? 1.0 / sd : 1.0;
  f.shift = -mean * f.scale;
  return f;
}

void gen_regression_trial(const RegressionConfig& cfg, Rng& rng, TrialBatch& out, Index b) {
  const RegressionFunction f = sample_regression_function(cfg, rng);
  const Index d = cfg.dim();
  const Index len = cfg.k + cfg.query_steps;
  RowVec v(d);
  for (Index t = 0; t < len; ++t) {
    for (Index i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
    const double y = f(v);
    auto x = out.input(t, b);
    x.head(d) = v;
    const bool observe = t < cfg.k;
    x(d) = observe ? y + rng.normal(cfg.noise) : 0.0;
    x(d + 1) = observe ? 1.0 : 0.0;
    out.target(t, b)(0) = y;
    out.mask(t, b) = 1.0;
  }
}

void gen_oneshot_trial(const OneShotConfig& cfg, Rng& rng, TrialBatch& out, Index b) {
  const Index k = cfg.classes, e = cfg.embed_dim;
  Mat centroids(k, e);
  for (Index i = 0; i < centroids.size(); ++i) centroids.data()[i] = rng.uniform(-1.0, 1.0);
  for (int stage = 0; stage < 2; ++stage) {
    std::vector<Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(order.begin(), order.end());
    for (Index j = 0; j < k; ++j) {
      const Index t = stage * k + j;
      const Index c = order[static_cast<std::size_t>(j)];
      auto x = out.input(t, b);
      x.setZero();
      for (Index i = 0; i < e; ++i) x(i) = centroids(c, i) + rng.normal(cfg.noise);
      if (stage == 0) x(e + c) = 1.0;
      out.target(t, b)(0) = static_cast<double>(c);
      out.mask(t, b) = stage == 1 ? 1.0 : 0.0;
    }
  }
}

namespace {

TrialBatch empty_batch(const TaskConfig& cfg, Index batch) {
  cfg.validate();
  if (batch <= 0) throw std::invalid_argument("batch: must be positive");
  TrialBatch out(cfg.kind, cfg.length(), batch, cfg.input_dim(), cfg.target_dim());
  for (Index t = 0; t < out.steps; ++t) {
    bool q = false;
    switch (cfg.kind) {
      case TaskKind::kCopying: q = t >= cfg.copying.n + cfg.copying.m; break;
      case TaskKind::kCueReward: q = t >= cfg.cue_reward.length / 2; break;
      case TaskKind::kRegression: q = t >= cfg.regression.k; break;
      case TaskKind::kOneShot: q = t >= cfg.oneshot.classes; break;
    }
    out.query[static_cast<std::size_t>(t)] = q ? 1 : 0;
  }
  return out;
}

}  // namespace

TrialBatch generate(const TaskConfig& cfg, Index batch, std::uint64_t seed) {
  TrialBatch out = empty_batch(cfg, batch);
  for (Index b = 0; b < batch; ++b) {
    Rng rng(seed + static_cast<std::uint64_t>(b));
    switch (cfg.kind) {
      case TaskKind::kCopying: gen_copying_trial(cfg.copying, rng, out, b); break;
      case TaskKind::kCueReward: gen_cue_reward_trial(cfg.cue_reward, rng, out, b); break;
      case TaskKind::kRegression: gen_regression_trial(cfg.regression, rng, out, b); break;
      case TaskKind::kOneShot: gen_oneshot_trial(cfg.oneshot, rng, out, b); break;
    }
  }
  return out;
}

namespace {

TrialBatch generate_as(TaskKind kind, const TaskConfig& cfg, Index batch, std::uint64_t seed) {
  TaskConfig c = cfg;
  c.kind = kind;
  return generate(c, batch, seed);
}

}  // namespace

TrialBatch gen_copying(const TaskConfig& cfg, Index batch, std::uint64_t seed) {
  return generate_as(TaskKind::kCopying, cfg, batch, seed);
}
TrialBatch gen_cue_reward(const TaskConfig& cfg, Index batch, std::uint64_t seed) {
  return generate_as(TaskKind::kCueReward, cfg, batch, seed);
}
TrialBatch gen_regression(const TaskConfig& cfg, Index batch, std::uint64_t seed) {
  return generate_as(TaskKind::kRegression, cfg, batch, seed);
}
TrialBatch gen_oneshot_synthetic(const TaskConfig& cfg, Index batch, std::uint64_t seed) {
  return generate_as(TaskKind::kOneShot, cfg, batch, seed);
}

// ---------------------------------------------------------------------------
// Losses

double step_loss(bool classification, const Eigen::Ref<const RowVec>& prediction,
                 const Eigen::Ref<const RowVec>& target) {
  if (classification) {
    const Index c = static_cast<Index>(target(0));
    if (c < 0 || c >= prediction.size()) throw std::out_of_range("step_loss: class index out of range");
    const double mx = prediction.maxCoeff();
    const double lse = mx + std::log((prediction.array() - mx).exp().sum());
    return lse - prediction(c);
  }
  if (prediction.size() != target.size())
    throw ShapeError("step_loss: prediction of length " + std::to_string(prediction.size()) + " vs target " +
                     std::to_string(target.size()));
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

Tensor step_loss(bool classification, const Tensor& prediction, const Eigen::Ref<const RowVec>& target) {
  Tape& tape = prediction.tape();
  if (classification) {
    const Index c = static_cast<Index>(target(0));
    const Index k = prediction.shape().dims[0];
    if (c < 0 || c >= k) throw std::out_of_range("step_loss: class index out of range");
    // The shift is a constant; the log-sum-exp value and gradient are exact.
    const double mx = prediction.value().maxCoeff();
    const Tensor lse = affine(log(sum(exp(affine(prediction, 1.0, -mx)))), 1.0, mx);
    return lse - sum(slice(prediction, c, 1));
  }
  if (prediction.shape().dims[0] != target.size())
    throw ShapeError("step_loss: prediction " + prediction.shape().str() + " vs target of length " +
                     std::to_string(target.size()));
  return mean(square(prediction - tape.vector(target)));
}

double meta_loss(const TrialBatch& batch, const Predictions& p, bool classification) {
  if (p.steps != batch.steps || p.batch != batch.batch)
    throw ShapeError("meta_loss: predictions [" + std::to_string(p.steps) + ", " + std::to_string(p.batch) +
                     "] vs batch [" + std::to_string(batch.steps) + ", " + std::to_string(batch.batch) + "]");
  if (!classification && p.dim != batch.target_dim)
    throw ShapeError("meta_loss: prediction width " + std::to_string(p.dim) + " vs target width " +
                     std::to_string(batch.target_dim));
  double total = 0.0, weight = 0.0;
  for (Index t = 0; t < batch.steps; ++t) {
    for (Index b = 0; b < batch.batch; ++b) {
      const double w = batch.mask(t, b);
      if (w == 0.0) continue;
      total += w * step_loss(classification, p.at(t, b), batch.target(t, b));
      weight += w;
    }
  }
  if (weight == 0.0) throw std::invalid_argument("meta_loss: empty loss mask");
  return total / weight;
}

double first_query_accuracy(const TrialBatch& batch, const Predictions& p) {
  Index t0 = -1;
  for (Index t = 0; t < batch.steps; ++t)
    if (batch.query[static_cast<std::size_t>(t)]) {
      t0 = t;
      break;
    }
  if (t0 < 0) throw std::invalid_argument("first_query_accuracy: no query step");
  double correct = 0.0;
  for (Index b = 0; b < batch.batch; ++b) {
    Index arg = 0;
    p.at(t0, b).maxCoeff(&arg);
    if (arg == static_cast<Index>(batch.target(t0, b)(0))) correct += 1.0;
  }
  return correct / static_cast<double>(batch.batch);
}

}  // namespace plrnn
