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

#ifndef PLRNN_TASKS_HPP_
#define PLRNN_TASKS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "plrnn/tensor.hpp"

namespace plrnn {

enum class TaskKind { kCopying, kCueReward, kRegression, kOneShot };
enum class RegressionKind { kLinear, kMlp };

const char* to_string(TaskKind k);
const char* to_string(RegressionKind k);
TaskKind parse_task(const std::string& s);
RegressionKind parse_regression_kind(const std::string& s);

struct CopyingConfig {
  int n = 5;
  int m = 20;
};

struct CueRewardConfig {
  int n = 5;
  int length = 20;
  int d = 14;
  double noise = 0.1;
};

struct RegressionConfig {
  RegressionKind kind = RegressionKind::kMlp;
  int k = 20;
  int d = 0;  // 0 selects 12 (linear) or 6 (mlp)
  double noise = 0.1;
  int query_steps = 20;
  int normalization_samples = 256;

  int dim() const { return d > 0 ? d : (kind == RegressionKind::kLinear ? 12 : 6); }
};

struct OneShotConfig {
  int classes = 5;
  int embed_dim = 8;
  double noise = 0.1;
};

struct TaskConfig {
  TaskKind kind = TaskKind::kCopying;
  CopyingConfig copying;
  CueRewardConfig cue_reward;
  RegressionConfig regression;
  OneShotConfig oneshot;

  void validate() const;
  int length() const;
  int input_dim() const;
  // Width of the model prediction y_t (class logits for classification).
  int pred_dim() const;
  // Width of each stored target (1 class index for classification).
  int target_dim() const;
  bool classification() const { return kind == TaskKind::kOneShot; }
};

/// Time-major batch of trials. Arrays are flat row-major
/// [T][B][D_in], [T][B][D_target] and [T][B].
struct TrialBatch {
  TaskKind task = TaskKind::kCopying;
  Index steps = 0;
  Index batch = 0;
  Index input_dim = 0;
  Index target_dim = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<double> loss_mask;
  // Per time step: 1 for the query/recall phase, 0 otherwise.
  std::vector<std::uint8_t> query;

  TrialBatch() = default;
  TrialBatch(TaskKind kind, Index t, Index b, Index din, Index dt);

  Eigen::Map<RowVec> input(Index t, Index b) { return {inputs.data() + (t * batch + b) * input_dim, input_dim}; }
  Eigen::Map<const RowVec> input(Index t, Index b) const {
    return {inputs.data() + (t * batch + b) * input_dim, input_dim};
  }
  Eigen::Map<RowVec> target(Index t, Index b) { return {targets.data() + (t * batch + b) * target_dim, target_dim}; }
  Eigen::Map<const RowVec> target(Index t, Index b) const {
    return {targets.data() + (t * batch + b) * target_dim, target_dim};
  }
  double& mask(Index t, Index b) { return loss_mask[static_cast<std::size_t>(t * batch + b)]; }
  double mask(Index t, Index b) const { return loss_mask[static_cast<std::size_t>(t * batch + b)]; }

  double mask_total() const;
  // Sum of mask weights of one trial.
  double mask_total(Index b) const;
};

class Rng;

// Single-trial generators writing column b of the batch.
void gen_copying_trial(const CopyingConfig& cfg, Rng& rng, TrialBatch& out, Index b);
void gen_cue_reward_trial(const CueRewardConfig& cfg, Rng& rng, TrialBatch& out, Index b);
void gen_regression_trial(const RegressionConfig& cfg, Rng& rng, TrialBatch& out, Index b);
void gen_oneshot_trial(const OneShotConfig& cfg, Rng& rng, TrialBatch& out, Index b);

/// Batch of trials; trial i is generated from its own stream seeded with
/// seed + i, so batches can be built in parallel and are reproducible.
TrialBatch generate(const TaskConfig& cfg, Index batch, std::uint64_t seed);

TrialBatch gen_copying(const TaskConfig& cfg, Index batch, std::uint64_t seed);
TrialBatch gen_cue_reward(const TaskConfig& cfg, Index batch, std::uint64_t seed);
TrialBatch gen_regression(const TaskConfig& cfg, Index batch, std::uint64_t seed);
TrialBatch gen_oneshot_synthetic(const TaskConfig& cfg, Index batch, std::uint64_t seed);

/// Normalized random mapping used by the regression task.
struct RegressionFunction {
  RegressionKind kind = RegressionKind::kMlp;
  Vec w;       // linear weights [d]
  Mat w1;      // mlp [d x 2]
  RowVec b1;   // mlp [2]
  RowVec w2;   // mlp [2]
  double bias = 0.0;
  double scale = 1.0;
  double shift = 0.0;

  double raw(const Eigen::Ref<const RowVec>& v) const;
  double operator()(const Eigen::Ref<const RowVec>& v) const { return scale * raw(v) + shift; }
};

RegressionFunction sample_regression_function(const RegressionConfig& cfg, Rng& rng);

/// Model predictions y_t, laid out [T][B][pred_dim].
struct Predictions {
  Index steps = 0;
  Index batch = 0;
  Index dim = 0;
  std::vector<double> values;

  Predictions() = default;
  Predictions(Index t, Index b, Index d) : steps(t), batch(b), dim(d), values(static_cast<std::size_t>(t * b * d), 0.0) {}
  Eigen::Map<RowVec> at(Index t, Index b) { return {values.data() + (t * batch + b) * dim, dim}; }
  Eigen::Map<const RowVec> at(Index t, Index b) const { return {values.data() + (t * batch + b) * dim, dim}; }
};

/// Unweighted loss of one step: mean squared error over dimensions, or the
/// cross-entropy of logits against a class index.
double step_loss(bool classification, const Eigen::Ref<const RowVec>& prediction,
                 const Eigen::Ref<const RowVec>& target);
Tensor step_loss(bool classification, const Tensor& prediction, const Eigen::Ref<const RowVec>& target);

/// Mask-weighted mean of step_loss over all steps and trials.
double meta_loss(const TrialBatch& batch, const Predictions& predictions, bool classification);

/// Accuracy at the first query step (classification tasks).
double first_query_accuracy(const TrialBatch& batch, const Predictions& predictions);

}  // namespace plrnn

#endif  // PLRNN_TASKS_HPP_
