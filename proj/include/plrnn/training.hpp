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

#ifndef PLRNN_TRAINING_HPP_
#define PLRNN_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plrnn/models.hpp"
#include "plrnn/tasks.hpp"

namespace plrnn {

struct TrainerConfig {
  double outer_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 5.0;
  int batch = 64;
  int steps = 3000;
  int val_interval = 100;
  int eval_batches = 100;
  int test_batches = 100;
  // 0 picks the hardware concurrency; ignored in deterministic mode.
  int threads = 0;
  bool deterministic = false;

  void validate() const;
};

struct TrainerState {
  Vec m;
  Vec v;
  long step = 0;      // completed outer updates
  long iteration = 0; // attempted outer steps, including skipped ones
  long skipped = 0;
  double best_val = std::numeric_limits<double>::quiet_NaN();
  long best_step = -1;
  Vec best_params;
};

/// Seed-space partition. Training, validation and test trials draw their
/// per-trial seeds from disjoint ranges.
enum class SeedStream : std::uint64_t { kTrain = 0, kValidation = 1, kTest = 2 };
std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream stream);

struct TrialRollout {
  std::unique_ptr<TrialState> state;
  Mat predictions;         // [T x pred_dim]
  std::vector<double> eta; // internal learning rate per step (0 for rule none)
  Tensor loss;             // sum_t mask_t * step_loss_t, on state's tape
};

/// Resets a fresh trial state and runs every step of trial b on one tape.
/// Throws NonFiniteError when a forward value blows up.
TrialRollout run_trial(const PlasticNetwork& net, const TrialBatch& batch, Index b, bool classification);

/// Meta-loss of one batch and its gradient with respect to the flat
/// parameter vector, averaged over masked steps and trials.
struct BatchGradient {
  double loss = 0.0;
  Vec grad;
};
BatchGradient meta_gradient(const PlasticNetwork& net, const TrialBatch& batch, bool classification,
                            int threads = 1);

/// Scales grads in place when their norm exceeds max_norm; returns the
/// scale applied (1 when untouched).
double clip_global_norm(Eigen::Ref<Vec> grads, double max_norm);

/// Bias-corrected AdamW with decoupled weight decay. `step` is the 1-based
/// index of this update.
void adamw_update(Eigen::Ref<Vec> params, const Eigen::Ref<const Vec>& grads, Eigen::Ref<Vec> m, Eigen::Ref<Vec> v,
                  long step, const TrainerConfig& cfg);

struct StepMetrics {
  long iteration = 0;
  double train_loss = 0.0;
  double grad_norm = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

struct EvalResult {
  double loss = 0.0;
  std::optional<double> accuracy;
  std::vector<double> eta_mean;  // per time step, averaged over trials
  std::vector<double> eta_sem;
  double mean_eta_train = 0.0;   // over non-query steps
  double mean_eta_query = 0.0;   // over query steps
};

struct MetricsRow {
  long step = 0;
  std::optional<double> train_loss;
  double val_loss = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> grad_norm;
  long skipped_steps = 0;
  std::optional<double> mean_eta_train;
  std::optional<double> mean_eta_query;
};

struct FitResult {
  std::vector<MetricsRow> rows;
  Vec best_params;
  long best_step = 0;
  double best_val = 0.0;
  EvalResult test;
  long skipped_steps = 0;
};

/// Outer loop: batched rollouts, meta-gradients, clipping, AdamW, periodic
/// validation and best-snapshot tracking.
class Trainer {
 public:
  Trainer(TrainerConfig cfg, TaskConfig task, PlasticNetwork& net, std::uint64_t seed);

  const TrainerConfig& config() const { return cfg_; }
  const TaskConfig& task() const { return task_; }
  TrainerState& state() { return state_; }
  const TrainerState& state() const { return state_; }
  PlasticNetwork& network() { return *net_; }

  StepMetrics meta_train_step();

  EvalResult evaluate(SeedStream stream, int batches) const;

  /// Runs the configured number of steps. Each validation row is handed to
  /// `on_row` as soon as it exists. Network parameters are left at the best
  /// snapshot.
  FitResult fit(const std::function<void(const MetricsRow&)>& on_row = {});

  int worker_threads() const;

 private:
  TrainerConfig cfg_;
  TaskConfig task_;
  PlasticNetwork* net_;
  std::uint64_t seed_;
  TrainerState state_;
};

EvalResult evaluate(const PlasticNetwork& net, const TaskConfig& task, int batches, int batch_size,
                    std::uint64_t seed, int threads = 1);

/// Whether a validation metric improves on the best so far. Loss: lower is
/// better; accuracy: higher. Ties keep the earlier snapshot.
bool improves(double candidate, double best, bool higher_is_better);

}  // namespace plrnn

#endif  // PLRNN_TRAINING_HPP_
