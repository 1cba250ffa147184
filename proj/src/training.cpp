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

#include "plrnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace plrnn {

void TrainerConfig::validate() const {
  if (!(outer_lr >= 0.0)) throw std::invalid_argument("outer_lr: must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1: must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2: must be in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps: must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay: must be >= 0");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm: must be > 0");
  if (batch <= 0) throw std::invalid_argument("batch: must be positive");
  if (steps < 0) throw std::invalid_argument("steps: must be >= 0");
  if (val_interval <= 0) throw std::invalid_argument("val_interval: must be positive");
  if (eval_batches <= 0) throw std::invalid_argument("eval_batches: must be positive");
  if (test_batches <= 0) throw std::invalid_argument("test_batches: must be positive");
  if (threads < 0) throw std::invalid_argument("threads: must be >= 0");
}

std::uint64_t stream_seed(std::uint64_t run_seed, SeedStream stream) {
  // splitmix64 finalizer decorrelates neighbouring run seeds; the stream
  // index occupies the top bits so the per-trial ranges never meet.
  std::uint64_t z = run_seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  z &= (std::uint64_t{1} << 56) - 1;
  return z | (static_cast<std::uint64_t>(stream) << 60);
}

namespace {

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<Index>(threads, n));
  std::atomic<Index> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next = n;
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TrialRollout run_trial(const PlasticNetwork& net, const TrialBatch& batch, Index b, bool classification) {
  TrialRollout r;
  r.state = std::make_unique<TrialState>(net);
  TrialState& st = *r.state;
  const Index steps = batch.steps;
  r.predictions.resize(steps, net.config().pred_dim);
  r.eta.assign(static_cast<std::size_t>(steps), 0.0);
  Tensor loss;
  for (Index t = 0; t < steps; ++t) {
    const ModelOutput out = st.step(batch.input(t, b));
    r.predictions.row(t) = out.y.value();
    if (out.eta.valid()) r.eta[static_cast<std::size_t>(t)] = out.eta.item();
    const double w = batch.mask(t, b);
    if (w == 0.0) continue;
    Tensor term = step_loss(classification, out.y, batch.target(t, b));
    if (w != 1.0) term = affine(term, w, 0.0);
    loss = loss.valid() ? loss + term : term;
  }
  if (!loss.valid()) loss = st.tape().scalar(0.0);
  if (!std::isfinite(loss.item())) throw NonFiniteError(static_cast<int>(steps), "meta-loss");
  r.loss = loss;
  return r;
}

BatchGradient meta_gradient(const PlasticNetwork& net, const TrialBatch& batch, bool classification, int threads) {
  const double weight = batch.mask_total();
  if (!(weight > 0.0)) throw std::invalid_argument("meta_gradient: empty loss mask");
  const ParameterSet& ps = net.params();
  const Index n_params = ps.scalar_count();
  std::vector<Vec> grads(static_cast<std::size_t>(batch.batch));
  std::vector<double> losses(static_cast<std::size_t>(batch.batch), 0.0);
  parallel_for(batch.batch, threads, [&](Index b) {
    TrialRollout r = run_trial(net, batch, b, classification);
    const std::vector<Mat> g = gradient_values(r.loss, r.state->param_leaves());
    Vec flat(n_params);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& e = ps.entry(i);
      Eigen::Map<Mat>(flat.data() + e.offset, e.shape.rows(), e.shape.cols()) = g[i];
    }
    losses[static_cast<std::size_t>(b)] = r.loss.item();
    grads[static_cast<std::size_t>(b)] = std::move(flat);
  });
  BatchGradient out;
  out.grad = Vec::Zero(n_params);
  for (Index b = 0; b < batch.batch; ++b) {
    out.loss += losses[static_cast<std::size_t>(b)];
    out.grad += grads[static_cast<std::size_t>(b)];
  }
  out.loss /= weight;
  out.grad /= weight;
  return out;
}

double clip_global_norm(Eigen::Ref<Vec> grads, double max_norm) {
  const double norm = grads.norm();
  if (!(norm > max_norm)) return 1.0;
  const double scale = max_norm / norm;
  grads *= scale;
  return scale;
}

void adamw_update(Eigen::Ref<Vec> params, const Eigen::Ref<const Vec>& grads, Eigen::Ref<Vec> m, Eigen::Ref<Vec> v,
                  long step, const TrainerConfig& cfg) {
  if (params.size() != grads.size() || m.size() != params.size() || v.size() != params.size())
    throw std::invalid_argument("adamw_update: length mismatch");
  if (step < 1) throw std::invalid_argument("adamw_update: step must be >= 1");
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const auto m_hat = m.array() / c1;
  const auto v_hat = v.array() / c2;
  params.array() -= cfg.outer_lr * (m_hat / (v_hat.sqrt() + cfg.eps)) + cfg.outer_lr * cfg.weight_decay * params.array();
}

bool improves(double candidate, double best, bool higher_is_better) {
  if (std::isnan(candidate)) return false;
  if (std::isnan(best)) return true;
  return higher_is_better ? candidate > best : candidate < best;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalResult evaluate(const PlasticNetwork& net, const TaskConfig& task, int batches, int batch_size,
                    std::uint64_t seed, int threads) {
  const bool cls = task.classification();
  const Index steps = task.length();
  EvalResult res;
  std::vector<double> eta_sum(static_cast<std::size_t>(steps), 0.0), eta_sq(static_cast<std::size_t>(steps), 0.0);
  double loss_total = 0.0, weight_total = 0.0, correct = 0.0;
  bool blew_up = false;
  double train_eta = 0.0, query_eta = 0.0;
  long train_n = 0, query_n = 0;
  for (int bi = 0; bi < batches; ++bi) {
    const TrialBatch batch =
        generate(task, batch_size, seed + static_cast<std::uint64_t>(bi) * static_cast<std::uint64_t>(batch_size));
    Predictions preds(batch.steps, batch.batch, net.config().pred_dim);
    std::vector<std::vector<double>> etas(static_cast<std::size_t>(batch.batch));
    std::vector<char> failed(static_cast<std::size_t>(batch.batch), 0);
    parallel_for(batch.batch, threads, [&](Index b) {
      try {
        TrialRollout r = run_trial(net, batch, b, cls);
        for (Index t = 0; t < batch.steps; ++t) preds.at(t, b) = r.predictions.row(t);
        etas[static_cast<std::size_t>(b)] = std::move(r.eta);
      } catch (const NonFiniteError&) {
        failed[static_cast<std::size_t>(b)] = 1;
      }
    });
    for (Index b = 0; b < batch.batch; ++b) {
      if (failed[static_cast<std::size_t>(b)]) {
        blew_up = true;
        continue;
      }
      const auto& e = etas[static_cast<std::size_t>(b)];
      for (Index t = 0; t < steps; ++t) {
        const double v = e[static_cast<std::size_t>(t)];
        eta_sum[static_cast<std::size_t>(t)] += v;
        eta_sq[static_cast<std::size_t>(t)] += v * v;
        if (batch.query[static_cast<std::size_t>(t)]) {
          query_eta += v;
          ++query_n;
        } else {
          train_eta += v;
          ++train_n;
        }
        const double w = batch.mask(t, b);
        if (w != 0.0) {
          loss_total += w * step_loss(cls, preds.at(t, b), batch.target(t, b));
          weight_total += w;
        }
      }
    }
    if (cls) correct += first_query_accuracy(batch, preds) * static_cast<double>(batch.batch);
  }
  const double trials = static_cast<double>(batches) * static_cast<double>(batch_size);
  res.loss = blew_up ? std::numeric_limits<double>::infinity() : loss_total / weight_total;
  if (cls) res.accuracy = correct / trials;
  res.eta_mean.resize(static_cast<std::size_t>(steps));
  res.eta_sem.resize(static_cast<std::size_t>(steps));
  for (std::size_t t = 0; t < static_cast<std::size_t>(steps); ++t) {
    const double mu = eta_sum[t] / trials;
    const double var = std::max(eta_sq[t] / trials - mu * mu, 0.0);
    res.eta_mean[t] = mu;
    res.eta_sem[t] = trials > 1 ? std::sqrt(var * trials / (trials - 1.0)) / std::sqrt(trials) : 0.0;
  }
  res.mean_eta_train = train_n ? train_eta / static_cast<double>(train_n) : 0.0;
  res.mean_eta_query = query_n ? query_eta / static_cast<double>(query_n) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainerConfig cfg, TaskConfig task, PlasticNetwork& net, std::uint64_t seed)
    : cfg_(cfg), task_(task), net_(&net), seed_(seed) {
  cfg_.validate();
  task_.validate();
  const NetworkConfig& nc = net.config();
  if (nc.input_dim != task_.input_dim())
    throw std::invalid_argument("input_dim: network expects " + std::to_string(nc.input_dim) + ", task provides " +
                                std::to_string(task_.input_dim()));
  if (nc.pred_dim != task_.pred_dim())
    throw std::invalid_argument("pred_dim: network predicts " + std::to_string(nc.pred_dim) + ", task needs " +
                                std::to_string(task_.pred_dim()));
  const Index n = net.params().scalar_count();
  state_.m = Vec::Zero(n);
  state_.v = Vec::Zero(n);
  state_.best_params = net.params().flat();
}

int Trainer::worker_threads() const {
  if (cfg_.deterministic) return 1;
  if (cfg_.threads > 0) return cfg_.threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

StepMetrics Trainer::meta_train_step() {
  StepMetrics out;
  out.iteration = ++state_.iteration;
  const std::uint64_t seed = stream_seed(seed_, SeedStream::kTrain) +
                             static_cast<std::uint64_t>(out.iteration - 1) * static_cast<std::uint64_t>(cfg_.batch);
  const TrialBatch batch = generate(task_, cfg_.batch, seed);
  BatchGradient bg;
  try {
    bg = meta_gradient(*net_, batch, task_.classification(), worker_threads());
  } catch (const NonFiniteError& e) {
    out.skipped = true;
    out.skip_reason = e.what();
    out.train_loss = std::numeric_limits<double>::quiet_NaN();
    out.grad_norm = std::numeric_limits<double>::quiet_NaN();
    ++state_.skipped;
    return out;
  }
  out.train_loss = bg.loss;
  out.grad_norm = bg.grad.norm();
  if (!std::isfinite(bg.loss) || !std::isfinite(out.grad_norm)) {
    out.skipped = true;
    out.skip_reason = "non-finite meta-gradient";
    ++state_.skipped;
    return out;
  }
  clip_global_norm(bg.grad, cfg_.clip_norm);
  adamw_update(net_->params().flat(), bg.grad, state_.m, state_.v, state_.step + 1, cfg_);
  ++state_.step;
  return out;
}

EvalResult Trainer::evaluate(SeedStream stream, int batches) const {
  return plrnn::evaluate(*net_, task_, batches, cfg_.batch, stream_seed(seed_, stream), worker_threads());
}

FitResult Trainer::fit(const std::function<void(const MetricsRow&)>& on_row) {
  FitResult res;
  const bool higher = task_.classification();
  const bool plastic = net_->config().rule != PlasticityRule::kNone;
  double window_loss = 0.0, window_norm = 0.0;
  long window_n = 0;

  auto validate = [&](long step) {
    const EvalResult ev = evaluate(SeedStream::kValidation, cfg_.eval_batches);
    MetricsRow row;
    row.step = step;
    if (window_n > 0) {
      row.train_loss = window_loss / static_cast<double>(window_n);
      row.grad_norm = window_norm / static_cast<double>(window_n);
    }
    row.val_loss = ev.loss;
    row.val_accuracy = ev.accuracy;
    row.skipped_steps = state_.skipped;
    if (plastic) {
      row.mean_eta_train = ev.mean_eta_train;
      row.mean_eta_query = ev.mean_eta_query;
    }
    const double metric = higher ? ev.accuracy.value_or(0.0) : ev.loss;
    if (state_.best_step < 0 || improves(metric, state_.best_val, higher)) {
      state_.best_val = metric;
      state_.best_step = step;
      state_.best_params = net_->params().flat();
    }
    res.rows.push_back(row);
    if (on_row) on_row(row);
    window_loss = window_norm = 0.0;
    window_n = 0;
  };

  if (state_.iteration == 0) validate(0);
  while (state_.iteration < cfg_.steps) {
    const StepMetrics m = meta_train_step();
    if (!m.skipped) {
      window_loss += m.train_loss;
      window_norm += m.grad_norm;
      ++window_n;
    }
    if (state_.iteration % cfg_.val_interval == 0) validate(state_.iteration);
  }
  net_->params().flat() = state_.best_params;
  res.best_params = state_.best_params;
  res.best_step = state_.best_step;
  res.best_val = state_.best_val;
  res.skipped_steps = state_.skipped;
  res.test = evaluate(SeedStream::kTest, cfg_.test_batches);
  return res;
}

}  // namespace plrnn
