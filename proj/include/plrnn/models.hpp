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

#ifndef PLRNN_MODELS_HPP_
#define PLRNN_MODELS_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plrnn/plasticity.hpp"
#include "plrnn/tensor.hpp"

namespace plrnn {

enum class Backbone { kRnn, kLstm };
enum class AlphaInit { kNone, kUniform, kNegUniform, kRandom };

const char* to_string(Backbone b);
const char* to_string(AlphaInit a);
Backbone parse_backbone(const std::string& s);
AlphaInit parse_alpha_init(const std::string& s);

struct NetworkConfig {
  Backbone backbone = Backbone::kRnn;
  PlasticityRule rule = PlasticityRule::kHebbian;
  Index hidden = 64;
  Index input_dim = 3;
  Index pred_dim = 1;
  Index aux_dim = 4;
  NeuromodConfig neuromod;
  AlphaInit alpha_init = AlphaInit::kRandom;
  std::uint64_t seed = 0;

  Index output_dim() const { return 1 + pred_dim + aux_dim; }
  void validate() const;
};

/// Named outer-loop parameters packed into one flat vector, in a fixed
/// order. Views alias the flat storage.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Shape shape;
    Index offset = 0;
  };

  std::size_t add(std::string name, const Shape& shape);
  std::size_t size() const { return entries_.size(); }
  Index scalar_count() const { return flat_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::optional<std::size_t> find(const std::string& name) const;

  Eigen::Map<Mat> view(std::size_t i);
  Eigen::Map<const Mat> view(std::size_t i) const;

  Vec& flat() { return flat_; }
  const Vec& flat() const { return flat_; }

 private:
  std::vector<Entry> entries_;
  Vec flat_;
};

/// One weight matrix of the architecture plus the parameter slots it uses
/// (-1 when absent).
struct LayerSpec {
  std::string name;
  Index in = 0;
  Index out = 0;
  Activation activation = Activation::kIdentity;
  int weight = -1;
  int bias = -1;
  int alpha = -1;
  int beta = -1;
};

/// Static description plus outer-loop parameters. Immutable during a batch
/// of trials; each trial runs on its own TrialState.
class PlasticNetwork {
 public:
  PlasticNetwork() = default;

  const NetworkConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  int w_out_slot() const { return w_out_; }

  // Layer indices by role.
  int encoder() const { return 0; }
  int readout() const { return static_cast<int>(layers_.size()) - 1; }

 private:
  friend PlasticNetwork build_network(const NetworkConfig& cfg);
  friend PlasticNetwork build_architecture(const NetworkConfig& cfg);
  NetworkConfig cfg_;
  ParameterSet params_;
  std::vector<LayerSpec> layers_;
  int w_out_ = -1;
};

/// Architecture with all parameters zero; build_network then initializes.
PlasticNetwork build_architecture(const NetworkConfig& cfg);

/// Fan-out initialization: static weights and biases ~ U[-1/N, 1/N] with N
/// the layer's output width; alpha/beta per cfg.alpha_init; w_out = 1.
PlasticNetwork build_network(const NetworkConfig& cfg);

/// Outer-trainable scalar count.
Index param_count(const PlasticNetwork& net);

struct ModelOutput {
  Tensor eta_tilde;  // rank 0
  Tensor y;
  Tensor y_aux;      // invalid when aux_dim == 0
  Tensor o;
  Tensor eta;        // internal learning rate used for this step's update; invalid for rule none
};

class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(int step, const std::string& tensor)
      : std::runtime_error("non-finite value at step " + std::to_string(step) + " in " + tensor),
        step_(step),
        tensor_(tensor) {}
  int step() const { return step_; }
  const std::string& tensor() const { return tensor_; }

 private:
  int step_;
  std::string tensor_;
};

/// Bookkeeping of the most recent step, kept for inspection.
struct StepRecord {
  std::vector<PlasticLayer> layers_before;
  std::vector<Tensor> pre;      // per layer: presynaptic input p
  std::vector<Tensor> post;     // per layer: q (Hebbian) or dL/dpreact (gradient)
  std::vector<Tensor> preact;   // per layer: preactivation node of its unit group
  Tensor internal_loss;         // gradient rule only
  Tensor delta_norm;
};

/// Per-trial state: a fresh tape, leaves for every outer parameter, the
/// plastic weights and the recurrent state. Not shareable across threads.
class TrialState {
 public:
  explicit TrialState(const PlasticNetwork& net);

  /// Zeroes plastic tensors and hidden state on a fresh tape.
  void reset();

  /// Forward pass with w(t), then the plasticity update producing w(t+1).
  ModelOutput step(const Eigen::Ref<const RowVec>& x);

  Tape& tape() { return *tape_; }
  const PlasticNetwork& network() const { return *net_; }
  const std::vector<Tensor>& param_leaves() const { return leaves_; }
  const std::vector<PlasticLayer>& layers() const { return layers_; }
  const Tensor& hidden() const { return h_; }
  const Tensor& cell() const { return c_; }
  const StepRecord& last_step() const { return last_; }
  int steps_taken() const { return t_; }

 private:
  Tensor rnn_step(const Tensor& x_enc, StepRecord& rec);
  Tensor lstm_step(const Tensor& x_enc, StepRecord& rec);

  const PlasticNetwork* net_;
  std::unique_ptr<Tape> tape_;
  std::vector<Tensor> leaves_;
  std::vector<PlasticLayer> layers_;
  InternalLossHead head_;
  Tensor h_;
  Tensor c_;
  StepRecord last_;
  int t_ = 0;
};

}  // namespace plrnn

#endif  // PLRNN_MODELS_HPP_
