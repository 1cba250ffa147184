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

#ifndef PLRNN_PLASTICITY_HPP_
#define PLRNN_PLASTICITY_HPP_

#include <span>
#include <string>
#include <vector>

#include "plrnn/tensor.hpp"

namespace plrnn {

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };
enum class PlasticityRule { kNone, kHebbian, kGradient };

const char* to_string(Activation a);
const char* to_string(PlasticityRule r);
PlasticityRule parse_rule(const std::string& s);

Tensor activate(Activation a, const Tensor& x);

/// Global neuromodulation settings for the internal learning rate.
struct NeuromodConfig {
  Scalar eta0 = 0.2;
  Scalar max_norm = 1.0;
  // false: the sigmoid(eta_tilde) factor is replaced by 1 (fixed rate).
  bool modulated = true;
  // false: the norm-clip factor is treated as a constant by the outer loop.
  bool clip_gradient_flow = true;

  void validate() const;
};

/// One weight matrix of a plastic network, bound to a trial's tape.
/// Effective weight is w_static + w_plastic, stored as [in x out].
/// Bias parts are invalid tensors for bias-free projections; beta is
/// invalid unless the gradient rule is active.
struct PlasticLayer {
  Tensor w_static;
  Tensor w_plastic;
  Tensor alpha;
  Tensor b_static;
  Tensor b_plastic;
  Tensor beta;
  Activation activation = Activation::kIdentity;

  bool has_bias() const { return b_static.valid(); }
  Index in() const { return w_static.shape().dims[0]; }
  Index out() const { return w_static.shape().dims[1]; }
};

struct InternalLossHead {
  Tensor w_out;
};

struct LinearOutput {
  Tensor q;
  Tensor preact;
};

/// (w_static + w_plastic)^T p without bias.
Tensor plastic_projection(const PlasticLayer& layer, const Tensor& p);

/// preact = (b_static + b_plastic) + (w_static + w_plastic)^T p, q = act(preact).
LinearOutput plastic_linear_forward(const PlasticLayer& layer, const Tensor& p);

/// p q^T.
Tensor hebbian_delta(const Tensor& p, const Tensor& q);

/// (1 / dim(o)) * sum_i (w_out_i * o_i)^2.
Tensor internal_loss(const Tensor& o, const InternalLossHead& head);

/// eta0 * sigmoid(eta_tilde) * min(1, max_norm / |delta|). A zero norm gives
/// a clip factor of exactly 1.
Tensor compute_eta(const Tensor& eta_tilde, const Tensor& delta_norm, const NeuromodConfig& cfg);
Scalar compute_eta(Scalar eta_tilde, Scalar delta_norm, const NeuromodConfig& cfg);

/// L2 norm of all entries of all deltas, as if concatenated.
Tensor delta_norm(std::span<const Tensor> deltas);

/// Norm of concatenated rank-one deltas p_k q_k^T plus plain vector deltas,
/// using |p q^T| = |p| |q|. Avoids materializing the outer products.
Tensor factored_delta_norm(std::span<const std::pair<Tensor, Tensor>> rank_one,
                           std::span<const Tensor> vectors);

struct LayerDeltas {
  Tensor weight;
  Tensor bias;  // invalid for bias-free layers
};

/// dL/dw_plastic and dL/db_plastic for each layer through grad(), so the
/// results remain differentiable.
std::vector<LayerDeltas> gradient_deltas(const Tensor& loss, std::span<const PlasticLayer> layers);

/// w' = (1 - eta) w + eta (alpha o dW); under the gradient rule the bias
/// follows the same form with beta, under the Hebbian rule it is left alone.
PlasticLayer apply_update(const PlasticLayer& layer, const Tensor& delta_w, const Tensor& delta_b,
                          const Tensor& eta, PlasticityRule rule);

}  // namespace plrnn

#endif  // PLRNN_PLASTICITY_HPP_
