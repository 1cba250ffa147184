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

#include "plrnn/plasticity.hpp"

#include <algorithm>
#include <cmath>

namespace plrnn {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

const char* to_string(PlasticityRule r) {
  switch (r) {
    case PlasticityRule::kNone: return "none";
    case PlasticityRule::kHebbian: return "hebbian";
    case PlasticityRule::kGradient: return "gradient";
  }
  return "none";
}

PlasticityRule parse_rule(const std::string& s) {
  if (s == "none") return PlasticityRule::kNone;
  if (s == "hebbian") return PlasticityRule::kHebbian;
  if (s == "gradient") return PlasticityRule::kGradient;
  throw std::invalid_argument("rule: expected none|hebbian|gradient, got '" + s + "'");
}

Tensor activate(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kRelu: return relu(x);
    case Activation::kTanh: return tanh(x);
    case Activation::kSigmoid: return sigmoid(x);
  }
  return x;
}

void NeuromodConfig::validate() const {
  if (!(eta0 >= 0.0)) throw std::invalid_argument("eta0: must be >= 0");
  if (!(max_norm > 0.0)) throw std::invalid_argument("max_norm: must be > 0");
}

Tensor plastic_projection(const PlasticLayer& layer, const Tensor& p) {
  Tensor z = matmul(p, layer.w_static);
  if (layer.w_plastic.valid()) z = z + matmul(p, layer.w_plastic);
  return z;
}

LinearOutput plastic_linear_forward(const PlasticLayer& layer, const Tensor& p) {
  Tensor pre = plastic_projection(layer, p);
  if (layer.has_bias()) {
    pre = pre + layer.b_static;
    if (layer.b_plastic.valid()) pre = pre + layer.b_plastic;
  }
  return {activate(layer.activation, pre), pre};
}

Tensor hebbian_delta(const Tensor& p, const Tensor& q) { return outer(p, q); }

Tensor internal_loss(const Tensor& o, const InternalLossHead& head) {
  if (!(o.shape() == head.w_out.shape()))
    throw ShapeError("internal_loss: output " + o.shape().str() + " vs head " + head.w_out.shape().str());
  return mean(square(cwise_product(head.w_out, o)));
}

Tensor compute_eta(const Tensor& eta_tilde, const Tensor& norm, const NeuromodConfig& cfg) {
  Tape& tape = norm.tape();
  Tensor clip;
  if (norm.item() == 0.0) {
    clip = tape.scalar(1.0);
  } else {
    clip = min_const(affine(reciprocal(norm), cfg.max_norm, 0.0), 1.0);
    if (!cfg.clip_gradient_flow) clip = detach(clip);
  }
  const Tensor rate = cfg.modulated ? affine(sigmoid(eta_tilde), cfg.eta0, 0.0) : tape.scalar(cfg.eta0);
  return cwise_product(rate, clip);
}

Scalar compute_eta(Scalar eta_tilde, Scalar norm, const NeuromodConfig& cfg) {
  const Scalar clip = norm == 0.0 ? 1.0 : std::min(cfg.max_norm * (1.0 / norm), 1.0);
  if (!cfg.modulated) return cfg.eta0 * clip;
  const Scalar s = eta_tilde >= 0 ? 1.0 / (1.0 + std::exp(-eta_tilde))
                                  : std::exp(eta_tilde) / (1.0 + std::exp(eta_tilde));
  return (cfg.eta0 * s) * clip;
}

Tensor delta_norm(std::span<const Tensor> deltas) {
  if (deltas.empty()) throw std::invalid_argument("delta_norm: no deltas");
  Tensor total = sum(square(deltas[0]));
  for (std::size_t i = 1; i < deltas.size(); ++i) total = total + sum(square(deltas[i]));
  if (total.item() == 0.0) return deltas[0].tape().scalar(0.0);
  return sqrt(total);
}

Tensor factored_delta_norm(std::span<const std::pair<Tensor, Tensor>> rank_one, std::span<const Tensor> vectors) {
  Tensor total;
  auto add = [&](const Tensor& t) { total = total.valid() ? total + t : t; };
  for (const auto& [p, q] : rank_one) add(cwise_product(sum(square(p)), sum(square(q))));
  for (const Tensor& v : vectors) add(sum(square(v)));
  if (!total.valid()) throw std::invalid_argument("factored_delta_norm: no deltas");
  if (total.item() == 0.0) return total.tape().scalar(0.0);
  return sqrt(total);
}

std::vector<LayerDeltas> gradient_deltas(const Tensor& loss, std::span<const PlasticLayer> layers) {
  std::vector<Tensor> targets;
  for (const PlasticLayer& l : layers) {
    targets.push_back(l.w_plastic);
    if (l.b_plastic.valid()) targets.push_back(l.b_plastic);
  }
  const std::vector<Tensor> g = grad(loss, targets);
  std::vector<LayerDeltas> out;
  std::size_t k = 0;
  for (const PlasticLayer& l : layers) {
    LayerDeltas d;
    d.weight = g[k++];
    if (l.b_plastic.valid()) d.bias = g[k++];
    out.push_back(d);
  }
  return out;
}

PlasticLayer apply_update(const PlasticLayer& layer, const Tensor& delta_w, const Tensor& delta_b, const Tensor& eta,
                          PlasticityRule rule) {
  if (!(delta_w.shape() == layer.w_plastic.shape()))
    throw ShapeError("apply_update: delta " + delta_w.shape().str() + " vs weight " + layer.w_plastic.shape().str());
  PlasticLayer next = layer;
  const Tensor decay = affine(eta, -1.0, 1.0);
  next.w_plastic = scalar_mul(decay, layer.w_plastic) + scalar_mul(eta, cwise_product(layer.alpha, delta_w));
  if (rule == PlasticityRule::kGradient && layer.b_plastic.valid() && delta_b.valid()) {
    if (!(delta_b.shape() == layer.b_plastic.shape()))
      throw ShapeError("apply_update: bias delta " + delta_b.shape().str() + " vs bias " +
                       layer.b_plastic.shape().str());
    next.b_plastic = scalar_mul(decay, layer.b_plastic) + scalar_mul(eta, cwise_product(layer.beta, delta_b));
  }
  return next;
}

}  // namespace plrnn
