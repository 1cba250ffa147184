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

#include "plrnn/models.hpp"

#include <cmath>
#include <utility>

#include "plrnn/random.hpp"

namespace plrnn {

const char* to_string(Backbone b) { return b == Backbone::kLstm ? "lstm" : "rnn"; }

const char* to_string(AlphaInit a) {
  switch (a) {
    case AlphaInit::kNone: return "none";
    case AlphaInit::kUniform: return "uniform";
    case AlphaInit::kNegUniform: return "neg_uniform";
    case AlphaInit::kRandom: return "random";
  }
  return "random";
}

Backbone parse_backbone(const std::string& s) {
  if (s == "rnn") return Backbone::kRnn;
  if (s == "lstm") return Backbone::kLstm;
  throw std::invalid_argument("backbone: expected rnn|lstm, got '" + s + "'");
}

AlphaInit parse_alpha_init(const std::string& s) {
  if (s == "none") return AlphaInit::kNone;
  if (s == "uniform") return AlphaInit::kUniform;
  if (s == "neg_uniform") return AlphaInit::kNegUniform;
  if (s == "random") return AlphaInit::kRandom;
  throw std::invalid_argument("alpha_init: expected none|uniform|neg_uniform|random, got '" + s + "'");
}

void NetworkConfig::validate() const {
  if (hidden <= 0) throw std::invalid_argument("hidden: must be positive");
  if (input_dim <= 0) throw std::invalid_argument("input_dim: must be positive");
  if (pred_dim <= 0) throw std::invalid_argument("pred_dim: must be positive");
  if (aux_dim < 0) throw std::invalid_argument("aux_dim: must be non-negative");
  neuromod.validate();
}

// ---------------------------------------------------------------------------
// ParameterSet

std::size_t ParameterSet::add(std::string name, const Shape& shape) {
  Entry e{std::move(name), shape, flat_.size()};
  const Index n = shape.size();
  Vec grown = Vec::Zero(flat_.size() + n);
  grown.head(flat_.size()) = flat_;
  flat_ = std::move(grown);
  entries_.push_back(std::move(e));
  return entries_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  return std::nullopt;
}

Eigen::Map<Mat> ParameterSet::view(std::size_t i) {
  const Entry& e = entries_[i];
  return {flat_.data() + e.offset, e.shape.rows(), e.shape.cols()};
}

Eigen::Map<const Mat> ParameterSet::view(std::size_t i) const {
  const Entry& e = entries_[i];
  return {flat_.data() + e.offset, e.shape.rows(), e.shape.cols()};
}

// ---------------------------------------------------------------------------
// Construction

namespace {

void add_layer(PlasticNetwork& net, std::vector<LayerSpec>& layers, ParameterSet& ps, const NetworkConfig& cfg,
               std::string name, Index in, Index out, bool bias, Activation act) {
  LayerSpec l;
  l.name = std::move(name);
  l.in = in;
  l.out = out;
  l.activation = act;
  l.weight = static_cast<int>(ps.add(l.name + ".weight", Shape::matrix(in, out)));
  if (bias) l.bias = static_cast<int>(ps.add(l.name + ".bias", Shape::vector(out)));
  const bool plastic = cfg.rule != PlasticityRule::kNone;
  if (plastic && cfg.alpha_init != AlphaInit::kNone) {
    l.alpha = static_cast<int>(ps.add(l.name + ".alpha", Shape::matrix(in, out)));
    if (bias && cfg.rule == PlasticityRule::kGradient)
      l.beta = static_cast<int>(ps.add(l.name + ".beta", Shape::vector(out)));
  }
  layers.push_back(std::move(l));
  (void)net;
}

}  // namespace

PlasticNetwork build_architecture(const NetworkConfig& cfg) {
  cfg.validate();
  PlasticNetwork net;
  net.cfg_ = cfg;
  const Index h = cfg.hidden;
  auto& L = net.layers_;
  auto& P = net.params_;
  add_layer(net, L, P, cfg, "encoder", cfg.input_dim, h, true, Activation::kRelu);
  if (cfg.backbone == Backbone::kRnn) {
    add_layer(net, L, P, cfg, "rnn.ih", h, h, true, Activation::kRelu);
    add_layer(net, L, P, cfg, "rnn.hh", h, h, false, Activation::kRelu);
  } else {
    const std::pair<const char*, Activation> gates[] = {
        {"i", Activation::kSigmoid}, {"f", Activation::kSigmoid}, {"g", Activation::kTanh}, {"o", Activation::kSigmoid}};
    for (const auto& [g, act] : gates) {
      add_layer(net, L, P, cfg, std::string("lstm.ih_") + g, h, h, true, act);
      add_layer(net, L, P, cfg, std::string("lstm.hh_") + g, h, h, false, act);
    }
  }
  add_layer(net, L, P, cfg, "readout", h, cfg.output_dim(), true, Activation::kIdentity);
  if (cfg.rule != PlasticityRule::kNone)
    net.w_out_ = static_cast<int>(P.add("loss_head.w_out", Shape::vector(cfg.output_dim())));
  return net;
}

PlasticNetwork build_network(const NetworkConfig& cfg) {
  PlasticNetwork net = build_architecture(cfg);
  Rng rng(cfg.seed);
  auto& ps = net.params_;
  auto fill_uniform = [&](int slot, double bound) {
    auto v = ps.view(static_cast<std::size_t>(slot));
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-bound, bound);
  };
  auto fill_rate = [&](int slot) {
    if (slot < 0) return;
    auto v = ps.view(static_cast<std::size_t>(slot));
    switch (cfg.alpha_init) {
      case AlphaInit::kUniform: v.setConstant(1.0); break;
      case AlphaInit::kNegUniform: v.setConstant(-1.0); break;
      case AlphaInit::kRandom:
        for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-1.0, 1.0);
        break;
      case AlphaInit::kNone: break;
    }
  };
  for (const LayerSpec& l : net.layers_) {
    const double bound = 1.0 / static_cast<double>(l.out);
    fill_uniform(l.weight, bound);
    if (l.bias >= 0) fill_uniform(l.bias, bound);
    fill_rate(l.alpha);
    fill_rate(l.beta);
  }
  if (net.w_out_ >= 0) ps.view(static_cast<std::size_t>(net.w_out_)).setConstant(1.0);
  return net;
}

Index param_count(const PlasticNetwork& net) { return net.params().scalar_count(); }

// ---------------------------------------------------------------------------
// Trial state

TrialState::TrialState(const PlasticNetwork& net) : net_(&net) { reset(); }

void TrialState::reset() {
  tape_ = std::make_unique<Tape>();
  Tape& tape = *tape_;
  const NetworkConfig& cfg = net_->config();
  const ParameterSet& ps = net_->params();
  leaves_.clear();
  leaves_.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) leaves_.push_back(tape.leaf(Mat(ps.view(i)), ps.entry(i).shape));

  const bool plastic = cfg.rule != PlasticityRule::kNone;
  layers_.clear();
  for (const LayerSpec& spec : net_->layers()) {
    PlasticLayer l;
    l.activation = spec.activation;
    l.w_static = leaves_[static_cast<std::size_t>(spec.weight)];
    if (spec.bias >= 0) l.b_static = leaves_[static_cast<std::size_t>(spec.bias)];
    if (plastic) {
      l.w_plastic = tape.zeros(Shape::matrix(spec.in, spec.out));
      l.alpha = spec.alpha >= 0 ? leaves_[static_cast<std::size_t>(spec.alpha)]
                                : tape.ones(Shape::matrix(spec.in, spec.out));
      if (cfg.rule == PlasticityRule::kGradient && spec.bias >= 0) {
        l.b_plastic = tape.zeros(Shape::vector(spec.out));
        l.beta = spec.beta >= 0 ? leaves_[static_cast<std::size_t>(spec.beta)] : tape.ones(Shape::vector(spec.out));
      }
    }
    layers_.push_back(l);
  }
  head_ = {};
  if (net_->w_out_slot() >= 0) head_.w_out = leaves_[static_cast<std::size_t>(net_->w_out_slot())];
  h_ = tape.zeros(Shape::vector(cfg.hidden));
  c_ = cfg.backbone == Backbone::kLstm ? tape.zeros(Shape::vector(cfg.hidden)) : Tensor();
  last_ = {};
  t_ = 0;
}

namespace {

bool all_finite(const Tensor& t) { return t.value().allFinite(); }

}  // namespace

Tensor TrialState::rnn_step(const Tensor& x_enc, StepRecord& rec) {
  const PlasticLayer& ih = layers_[1];
  const PlasticLayer& hh = layers_[2];
  Tensor pre = plastic_projection(ih, x_enc) + ih.b_static;
  if (ih.b_plastic.valid()) pre = pre + ih.b_plastic;
  pre = pre + plastic_projection(hh, h_);
  const Tensor h_next = relu(pre);
  rec.pre[1] = x_enc;
  rec.pre[2] = h_;
  rec.post[1] = rec.post[2] = h_next;
  rec.preact[1] = rec.preact[2] = pre;
  return h_next;
}

Tensor TrialState::lstm_step(const Tensor& x_enc, StepRecord& rec) {
  Tensor gate[4];
  for (int k = 0; k < 4; ++k) {
    const std::size_t ih = static_cast<std::size_t>(1 + 2 * k), hh = ih + 1;
    const PlasticLayer& lih = layers_[ih];
    const PlasticLayer& lhh = layers_[hh];
    Tensor pre = plastic_projection(lih, x_enc) + lih.b_static;
    if (lih.b_plastic.valid()) pre = pre + lih.b_plastic;
    pre = pre + plastic_projection(lhh, h_);
    gate[k] = activate(lih.activation, pre);
    rec.pre[ih] = x_enc;
    rec.pre[hh] = h_;
    rec.post[ih] = rec.post[hh] = gate[k];
    rec.preact[ih] = rec.preact[hh] = pre;
  }
  const Tensor c_next = cwise_product(gate[1], c_) + cwise_product(gate[0], gate[2]);
  const Tensor h_next = cwise_product(gate[3], tanh(c_next));
  c_ = c_next;
  return h_next;
}

ModelOutput TrialState::step(const Eigen::Ref<const RowVec>& x) {
  const NetworkConfig& cfg = net_->config();
  if (x.size() != cfg.input_dim)
    throw ShapeError("network_step: input of length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(cfg.input_dim));
  Tape& tape = *tape_;
  const std::size_t n_layers = layers_.size();
  StepRecord rec;
  rec.layers_before = layers_;
  rec.pre.resize(n_layers);
  rec.post.resize(n_layers);
  rec.preact.resize(n_layers);

  const Tensor xt = tape.vector(x);
  const LinearOutput enc = plastic_linear_forward(layers_[0], xt);
  rec.pre[0] = xt;
  rec.post[0] = enc.q;
  rec.preact[0] = enc.preact;

  const Tensor h_next = cfg.backbone == Backbone::kRnn ? rnn_step(enc.q, rec) : lstm_step(enc.q, rec);

  const std::size_t ro = n_layers - 1;
  const LinearOutput out = plastic_linear_forward(layers_[ro], h_next);
  rec.pre[ro] = h_next;
  rec.post[ro] = out.q;
  rec.preact[ro] = out.preact;

  ModelOutput mo;
  mo.o = out.q;
  mo.eta_tilde = sum(slice(mo.o, 0, 1));
  mo.y = slice(mo.o, 1, cfg.pred_dim);
  if (cfg.aux_dim > 0) mo.y_aux = slice(mo.o, 1 + cfg.pred_dim, cfg.aux_dim);
  if (!all_finite(mo.o) || !all_finite(h_next)) throw NonFiniteError(t_ + 1, "model output");

  if (cfg.rule != PlasticityRule::kNone) {
    std::vector<std::pair<Tensor, Tensor>> factors;
    std::vector<Tensor> bias_deltas;
    if (cfg.rule == PlasticityRule::kGradient) {
      rec.internal_loss = internal_loss(mo.o, head_);
      // dL/dw = p (dL/dpreact)^T per projection; dL/db = dL/dpreact.
      std::vector<Tensor> targets;
      std::vector<std::size_t> slot(n_layers);
      for (std::size_t i = 0; i < n_layers; ++i) {
        std::size_t j = 0;
        while (j < targets.size() && targets[j].id() != rec.preact[i].id()) ++j;
        if (j == targets.size()) targets.push_back(rec.preact[i]);
        slot[i] = j;
      }
      const std::vector<Tensor> g = grad(rec.internal_loss, targets);
      for (std::size_t i = 0; i < n_layers; ++i) {
        rec.post[i] = g[slot[i]];
        if (layers_[i].b_plastic.valid()) bias_deltas.push_back(rec.post[i]);
      }
    }
    for (std::size_t i = 0; i < n_layers; ++i) factors.emplace_back(rec.pre[i], rec.post[i]);
    rec.delta_norm = factored_delta_norm(factors, bias_deltas);
    mo.eta = compute_eta(mo.eta_tilde, rec.delta_norm, cfg.neuromod);
    if (!all_finite(mo.eta)) throw NonFiniteError(t_ + 1, "eta");

    const Tensor decay = affine(mo.eta, -1.0, 1.0);
    for (std::size_t i = 0; i < n_layers; ++i) {
      PlasticLayer& l = layers_[i];
      l.w_plastic = plastic_update(l.w_plastic, l.alpha, rec.pre[i], rec.post[i], mo.eta);
      if (l.b_plastic.valid())
        l.b_plastic = scalar_mul(decay, l.b_plastic) + scalar_mul(mo.eta, cwise_product(l.beta, rec.post[i]));
    }
  }

  h_ = h_next;
  last_ = std::move(rec);
  ++t_;
  return mo;
}

}  // namespace plrnn
