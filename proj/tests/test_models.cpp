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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "plrnn/gradcheck.hpp"
#include "plrnn/models.hpp"
#include "plrnn/random.hpp"
#include "test_util.hpp"

using namespace plrnn;
using plrnn::testing::max_abs_diff;
using plrnn::testing::row;

namespace {

NetworkConfig small_config(Backbone b, PlasticityRule r, Index hidden = 5) {
  NetworkConfig c;
  c.backbone = b;
  c.rule = r;
  c.hidden = hidden;
  c.input_dim = 3;
  c.pred_dim = 1;
  c.aux_dim = 2;
  c.seed = 17;
  return c;
}

// ---------------------------------------------------------------------------
// Straight-line reference built from std::vector loops, sharing nothing with
// the tape beyond reading parameter values.

using V = std::vector<double>;
using M = std::vector<V>;  // [in][out]

M to_m(const Eigen::Ref<const Mat>& m) {
  M r(static_cast<std::size_t>(m.rows()), V(static_cast<std::size_t>(m.cols())));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

V to_v(const Eigen::Ref<const Mat>& m) { return V(m.data(), m.data() + m.size()); }

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct RefLayer {
  std::string name;
  M w, p, alpha;
  V b, pb, beta;
  Activation act;
};

struct Reference {
  std::vector<RefLayer> layers;
  V w_out;
  V h, c;
  NetworkConfig cfg;

  explicit Reference(const PlasticNetwork& net) : cfg(net.config()) {
    const ParameterSet& ps = net.params();
    for (const LayerSpec& s : net.layers()) {
      RefLayer l;
      l.name = s.name;
      l.act = s.activation;
      l.w = to_m(ps.view(static_cast<std::size_t>(s.weight)));
      l.p = M(l.w.size(), V(l.w[0].size(), 0.0));
      l.alpha = s.alpha >= 0 ? to_m(ps.view(static_cast<std::size_t>(s.alpha))) : M(l.w.size(), V(l.w[0].size(), 1.0));
      l.b = s.bias >= 0 ? to_v(ps.view(static_cast<std::size_t>(s.bias))) : V();
      l.pb = V(l.b.size(), 0.0);
      l.beta = s.beta >= 0 ? to_v(ps.view(static_cast<std::size_t>(s.beta))) : V(l.b.size(), 1.0);
      layers.push_back(l);
    }
    if (net.w_out_slot() >= 0) w_out = to_v(ps.view(static_cast<std::size_t>(net.w_out_slot())));
    h = V(static_cast<std::size_t>(cfg.hidden), 0.0);
    c = h;
  }

  // Linear part (w + p)^T x added into acc.
  static void project(const RefLayer& l, const V& x, V& acc) {
    for (std::size_t j = 0; j < acc.size(); ++j)
      for (std::size_t i = 0; i < x.size(); ++i) acc[j] += x[i] * (l.w[i][j] + l.p[i][j]);
  }
  static V bias(const RefLayer& l) {
    V r(l.b.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = l.b[j] + l.pb[j];
    return r;
  }
  static double act(Activation a, double x) {
    switch (a) {
      case Activation::kRelu: return x > 0 ? x : 0.0;
      case Activation::kTanh: return std::tanh(x);
      case Activation::kSigmoid: return sig(x);
      case Activation::kIdentity: return x;
    }
    return x;
  }

  struct Pass {
    V o, h, c;
    std::vector<V> pre, post;  // per layer p and post-activation q
  };

  Pass forward(const V& x) const {
    Pass r;
    const std::size_t n = layers.size();
    r.pre.resize(n);
    r.post.resize(n);
    V e = bias(layers[0]);
    project(layers[0], x, e);
    for (double& v : e) v = act(Activation::kRelu, v);
    r.pre[0] = x;
    r.post[0] = e;
    if (cfg.backbone == Backbone::kRnn) {
      V a = bias(layers[1]);
      project(layers[1], e, a);
      project(layers[2], h, a);
      for (double& v : a) v = act(Activation::kRelu, v);
      r.h = a;
      r.c = c;
      r.pre[1] = e;
      r.pre[2] = h;
      r.post[1] = r.post[2] = a;
    } else {
      V g[4];
      for (int k = 0; k < 4; ++k) {
        const RefLayer& ih = layers[1 + 2 * k];
        g[k] = bias(ih);
        project(ih, e, g[k]);
        project(layers[2 + 2 * k], h, g[k]);
        for (double& v : g[k]) v = act(ih.act, v);
        r.pre[1 + 2 * k] = e;
        r.pre[2 + 2 * k] = h;
        r.post[1 + 2 * k] = r.post[2 + 2 * k] = g[k];
      }
      r.c = V(h.size());
      r.h = V(h.size());
      for (std::size_t j = 0; j < h.size(); ++j) {
        r.c[j] = g[1][j] * c[j] + g[0][j] * g[2][j];
        r.h[j] = g[3][j] * std::tanh(r.c[j]);
      }
    }
    r.o = bias(layers[n - 1]);
    project(layers[n - 1], r.h, r.o);
    r.pre[n - 1] = r.h;
    r.post[n - 1] = r.o;
    return r;
  }

  // Forward plus the Hebbian update; returns (o, eta).
  std::pair<V, double> step_hebbian(const V& x) {
    const Pass r = forward(x);
    double sq = 0.0;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      double pp = 0, qq = 0;
      for (double v : r.pre[k]) pp += v * v;
      for (double v : r.post[k]) qq += v * v;
      sq += pp * qq;
    }
    const double norm = std::sqrt(sq);
    const double clip = norm == 0 ? 1.0 : std::min(1.0, cfg.neuromod.max_norm / norm);
    const double eta = cfg.neuromod.eta0 * sig(r.o[0]) * clip;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      RefLayer& l = layers[k];
      for (std::size_t i = 0; i < l.p.size(); ++i)
        for (std::size_t j = 0; j < l.p[i].size(); ++j)
          l.p[i][j] = (1 - eta) * l.p[i][j] + eta * l.alpha[i][j] * r.pre[k][i] * r.post[k][j];
    }
    h = r.h;
    c = r.c;
    return {r.o, eta};
  }

  V step_frozen(const V& x) {
    const Pass r = forward(x);
    h = r.h;
    c = r.c;
    return r.o;
  }

  double internal_loss(const V& o) const {
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += (w_out[i] * o[i]) * (w_out[i] * o[i]);
    return s / static_cast<double>(o.size());
  }
};

V random_input(Rng& rng, Index n) {
  V x(static_cast<std::size_t>(n));
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

RowVec to_row(const V& v) { return Eigen::Map<const RowVec>(v.data(), static_cast<Index>(v.size())); }

double max_diff(const RowVec& a, const V& b) { return max_abs_diff(a, to_row(b)); }

}  // namespace

TEST_CASE("output layout and fan-out initialization") {
  NetworkConfig c = small_config(Backbone::kRnn, PlasticityRule::kHebbian, 4);
  c.aux_dim = 4;
  CHECK(c.output_dim() == 6);
  const PlasticNetwork net = build_network(c);
  CHECK(net.layers().back().out == 6);
  CHECK(net.layers().front().out == c.hidden);

  for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) {
    NetworkConfig c8 = small_config(b, PlasticityRule::kGradient, 8);
    c8.alpha_init = AlphaInit::kRandom;
    const PlasticNetwork n8 = build_network(c8);
    for (const LayerSpec& l : n8.layers()) {
      const double bound = 1.0 / static_cast<double>(l.out);
      CHECK(n8.params().view(static_cast<std::size_t>(l.weight)).cwiseAbs().maxCoeff() <= bound);
      if (l.bias >= 0) CHECK(n8.params().view(static_cast<std::size_t>(l.bias)).cwiseAbs().maxCoeff() <= bound);
      if (l.out == 8) CHECK(bound == 0.125);
      CHECK(n8.params().view(static_cast<std::size_t>(l.alpha)).cwiseAbs().maxCoeff() <= 1.0);
    }
    CHECK(n8.params().view(static_cast<std::size_t>(n8.w_out_slot())).isOnes(0.0));
  }
}

TEST_CASE("config validation rejects bad dimensions") {
  NetworkConfig c;
  c.hidden = 0;
  CHECK_THROWS_AS(build_network(c), std::invalid_argument);
  c = NetworkConfig{};
  c.pred_dim = -1;
  CHECK_THROWS_AS(build_network(c), std::invalid_argument);
  c = NetworkConfig{};
  c.aux_dim = -1;
  CHECK_THROWS_AS(build_network(c), std::invalid_argument);
}

TEST_CASE("alpha init modes") {
  for (AlphaInit a : {AlphaInit::kUniform, AlphaInit::kNegUniform, AlphaInit::kRandom}) {
    NetworkConfig c = small_config(Backbone::kRnn, PlasticityRule::kGradient);
    c.alpha_init = a;
    const PlasticNetwork net = build_network(c);
    const auto al = net.params().view(static_cast<std::size_t>(net.layers()[1].alpha));
    if (a == AlphaInit::kUniform) CHECK(al.isOnes(0.0));
    if (a == AlphaInit::kNegUniform) CHECK((al.array() == -1.0).all());
    if (a == AlphaInit::kRandom) CHECK(al.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(parse_alpha_init(to_string(a)) == a);
  }
  NetworkConfig c = small_config(Backbone::kRnn, PlasticityRule::kHebbian);
  c.alpha_init = AlphaInit::kNone;
  const PlasticNetwork net = build_network(c);
  for (const LayerSpec& l : net.layers()) CHECK(l.alpha == -1);
}

TEST_CASE("hebbian networks have no beta and no plastic bias") {
  const PlasticNetwork net = build_network(small_config(Backbone::kLstm, PlasticityRule::kHebbian));
  for (const LayerSpec& l : net.layers()) CHECK(l.beta == -1);
  TrialState s(net);
  Rng rng(1);
  for (int t = 0; t < 3; ++t) s.step(to_row(random_input(rng, 3)));
  for (const PlasticLayer& l : s.layers()) CHECK_FALSE(l.b_plastic.valid());
}

TEST_CASE("parameter counts") {
  const auto count = [](PlasticityRule r, Index hidden) {
    NetworkConfig c;
    c.rule = r;
    c.hidden = hidden;
    return param_count(build_network(c));
  };
  const Index heb256 = count(PlasticityRule::kHebbian, 256);
  const Index grad256 = count(PlasticityRule::kGradient, 256);
  const Index none384 = count(PlasticityRule::kNone, 384);
  CHECK(std::abs(static_cast<double>(heb256 - none384)) <= 0.15 * static_cast<double>(none384));
  CHECK(std::abs(static_cast<double>(grad256 - none384)) <= 0.15 * static_cast<double>(none384));

  for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) {
    NetworkConfig c = small_config(b, PlasticityRule::kNone, 7);
    const PlasticNetwork none = build_network(c);
    c.rule = PlasticityRule::kHebbian;
    const PlasticNetwork heb = build_network(c);
    c.rule = PlasticityRule::kGradient;
    const PlasticNetwork grad = build_network(c);
    Index weights = 0, bias_widths = 0;
    for (const LayerSpec& l : none.layers()) {
      weights += l.in * l.out;
      if (l.bias >= 0) bias_widths += l.out;
    }
    // One alpha per weight, plus the loss head.
    CHECK(param_count(heb) == param_count(none) + weights + c.output_dim());
    CHECK(param_count(grad) == param_count(heb) + bias_widths);
  }
}

TEST_CASE("parameter order is weight, bias, alpha, beta per layer with the head last") {
  const PlasticNetwork net = build_network(small_config(Backbone::kRnn, PlasticityRule::kGradient));
  std::vector<std::string> names;
  for (const auto& e : net.params().entries()) names.push_back(e.name);
  const std::vector<std::string> expected = {
      "encoder.weight", "encoder.bias", "encoder.alpha", "encoder.beta", "rnn.ih.weight",  "rnn.ih.bias",
      "rnn.ih.alpha",   "rnn.ih.beta",  "rnn.hh.weight", "rnn.hh.alpha", "readout.weight", "readout.bias",
      "readout.alpha",  "readout.beta", "loss_head.w_out"};
  CHECK(names == expected);
}

TEST_CASE("rnn cell trivial cases") {
  NetworkConfig c = small_config(Backbone::kRnn, PlasticityRule::kNone, 2);
  PlasticNetwork net = build_architecture(c);
  auto& ps = net.params();
  const auto& L = net.layers();
  const auto view = [&](int slot) { return ps.view(static_cast<std::size_t>(slot)); };
  {
    // All weights zero: h' = relu(b).
    view(L[1].bias) = row({0.3, -0.2});
    TrialState s(net);
    s.step(row({0.5, -1, 2}));
    CHECK(s.hidden().value() == row({0.3, 0.0}));
    view(L[1].bias).setZero();
  }
  {
    // Encoder and input path pass x through; identity recurrence carries h
    // once the input is zero.
    view(L[0].weight)(0, 0) = 1.0;
    view(L[0].weight)(1, 1) = 1.0;
    view(L[1].weight).setIdentity();
    view(L[2].weight).setIdentity();
    TrialState s(net);
    s.step(row({1, -1, 0}));
    CHECK(s.hidden().value() == row({1, 0}));
    s.step(row({0, 0, 0}));
    CHECK(s.hidden().value() == row({1, 0}));
    s.step(row({0.5, 0.25, 0}));
    CHECK(s.hidden().value() == row({1.5, 0.25}));
  }
}

TEST_CASE("lstm cell trivial cases") {
  NetworkConfig c = small_config(Backbone::kLstm, PlasticityRule::kNone, 2);
  PlasticNetwork net = build_architecture(c);
  {
    TrialState s(net);
    s.step(row({0.4, -1, 2}));
    CHECK(s.cell().value().isZero(0.0));
    CHECK(s.hidden().value().isZero(0.0));
    for (int k = 0; k < 4; ++k)
      CHECK((s.last_step().post[static_cast<std::size_t>(1 + 2 * k)].value().array() == (k == 2 ? 0.0 : 0.5)).all());
  }
  // The input gate opens only when the encoder output is 1; the forget gate
  // is saturated open. A loaded cell is carried unchanged.
  auto& ps = net.params();
  const auto& L = net.layers();
  const auto view = [&](int slot) { return ps.view(static_cast<std::size_t>(slot)); };
  view(L[0].weight)(0, 0) = 1.0;
  view(L[0].weight)(1, 1) = 1.0;
  view(L[1].weight) = 1600.0 * Mat::Identity(2, 2);
  view(L[1].bias).setConstant(-800.0);
  view(L[3].bias).setConstant(800.0);
  view(L[5].bias).setConstant(0.7);
  TrialState s(net);
  s.step(row({1, 1, 0}));
  const RowVec loaded = s.cell().value();
  CHECK(max_abs_diff(loaded, RowVec::Constant(2, std::tanh(0.7))) < 1e-15);
  for (int t = 0; t < 3; ++t) {
    s.step(row({0, 0, 0}));
    CHECK(s.cell().value() == loaded);
  }
}

TEST_CASE("rule none matches a frozen scalar-loop network") {
  for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) {
    const PlasticNetwork net = build_network(small_config(b, PlasticityRule::kNone));
    TrialState s(net);
    Reference ref(net);
    Rng rng(21);
    for (int t = 0; t < 6; ++t) {
      const V x = random_input(rng, 3);
      const ModelOutput out = s.step(to_row(x));
      const V o = ref.step_frozen(x);
      CHECK(max_diff(out.o.value(), o) < 1e-14);
      CHECK(max_diff(s.hidden().value(), ref.h) < 1e-14);
      CHECK_FALSE(out.eta.valid());
      for (const PlasticLayer& l : s.layers()) CHECK_FALSE(l.w_plastic.valid());
    }
  }
}

TEST_CASE("hebbian rollout matches a scalar-loop network") {
  for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) {
    NetworkConfig c = small_config(b, PlasticityRule::kHebbian, 4);
    PlasticNetwork net = build_network(c);
    Rng prng(99);
    randomize_parameters(net, prng, 0.8);
    TrialState s(net);
    Reference ref(net);
    Rng rng(5);
    for (int t = 0; t < 8; ++t) {
      const V x = random_input(rng, 3);
      const ModelOutput out = s.step(to_row(x));
      const auto [o, eta] = ref.step_hebbian(x);
      INFO(to_string(b), " step ", t);
      CHECK(max_diff(out.o.value(), o) < 1e-12);
      CHECK(std::abs(out.eta.item() - eta) < 1e-13);
      for (std::size_t k = 0; k < ref.layers.size(); ++k) {
        Mat p(static_cast<Index>(ref.layers[k].p.size()), static_cast<Index>(ref.layers[k].p[0].size()));
        for (Index i = 0; i < p.rows(); ++i)
          for (Index j = 0; j < p.cols(); ++j) p(i, j) = ref.layers[k].p[i][j];
        CHECK(max_abs_diff(s.layers()[k].w_plastic.value(), p) < 1e-12);
      }
    }
  }
}

TEST_CASE("hebbian readout update is the literal outer product") {
  NetworkConfig c = small_config(Backbone::kRnn, PlasticityRule::kHebbian, 4);
  c.alpha_init = AlphaInit::kUniform;
  const PlasticNetwork net = build_network(c);
  TrialState s(net);
  const ModelOutput out = s.step(row({0.5, -0.3, 0.9}));
  const double eta = out.eta.item();
  const Mat expected = eta * (s.hidden().value().transpose() * out.o.value());
  CHECK(max_abs_diff(s.layers()[static_cast<std::size_t>(net.readout())].w_plastic.value(), expected) < 1e-15);
  // The split reconstructs o.
  RowVec joined(c.output_dim());
  joined << out.eta_tilde.item(), out.y.value(), out.y_aux.value();
  CHECK(joined == out.o.value());
}

TEST_CASE("gradient rule step equals eta alpha times the finite-difference gradient") {
  for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) {
    NetworkConfig c = small_config(b, PlasticityRule::kGradient, 2);
    PlasticNetwork net = build_network(c);
    Rng prng(3);
    randomize_parameters(net, prng, 0.9);
    TrialState s(net);
    Reference ref(net);
    Rng rng(12);
    for (int t = 0; t < 3; ++t) {
      const V x = random_input(rng, 3);
      const ModelOutput out = s.step(to_row(x));
      const double eta = out.eta.item();
      INFO(to_string(b), " step ", t);
      CHECK(max_diff(out.o.value(), ref.forward(x).o) < 1e-12);
      for (std::size_t k = 0; k < ref.layers.size(); ++k) {
        RefLayer& l = ref.layers[k];
        const Index rows = static_cast<Index>(l.p.size()), cols = static_cast<Index>(l.p[0].size());
        Mat w0(rows, cols);
        for (Index i = 0; i < rows; ++i)
          for (Index j = 0; j < cols; ++j) w0(i, j) = l.p[i][j];
        const Mat fd = finite_difference_oracle(
            [&](const Mat& w) {
              Reference probe = ref;
              for (Index i = 0; i < rows; ++i)
                for (Index j = 0; j < cols; ++j) probe.layers[k].p[i][j] = w(i, j);
              return probe.internal_loss(probe.forward(x).o);
            },
            w0, 1e-6);
        Mat alpha(rows, cols);
        for (Index i = 0; i < rows; ++i)
          for (Index j = 0; j < cols; ++j) alpha(i, j) = l.alpha[i][j];
        const Mat expected = (1 - eta) * w0 + eta * alpha.cwiseProduct(fd).eval();
        CHECK(relative_error(s.layers()[k].w_plastic.value(), expected) < 1e-6);
        if (!l.b.empty()) {
          const Mat fdb = finite_difference_oracle(
              [&](const Mat& v) {
                Reference probe = ref;
                for (Index j = 0; j < v.cols(); ++j) probe.layers[k].pb[static_cast<std::size_t>(j)] = v(0, j);
                return probe.internal_loss(probe.forward(x).o);
              },
              to_row(l.pb), 1e-6);
          const RowVec expected_b = (1 - eta) * to_row(l.pb) + eta * to_row(l.beta).cwiseProduct(RowVec(fdb));
          CHECK(relative_error(s.layers()[k].b_plastic.value(), expected_b) < 1e-6);
        }
      }
      // Advance the reference with the tape's plastic weights so each step
      // is checked from the same starting point.
      const Reference::Pass r = ref.forward(x);
      ref.h = r.h;
      ref.c = r.c;
      for (std::size_t k = 0; k < ref.layers.size(); ++k) {
        ref.layers[k].p = to_m(s.layers()[k].w_plastic.value());
        if (!ref.layers[k].b.empty()) ref.layers[k].pb = to_v(s.layers()[k].b_plastic.value());
      }
    }
  }
}

TEST_CASE("fixed-rate networks ignore the modulation output") {
  NetworkConfig c = small_config(Backbone::kRnn, PlasticityRule::kHebbian, 4);
  c.neuromod.modulated = false;
  c.neuromod.max_norm = 1e9;
  const PlasticNetwork net = build_network(c);
  TrialState s(net);
  Rng rng(4);
  for (int t = 0; t < 4; ++t) CHECK(s.step(to_row(random_input(rng, 3))).eta.item() == c.neuromod.eta0);
}

TEST_CASE("reset zeroes state and is idempotent") {
  for (PlasticityRule r : {PlasticityRule::kHebbian, PlasticityRule::kGradient}) {
    for (Backbone b : {Backbone::kRnn, Backbone::kLstm}) {
      const PlasticNetwork net = build_network(small_config(b, r));
      TrialState s(net);
      Rng rng(8);
      std::vector<RowVec> first;
      for (int t = 0; t < 4; ++t) first.push_back(s.step(to_row(random_input(rng, 3))).o.value());
      CHECK(s.hidden().value().norm() > 0.0);
      for (int k = 0; k < 2; ++k) {
        s.reset();
        CHECK(s.steps_taken() == 0);
        CHECK(s.hidden().value().isZero(0.0));
        if (b == Backbone::kLstm) CHECK(s.cell().value().isZero(0.0));
        for (const PlasticLayer& l : s.layers()) {
          CHECK(l.w_plastic.value().norm() == 0.0);
          if (l.b_plastic.valid()) CHECK(l.b_plastic.value().norm() == 0.0);
        }
      }
      // Same inputs after a reset give the same outputs: no hidden global state.
      Rng rng2(8);
      for (std::size_t t = 0; t < 4; ++t) CHECK(s.step(to_row(random_input(rng2, 3))).o.value() == first[t]);
    }
  }
}

TEST_CASE("input width is checked") {
  const PlasticNetwork net = build_network(small_config(Backbone::kRnn, PlasticityRule::kHebbian));
  TrialState s(net);
  CHECK_THROWS_AS(s.step(row({1, 2})), ShapeError);
}

TEST_CASE("non-finite outputs are reported with the step") {
  PlasticNetwork net = build_network(small_config(Backbone::kRnn, PlasticityRule::kHebbian));
  net.params().view(static_cast<std::size_t>(net.layers().back().bias))(0, 1) =
      std::numeric_limits<double>::infinity();
  TrialState s(net);
  try {
    s.step(row({1, 0, 0}));
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("backbone names round trip") {
  CHECK(parse_backbone(to_string(Backbone::kRnn)) == Backbone::kRnn);
  CHECK(parse_backbone(to_string(Backbone::kLstm)) == Backbone::kLstm);
  CHECK_THROWS_AS(parse_backbone("gru"), std::invalid_argument);
}
