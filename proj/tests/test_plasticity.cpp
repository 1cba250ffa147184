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

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "doctest.h"
#include "plrnn/gradcheck.hpp"
#include "plrnn/plasticity.hpp"
#include "plrnn/random.hpp"
#include "test_util.hpp"

using namespace plrnn;
using plrnn::testing::mat;
using plrnn::testing::max_abs_diff;
using plrnn::testing::row;

namespace {

PlasticLayer make_layer(Tape& t, const Mat& w_static, const Mat& w_plastic, const RowVec& bias, Activation act) {
  PlasticLayer l;
  l.w_static = t.matrix(w_static);
  l.w_plastic = t.matrix(w_plastic);
  l.alpha = t.matrix(Mat::Ones(w_static.rows(), w_static.cols()));
  l.b_static = t.vector(bias);
  l.b_plastic = t.vector(RowVec::Zero(bias.size()));
  l.activation = act;
  return l;
}

Mat random_mat(Rng& rng, Index r, Index c, double scale = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST_CASE("plastic linear forward") {
  Tape t;
  {
    const PlasticLayer l = make_layer(t, Mat::Identity(2, 2), Mat::Zero(2, 2), row({0, 0}), Activation::kIdentity);
    CHECK(plastic_linear_forward(l, t.vector(row({1, 2}))).q.value() == row({1, 2}));
  }
  {
    const PlasticLayer l = make_layer(t, Mat::Zero(2, 1), mat({{0.5}, {0}}), row({0}), Activation::kRelu);
    CHECK(plastic_linear_forward(l, t.vector(row({1, 0}))).q.value() == row({0.5}));
  }
  {
    const PlasticLayer l = make_layer(t, mat({{1}, {1}}), mat({{-2}, {0}}), row({0.5}), Activation::kRelu);
    const LinearOutput out = plastic_linear_forward(l, t.vector(row({1, 1})));
    CHECK(out.preact.value() == row({0.5}));
    CHECK(out.q.value() == row({0.5}));
  }
  {
    // Negative preactivation is clipped by relu.
    const PlasticLayer l = make_layer(t, mat({{1}, {1}}), mat({{-3}, {0}}), row({0.5}), Activation::kRelu);
    CHECK(plastic_linear_forward(l, t.vector(row({1, 1}))).q.value() == row({0}));
  }
}

TEST_CASE("hebbian delta is the outer product") {
  Tape t;
  CHECK(hebbian_delta(t.vector(row({1, 0})), t.vector(row({0.5}))).value() == mat({{0.5}, {0}}));
  CHECK(hebbian_delta(t.vector(row({0, 0})), t.vector(row({3, 1}))).value().isZero(0.0));
  CHECK(hebbian_delta(t.vector(row({1, 2})), t.vector(row({3, -1}))).value() == mat({{3, -1}, {6, -2}}));
}

TEST_CASE("internal loss") {
  Tape t;
  const auto loss = [&](const RowVec& o, const RowVec& w) {
    return internal_loss(t.vector(o), InternalLossHead{t.vector(w)}).item();
  };
  CHECK(loss(row({1, 1, 1}), row({1, 1, 1})) == 1.0);
  CHECK(loss(row({0, 0, 0}), row({2, 1, 1})) == 0.0);
  CHECK(loss(row({1, 2}), row({1, 3})) == 18.5);
  CHECK_THROWS_AS(loss(row({1, 2}), row({1, 2, 3})), ShapeError);
}

TEST_CASE("internal learning rate unit values") {
  const NeuromodConfig cfg;
  CHECK(cfg.eta0 == 0.2);
  CHECK(cfg.max_norm == 1.0);
  CHECK(compute_eta(0.0, 0.5, cfg) == 0.1);
  CHECK(compute_eta(0.0, 4.0, cfg) == 0.025);
  CHECK(compute_eta(0.0, 0.0, cfg) == 0.1);
  CHECK(compute_eta(50.0, 1.0, cfg) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(compute_eta(-800.0, 1.0, cfg) == 0.0);
  CHECK(compute_eta(800.0, 0.5, cfg) == 0.2);

  Tape t;
  CHECK(compute_eta(t.scalar(0.0), t.scalar(0.5), cfg).item() == 0.1);
  CHECK(compute_eta(t.scalar(0.0), t.scalar(4.0), cfg).item() == 0.025);
  CHECK(compute_eta(t.scalar(0.0), t.scalar(0.0), cfg).item() == 0.1);

  NeuromodConfig fixed = cfg;
  fixed.modulated = false;
  CHECK(compute_eta(-3.0, 0.5, fixed) == 0.2);
  CHECK(compute_eta(t.scalar(5.0), t.scalar(2.0), fixed).item() == 0.1);
}

TEST_CASE("internal learning rate bounds under fuzzing") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    NeuromodConfig cfg;
    cfg.eta0 = rng.uniform(0.0, 1.0);
    cfg.max_norm = std::exp(rng.uniform(-3.0, 5.0));
    const double eta_tilde = rng.uniform(-30.0, 30.0);
    const double norm = std::exp(rng.uniform(-6.0, 8.0));
    const double eta = compute_eta(eta_tilde, norm, cfg);
    CHECK_MESSAGE(eta <= cfg.eta0, "eta ", eta, " eta0 ", cfg.eta0);
    CHECK(eta >= 0.0);
    if (norm >= cfg.max_norm) CHECK(eta * norm <= cfg.eta0 * cfg.max_norm * (1 + 1e-15));

    Tape t;
    const double recorded = compute_eta(t.scalar(eta_tilde), t.scalar(norm), cfg).item();
    CHECK(std::abs(recorded - eta) <= 1e-15 * std::max(1.0, eta));
  }
}

TEST_CASE("neuromodulation config validation") {
  NeuromodConfig cfg;
  cfg.eta0 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.eta0 = 0.2;
  cfg.max_norm = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.max_norm = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("delta norm") {
  Tape t;
  {
    const Tensor d[] = {t.matrix(mat({{3}, {4}}))};
    CHECK(delta_norm(d).item() == 5.0);
  }
  {
    const Tensor d[] = {t.zeros(Shape::matrix(2, 2)), t.zeros(Shape::vector(3))};
    CHECK(delta_norm(d).item() == 0.0);
  }
  {
    const Tensor d[] = {t.matrix(mat({{1}})), t.matrix(mat({{2}, {2}}))};
    CHECK(delta_norm(d).item() == 3.0);
  }
}

TEST_CASE("factored norm equals the materialized norm with matching gradients") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    Tape t;
    const Tensor p1 = t.vector(random_mat(rng, 1, 3)), q1 = t.vector(random_mat(rng, 1, 4));
    const Tensor p2 = t.vector(random_mat(rng, 1, 2)), q2 = t.vector(random_mat(rng, 1, 5));
    const Tensor v = t.vector(random_mat(rng, 1, 4));
    const std::pair<Tensor, Tensor> r1[] = {{p1, q1}, {p2, q2}};
    const Tensor vs[] = {v};
    const Tensor factored = factored_delta_norm(r1, vs);
    const Tensor all[] = {outer(p1, q1), outer(p2, q2), v};
    const Tensor plain = delta_norm(all);
    CHECK(factored.item() == doctest::Approx(plain.item()).epsilon(1e-14));
    const Tensor leaves[] = {p1, q1, p2, q2, v};
    const auto gf = gradient_values(factored, leaves);
    const auto gp = gradient_values(plain, leaves);
    for (int k = 0; k < 5; ++k) CHECK(max_abs_diff(gf[k], gp[k]) < 1e-13);
  }
}

TEST_CASE("gradient deltas") {
  Rng rng(8);
  // Two-layer net, hidden 3: x -> relu layer -> identity readout -> internal loss.
  for (int trial = 0; trial < 10; ++trial) {
    const Mat w1 = random_mat(rng, 2, 3), w2 = random_mat(rng, 3, 4);
    const Mat pw1 = random_mat(rng, 2, 3, 0.3), pw2 = random_mat(rng, 3, 4, 0.3);
    const RowVec b1 = random_mat(rng, 1, 3), b2 = random_mat(rng, 1, 4);
    const RowVec x = random_mat(rng, 1, 2), head = random_mat(rng, 1, 4);
    const auto loss_at = [&](Tape& t, const Mat& a, const Mat& b, std::vector<PlasticLayer>* layers) {
      PlasticLayer l1 = make_layer(t, w1, a, b1, Activation::kTanh);
      PlasticLayer l2 = make_layer(t, w2, b, b2, Activation::kIdentity);
      const Tensor h = plastic_linear_forward(l1, t.vector(x)).q;
      const Tensor o = plastic_linear_forward(l2, h).q;
      if (layers) *layers = {l1, l2};
      return internal_loss(o, InternalLossHead{t.vector(head)});
    };
    Tape t;
    std::vector<PlasticLayer> layers;
    const Tensor loss = loss_at(t, pw1, pw2, &layers);
    const auto d = gradient_deltas(loss, layers);
    REQUIRE(d.size() == 2);
    CHECK(d[0].bias.valid());
    const Mat fd1 = finite_difference_oracle(
        [&](const Mat& a) {
          Tape t2;
          return loss_at(t2, a, pw2, nullptr).item();
        },
        pw1, 1e-6);
    const Mat fd2 = finite_difference_oracle(
        [&](const Mat& b) {
          Tape t2;
          return loss_at(t2, pw1, b, nullptr).item();
        },
        pw2, 1e-6);
    CHECK(relative_error(d[0].weight.value(), fd1) < 1e-6);
    CHECK(relative_error(d[1].weight.value(), fd2) < 1e-6);

    // Readout delta equals the closed Hebbian form h (o . v)^T.
    const Tensor h = plastic_linear_forward(layers[0], t.vector(x)).q;
    const RowVec o = plastic_linear_forward(layers[1], h).q.value();
    const RowVec v = 2.0 * head.array().square() / 4.0;
    const Mat expected = h.value().transpose() * (o.array() * v.array()).matrix();
    CHECK(max_abs_diff(d[1].weight.value(), expected) < 1e-12);
  }
}

TEST_CASE("gradient deltas vanish for layers the loss ignores") {
  Tape t;
  const PlasticLayer used = make_layer(t, mat({{1, 0}, {0, 1}}), Mat::Zero(2, 2), row({0, 0}), Activation::kIdentity);
  const PlasticLayer unused = make_layer(t, mat({{1}, {2}}), Mat::Zero(2, 1), row({0}), Activation::kRelu);
  const Tensor o = plastic_linear_forward(used, t.vector(row({1, 2}))).q;
  const Tensor loss = internal_loss(o, InternalLossHead{t.vector(row({1, 1}))});
  const PlasticLayer layers[] = {used, unused};
  const auto d = gradient_deltas(loss, layers);
  CHECK_FALSE(d[0].weight.value().isZero(0.0));
  CHECK(d[1].weight.value().isZero(0.0));
  CHECK(d[1].bias.value().isZero(0.0));
}

TEST_CASE("apply update") {
  Tape t;
  PlasticLayer l = make_layer(t, Mat::Zero(2, 1), Mat::Zero(2, 1), row({0}), Activation::kIdentity);
  const Tensor dw = t.matrix(mat({{0.5}, {0}}));
  const Tensor db = t.vector(row({1}));

  const PlasticLayer same = apply_update(l, dw, db, t.scalar(0.0), PlasticityRule::kHebbian);
  CHECK(same.w_plastic.value() == l.w_plastic.value());

  CHECK(apply_update(l, dw, db, t.scalar(0.1), PlasticityRule::kHebbian).w_plastic.value() == mat({{0.05}, {0}}));

  l.w_plastic = t.matrix(mat({{3}, {-7}}));
  const PlasticLayer full = apply_update(l, dw, db, t.scalar(1.0), PlasticityRule::kHebbian);
  CHECK(full.w_plastic.value() == dw.value());

  // Hebbian leaves the plastic bias alone; the gradient rule moves it with beta.
  CHECK(full.b_plastic.id() == l.b_plastic.id());
  l.beta = t.vector(row({2}));
  const PlasticLayer grad_step = apply_update(l, dw, db, t.scalar(0.25), PlasticityRule::kGradient);
  CHECK(grad_step.b_plastic.value() == row({0.5}));

  CHECK_THROWS_AS(apply_update(l, t.matrix(mat({{1, 2}})), db, t.scalar(0.1), PlasticityRule::kHebbian), ShapeError);
}

TEST_CASE("plastic weights decay geometrically without input") {
  Tape t;
  PlasticLayer l = make_layer(t, Mat::Zero(2, 2), mat({{1, -2}, {0.5, 4}}), row({0, 0}), Activation::kIdentity);
  const Mat w0 = l.w_plastic.value();
  const Tensor zero = t.zeros(Shape::matrix(2, 2));
  const double eta = 0.15;
  for (int k = 1; k <= 25; ++k) {
    l = apply_update(l, zero, Tensor(), t.scalar(eta), PlasticityRule::kHebbian);
    CHECK(max_abs_diff(l.w_plastic.value(), std::pow(1 - eta, k) * w0) < 1e-14);
  }
}

TEST_CASE("rule names round trip") {
  for (PlasticityRule r : {PlasticityRule::kNone, PlasticityRule::kHebbian, PlasticityRule::kGradient})
    CHECK(parse_rule(to_string(r)) == r);
  CHECK_THROWS_AS(parse_rule("oja"), std::invalid_argument);
}
