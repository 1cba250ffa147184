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

#include "plrnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "plrnn/tasks.hpp"
#include "plrnn/training.hpp"

namespace plrnn {

double relative_error(const Eigen::Ref<const Mat>& got, const Eigen::Ref<const Mat>& reference) {
  if (got.size() == 0) return 0.0;
  const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
  return (got - reference).cwiseAbs().maxCoeff() / scale;
}

// ---------------------------------------------------------------------------
// Random graphs

Mat RandomGraph::sample_point(Rng& rng) const {
  Mat p(1, kRows * kCols + kRows + kCols + 1);
  for (Index i = 0; i < p.size(); ++i) p(0, i) = rng.uniform(-1.0, 1.0);
  return p;
}

std::vector<Tensor> RandomGraph::leaves(Tape& tape, const Mat& point) const {
  const double* d = point.data();
  Mat a = Eigen::Map<const Mat>(d, kRows, kCols);
  d += kRows * kCols;
  RowVec u = Eigen::Map<const RowVec>(d, kRows);
  d += kRows;
  RowVec v = Eigen::Map<const RowVec>(d, kCols);
  d += kCols;
  return {tape.matrix(a), tape.vector(u), tape.vector(v), tape.scalar(*d)};
}

namespace {

bool same(const Shape& a, const Shape& b) { return a == b; }

// First pool entry (scanning from a random start) satisfying pred.
template <typename Pred>
const Tensor* pick(const std::vector<Tensor>& pool, Rng& rng, Pred pred) {
  const std::size_t n = pool.size();
  const std::size_t start = rng.index(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Tensor& t = pool[(start + k) % n];
    if (pred(t)) return &t;
  }
  return nullptr;
}

}  // namespace

Tensor RandomGraph::build(const std::vector<Tensor>& inputs) const {
  Rng rng(seed);
  std::vector<Tensor> pool = inputs;
  const auto is_vec = [](const Tensor& t) { return t.shape().rank == 1; };
  const auto is_mat = [](const Tensor& t) { return t.shape().rank == 2; };
  const auto is_scalar = [](const Tensor& t) { return t.shape().rank == 0; };
  int made = 0;
  int attempts = 0;
  while (made < ops && attempts < 50 * ops) {
    ++attempts;
    const Tensor& x = pool[rng.index(pool.size())];
    Tensor y;
    switch (rng.index(19)) {
      case 0: y = tanh(x); break;
      case 1: y = sigmoid(x); break;
      case 2: y = exp(tanh(x)); break;
      case 3: y = log(affine(square(x), 1.0, 1.0)); break;
      case 4: y = sqrt(affine(square(x), 1.0, 0.5)); break;
      case 5: y = reciprocal(affine(square(x), 1.0, 1.0)); break;
      case 6: y = square(tanh(x)); break;
      case 7: y = affine(x, rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0)); break;
      case 8: {
        const Tensor* z = pick(pool, rng, [&](const Tensor& t) { return same(t.shape(), x.shape()); });
        switch (rng.index(3)) {
          case 0: y = x + *z; break;
          case 1: y = x - *z; break;
          default: y = cwise_product(x, *z); break;
        }
        break;
      }
      case 9: {
        const Tensor* z = pick(pool, rng, [&](const Tensor& t) {
          const Shape& a = x.shape();
          const Shape& b = t.shape();
          if (a.rank == 0 || b.rank == 0) return false;
          const Index inner_a = a.rank == 2 ? a.dims[1] : a.dims[0];
          return inner_a == b.dims[0];
        });
        if (!z) continue;
        y = matmul(x, *z);
        break;
      }
      case 10: {
        if (!is_vec(x)) continue;
        const Tensor* z = pick(pool, rng, is_vec);
        y = outer(x, *z);
        break;
      }
      case 11:
        if (!is_mat(x)) continue;
        y = transpose(x);
        break;
      case 12:
        switch (rng.index(3)) {
          case 0: y = sum(x); break;
          case 1: y = mean(x); break;
          default: y = l2_norm(affine(x, 1.0, 0.25)); break;
        }
        break;
      case 13: {
        const Tensor* s = pick(pool, rng, is_scalar);
        y = scalar_mul(*s, x);
        break;
      }
      case 14: {
        if (x.shape().rank == 0) continue;
        const Index rows = x.shape().dims[0];
        switch (rng.index(3)) {
          case 0: {
            const Tensor* z = pick(pool, rng, [&](const Tensor& t) {
              return t.shape().rank == x.shape().rank && (x.shape().rank == 1 || t.shape().dims[1] == x.shape().dims[1]);
            });
            const Tensor parts[] = {x, *z};
            y = concat(parts);
            break;
          }
          case 1: {
            const Index len = 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(rows)));
            y = slice(x, static_cast<Index>(rng.index(static_cast<std::uint64_t>(rows - len + 1))), len);
            break;
          }
          default:
            y = pad(x, static_cast<Index>(rng.index(3)), rows + 2);
            break;
        }
        break;
      }
      case 15: {
        if (!is_scalar(x)) continue;
        y = broadcast(x, rng.index(2) ? Shape::vector(kRows) : Shape::matrix(kRows, kCols));
        break;
      }
      case 16: {
        if (!is_mat(x)) continue;
        const Index r = x.shape().dims[0];
        const Index c = x.shape().dims[1];
        const Tensor* alpha = pick(pool, rng, [&](const Tensor& t) { return same(t.shape(), x.shape()); });
        const Tensor* a = pick(pool, rng, [&](const Tensor& t) { return same(t.shape(), Shape::vector(r)); });
        const Tensor* b = pick(pool, rng, [&](const Tensor& t) { return same(t.shape(), Shape::vector(c)); });
        const Tensor* eta = pick(pool, rng, is_scalar);
        if (!a || !b) continue;
        y = plastic_update(x, *alpha, *a, *b, sigmoid(*eta));
        break;
      }
      case 17:
        if (!allow_kinks) continue;
        y = rng.index(2) ? relu(x) : min_const(x, rng.uniform(-0.5, 0.5));
        break;
      case 18: {
        if (!allow_kinks) continue;
        y = cwise_product(indicator(x, rng.uniform(-0.5, 0.5), rng.index(2) != 0), tanh(x));
        break;
      }
    }
    pool.push_back(y);
    ++made;
  }
  // Combine the most recent results (and one input) into a scalar.
  const std::size_t n = pool.size();
  Tensor out = mean(square(pool[rng.index(inputs.size())]));
  for (std::size_t k = n - std::min<std::size_t>(3, n); k < n; ++k) {
    const Tensor& t = pool[k];
    out = out + sum(cwise_product(t, tanh(t)));
  }
  return out;
}

Scalar RandomGraph::evaluate(const Mat& point) const {
  Tape tape;
  return build(leaves(tape, point)).item();
}

namespace {

Mat flatten(const std::vector<Mat>& parts, Index total) {
  Mat out(1, total);
  Index k = 0;
  for (const Mat& m : parts) {
    Eigen::Map<Mat>(out.data() + k, m.rows(), m.cols()) = m;
    k += m.size();
  }
  return out;
}

}  // namespace

OracleReport first_order_oracle(int graphs, std::uint64_t seed, double tolerance) {
  OracleReport rep{"autodiff first order", 0, 0.0, tolerance, -1};
  for (int g = 0; g < graphs; ++g) {
    RandomGraph graph;
    graph.seed = seed * 1000003ULL + static_cast<std::uint64_t>(g);
    graph.ops = 6 + g % 12;
    Rng rng(graph.seed ^ 0x5bd1e995ULL);
    const Mat point = graph.sample_point(rng);
    Tape tape;
    const auto in = graph.leaves(tape, point);
    const Tensor y = graph.build(in);
    const auto grads = grad(y, in);
    std::vector<Mat> values;
    for (const Tensor& t : grads) values.push_back(t.value());
    const Mat ad = flatten(values, point.size());
    const Mat fd = finite_difference_oracle([&](const Mat& p) { return graph.evaluate(p); }, point, 1e-5);
    const double err = relative_error(ad, fd);
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_case = g;
    }
    ++rep.cases;
  }
  return rep;
}

OracleReport second_order_oracle(int graphs, std::uint64_t seed, double tolerance) {
  OracleReport rep{"autodiff second order", 0, 0.0, tolerance, -1};
  for (int g = 0; g < graphs; ++g) {
    RandomGraph graph;
    graph.seed = seed * 1000003ULL + static_cast<std::uint64_t>(g) + 7919ULL;
    graph.ops = 6 + g % 10;
    Rng rng(graph.seed ^ 0x9e3779b9ULL);
    const Mat point = graph.sample_point(rng);
    Mat direction(1, point.size());
    for (Index i = 0; i < direction.size(); ++i) direction(0, i) = rng.uniform(-1.0, 1.0);

    // Hessian-vector product through grad-of-grad.
    Tape tape;
    const auto in = graph.leaves(tape, point);
    const Tensor y = graph.build(in);
    const auto first = grad(y, in);
    Tensor dot;
    Index k = 0;
    for (const Tensor& gk : first) {
      const Mat dir = Eigen::Map<const Mat>(direction.data() + k, gk.value().rows(), gk.value().cols());
      k += gk.value().size();
      const Tensor term = sum(cwise_product(gk, tape.leaf(dir, gk.shape())));
      dot = dot.valid() ? dot + term : term;
    }
    const Mat hv = flatten(gradient_values(dot, in), point.size());

    // Central differences of the plain gradient along each coordinate.
    const auto directional = [&](const Mat& p) {
      Tape t2;
      const auto in2 = graph.leaves(t2, p);
      const Mat gv = flatten(gradient_values(graph.build(in2), in2), p.size());
      return (gv.array() * direction.array()).sum();
    };
    const Mat fd = finite_difference_oracle(directional, point, 1e-5);
    const double err = relative_error(hv, fd);
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_case = g;
    }
    ++rep.cases;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Network-level oracles

void randomize_parameters(PlasticNetwork& net, Rng& rng, double scale) {
  ParameterSet& ps = net.params();
  for (Index i = 0; i < ps.scalar_count(); ++i) ps.flat()[i] = rng.uniform(-scale, scale);
  if (net.w_out_slot() >= 0) {
    auto w = ps.view(static_cast<std::size_t>(net.w_out_slot()));
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(0.5, 1.5);
  }
}

OracleReport readout_hebbian_oracle(int states, std::uint64_t seed, double tolerance) {
  OracleReport rep{"gradient-rule readout is Hebbian", 0, 0.0, tolerance, -1};
  for (int s = 0; s < states; ++s) {
    Rng rng(seed * 7919ULL + static_cast<std::uint64_t>(s));
    NetworkConfig cfg;
    cfg.backbone = s % 2 ? Backbone::kLstm : Backbone::kRnn;
    cfg.rule = PlasticityRule::kGradient;
    cfg.hidden = 3 + static_cast<Index>(rng.index(6));
    cfg.input_dim = 1 + static_cast<Index>(rng.index(4));
    cfg.pred_dim = 1 + static_cast<Index>(rng.index(3));
    cfg.aux_dim = static_cast<Index>(rng.index(5));
    cfg.seed = rng.index(1u << 30);
    PlasticNetwork net = build_network(cfg);
    randomize_parameters(net, rng, 0.8);
    TrialState st(net);
    const int steps = 1 + static_cast<int>(rng.index(4));
    ModelOutput out;
    for (int t = 0; t < steps; ++t) {
      RowVec x(cfg.input_dim);
      for (Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1.0, 1.0);
      out = st.step(x);
    }
    const StepRecord& rec = st.last_step();
    const int ro = net.readout();
    const PlasticLayer& before = rec.layers_before[static_cast<std::size_t>(ro)];
    const Tensor targets[] = {before.w_plastic};
    const Mat dw = gradient_values(rec.internal_loss, targets)[0];

    // Closed form from values alone.
    const RowVec p = rec.pre[static_cast<std::size_t>(ro)].value();
    const RowVec o = out.o.value();
    const auto w_out = net.params().view(static_cast<std::size_t>(net.w_out_slot()));
    const RowVec v = 2.0 * w_out.array().square() / static_cast<double>(o.size());
    const Mat expected = p.transpose() * (o.array() * v.array()).matrix();
    const double err = (dw - expected).cwiseAbs().maxCoeff();
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_case = s;
    }
    ++rep.cases;
  }
  return rep;
}

OracleReport meta_gradient_oracle(PlasticityRule rule, Backbone backbone, int params, std::uint64_t seed,
                                  double epsilon, double tolerance) {
  OracleReport rep{std::string("meta-gradient ") + to_string(rule) + " " + to_string(backbone), 0, 0.0, tolerance,
                   -1};
  TaskConfig task;
  task.kind = TaskKind::kCopying;
  task.copying.n = 1;
  task.copying.m = 1;  // T = 3
  NetworkConfig cfg;
  cfg.backbone = backbone;
  cfg.rule = rule;
  cfg.hidden = 4;
  cfg.input_dim = task.input_dim();
  cfg.pred_dim = task.pred_dim();
  cfg.seed = seed;
  PlasticNetwork net = build_network(cfg);
  Rng rng(seed ^ 0xC0FFEEULL);
  randomize_parameters(net, rng, 0.8);
  const TrialBatch batch = generate(task, 2, seed);

  const BatchGradient bg = meta_gradient(net, batch, false, 1);
  Vec& flat = net.params().flat();
  const Index n = flat.size();
  for (int k = 0; k < params; ++k) {
    const Index i = static_cast<Index>(rng.index(static_cast<std::uint64_t>(n)));
    const double keep = flat[i];
    flat[i] = keep + epsilon;
    const double up = meta_gradient(net, batch, false, 1).loss;
    flat[i] = keep - epsilon;
    const double down = meta_gradient(net, batch, false, 1).loss;
    flat[i] = keep;
    const double fd = (up - down) / (2.0 * epsilon);
    const double ad = bg.grad[i];
    const double err = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-6});
    if (err > rep.max_error) {
      rep.max_error = err;
      rep.worst_case = static_cast<int>(i);
    }
    ++rep.cases;
  }
  return rep;
}

}  // namespace plrnn
