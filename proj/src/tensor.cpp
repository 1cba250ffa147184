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

#include "plrnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

namespace plrnn {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < rank; ++i) os << (i ? ", " : "") << dims[i];
  os << ']';
  return os.str();
}

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kAdd: return "add";
    case Op::kSub: return "subtract";
    case Op::kMul: return "elementwise-multiply";
    case Op::kAffine: return "affine";
    case Op::kScalarMul: return "scalar-multiply";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kPad: return "pad";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kBroadcast: return "broadcast";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kReciprocal: return "reciprocal";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kIndicator: return "indicator";
    case Op::kOuter: return "outer-product";
    case Op::kL2Norm: return "l2-norm";
    case Op::kMinConst: return "min-with-constant";
    case Op::kPlasticUpdate: return "plastic-update";
  }
  return "unknown";
}

const Mat& Tensor::value() const { return tape_->node(id_).value; }
const Shape& Tensor::shape() const { return tape_->node(id_).shape; }

Scalar Tensor::item() const {
  if (shape().rank != 0) throw ShapeError("item: tensor of shape " + shape().str() + " is not a scalar");
  return value()(0, 0);
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::leaf(Mat value, const Shape& shape) {
  if (value.rows() != shape.rows() || value.cols() != shape.cols())
    throw ShapeError("leaf: storage does not match shape " + shape.str());
  Node n;
  n.op = Op::kLeaf;
  n.shape = shape;
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor Tape::scalar(Scalar v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return leaf(std::move(m), Shape::scalar());
}

Tensor Tape::vector(const Eigen::Ref<const RowVec>& v) { return leaf(Mat(v), Shape::vector(v.size())); }

Tensor Tape::matrix(const Eigen::Ref<const Mat>& m) { return leaf(Mat(m), Shape::matrix(m.rows(), m.cols())); }

Tensor Tape::zeros(const Shape& shape) { return leaf(Mat::Zero(shape.rows(), shape.cols()), shape); }

Tensor Tape::ones(const Shape& shape) { return leaf(Mat::Ones(shape.rows(), shape.cols()), shape); }

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<NodeId>(nodes_.size() - 1));
}

bool Tape::replay_matches() const {
  for (const Node& n : nodes_) {
    if (n.op == Op::kLeaf) continue;
    const Mat v = evaluate_node(*this, n);
    if (v.rows() != n.value.rows() || v.cols() != n.value.cols()) return false;
    if (std::memcmp(v.data(), n.value.data(), sizeof(Scalar) * static_cast<std::size_t>(v.size())) != 0)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Forward evaluation

namespace {

const Mat& pv(const Tape& t, const Tape::Node& n, int k) { return t.node(n.parents[static_cast<std::size_t>(k)]).value; }
const Shape& ps(const Tape& t, const Tape::Node& n, int k) {
  return t.node(n.parents[static_cast<std::size_t>(k)]).shape;
}

Scalar sigmoid_scalar(Scalar x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Mat evaluate_node(const Tape& tape, const Tape::Node& n) {
  switch (n.op) {
    case Op::kLeaf:
      return n.value;
    case Op::kMatMul: {
      const Mat& a = pv(tape, n, 0);
      const Mat& b = pv(tape, n, 1);
      const int ra = ps(tape, n, 0).rank, rb = ps(tape, n, 1).rank;
      if (ra == 2 && rb == 2) return a * b;
      if (ra == 1 && rb == 2) return a * b;                  // 1 x k  *  k x n
      if (ra == 2 && rb == 1) return (a * b.transpose()).transpose();
      Mat r(1, 1);
      r(0, 0) = a.row(0).dot(b.row(0));
      return r;
    }
    case Op::kTranspose: {
      const Mat& a = pv(tape, n, 0);
      if (ps(tape, n, 0).rank < 2) return a;
      return a.transpose();
    }
    case Op::kAdd: return pv(tape, n, 0) + pv(tape, n, 1);
    case Op::kSub: return pv(tape, n, 0) - pv(tape, n, 1);
    case Op::kMul: return pv(tape, n, 0).cwiseProduct(pv(tape, n, 1));
    case Op::kAffine: return (n.c0 * pv(tape, n, 0).array() + n.c1).matrix();
    case Op::kScalarMul: return pv(tape, n, 0)(0, 0) * pv(tape, n, 1);
    case Op::kConcat: {
      Mat r(n.shape.rows(), n.shape.cols());
      Index off = 0;
      const bool rows = n.shape.rank == 2;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const Mat& p = tape.node(n.parents[k]).value;
        if (rows) {
          r.middleRows(off, p.rows()) = p;
          off += p.rows();
        } else {
          r.middleCols(off, p.cols()) = p;
          off += p.cols();
        }
      }
      return r;
    }
    case Op::kSlice: {
      const Mat& x = pv(tape, n, 0);
      if (n.shape.rank == 2) return x.middleRows(n.i0, n.shape.dims[0]);
      return x.middleCols(n.i0, n.shape.cols());
    }
    case Op::kPad: {
      const Mat& x = pv(tape, n, 0);
      Mat r = Mat::Zero(n.shape.rows(), n.shape.cols());
      if (n.shape.rank == 2)
        r.middleRows(n.i0, x.rows()) = x;
      else
        r.middleCols(n.i0, x.cols()) = x;
      return r;
    }
    case Op::kSum: {
      Mat r(1, 1);
      r(0, 0) = pv(tape, n, 0).sum();
      return r;
    }
    case Op::kMean: {
      Mat r(1, 1);
      r(0, 0) = pv(tape, n, 0).mean();
      return r;
    }
    case Op::kBroadcast: return Mat::Constant(n.shape.rows(), n.shape.cols(), pv(tape, n, 0)(0, 0));
    case Op::kSquare: return pv(tape, n, 0).array().square().matrix();
    case Op::kSqrt: return pv(tape, n, 0).array().sqrt().matrix();
    case Op::kReciprocal: return pv(tape, n, 0).array().inverse().matrix();
    case Op::kExp: return pv(tape, n, 0).array().exp().matrix();
    case Op::kLog: return pv(tape, n, 0).array().log().matrix();
    case Op::kSigmoid: return pv(tape, n, 0).unaryExpr(&sigmoid_scalar);
    case Op::kTanh: return pv(tape, n, 0).array().tanh().matrix();
    case Op::kRelu: return pv(tape, n, 0).cwiseMax(0.0);
    case Op::kIndicator: {
      const Mat& x = pv(tape, n, 0);
      if (n.i0 == 1) return (x.array() <= n.c0).cast<Scalar>().matrix();
      return (x.array() > n.c0).cast<Scalar>().matrix();
    }
    case Op::kOuter: return pv(tape, n, 0).transpose() * pv(tape, n, 1);
    case Op::kL2Norm: {
      Mat r(1, 1);
      r(0, 0) = pv(tape, n, 0).norm();
      return r;
    }
    case Op::kMinConst: return pv(tape, n, 0).cwiseMin(n.c0);
    case Op::kPlasticUpdate: {
      const Mat& w = pv(tape, n, 0);
      const Mat& alpha = pv(tape, n, 1);
      const Mat& a = pv(tape, n, 2);
      const Mat& b = pv(tape, n, 3);
      const Scalar eta = pv(tape, n, 4)(0, 0);
      Mat r(w.rows(), w.cols());
      for (Index i = 0; i < w.rows(); ++i)
        r.row(i) = (1.0 - eta) * w.row(i) + (eta * a(0, i)) * alpha.row(i).cwiseProduct(b);
      return r;
    }
  }
  throw std::logic_error("evaluate_node: unknown op");
}

// ---------------------------------------------------------------------------
// Recording

namespace {

[[noreturn]] void mismatch(Op op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + a.str() + " and " + b.str());
}

[[noreturn]] void bad_shape(Op op, const Shape& a, const char* what) {
  throw ShapeError(std::string(op_name(op)) + ": " + what + ", got " + a.str());
}

Tape& same_tape(Op op, const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(op_name(op)) + ": unbound tensor");
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op_name(op)) + ": operands on different tapes");
  return a.tape();
}

Tensor record(Tape& tape, Op op, std::vector<NodeId> parents, const Shape& shape, Scalar c0 = 0.0,
              Scalar c1 = 0.0, Index i0 = 0) {
  Tape::Node n;
  n.op = op;
  n.parents = std::move(parents);
  n.shape = shape;
  n.c0 = c0;
  n.c1 = c1;
  n.i0 = i0;
  n.value = evaluate_node(tape, n);
  return tape.push(std::move(n));
}

Tensor unary(Op op, const Tensor& x, Scalar c0 = 0.0, Scalar c1 = 0.0, Index i0 = 0) {
  if (!x.valid()) throw std::invalid_argument(std::string(op_name(op)) + ": unbound tensor");
  if (x.shape().rank > 2) bad_shape(op, x.shape(), "rank > 2 is not recordable");
  return record(x.tape(), op, {x.id()}, x.shape(), c0, c1, i0);
}

Tensor elementwise(Op op, const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(op, a, b);
  if (!(a.shape() == b.shape())) mismatch(op, a.shape(), b.shape());
  return record(t, op, {a.id(), b.id()}, a.shape());
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(Op::kMatMul, a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  Shape out;
  if (sa.rank == 2 && sb.rank == 2 && sa.dims[1] == sb.dims[0]) {
    out = Shape::matrix(sa.dims[0], sb.dims[1]);
  } else if (sa.rank == 1 && sb.rank == 2 && sa.dims[0] == sb.dims[0]) {
    out = Shape::vector(sb.dims[1]);
  } else if (sa.rank == 2 && sb.rank == 1 && sa.dims[1] == sb.dims[0]) {
    out = Shape::vector(sa.dims[0]);
  } else if (sa.rank == 1 && sb.rank == 1 && sa.dims[0] == sb.dims[0]) {
    out = Shape::scalar();
  } else {
    mismatch(Op::kMatMul, sa, sb);
  }
  return record(t, Op::kMatMul, {a.id(), b.id()}, out);
}

Tensor transpose(const Tensor& a) {
  const Shape& s = a.shape();
  if (s.rank > 2) bad_shape(Op::kTranspose, s, "rank > 2");
  const Shape out = s.rank == 2 ? Shape::matrix(s.dims[1], s.dims[0]) : s;
  return record(a.tape(), Op::kTranspose, {a.id()}, out);
}

Tensor operator+(const Tensor& a, const Tensor& b) { return elementwise(Op::kAdd, a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return elementwise(Op::kSub, a, b); }
Tensor operator-(const Tensor& a) { return affine(a, -1.0, 0.0); }
Tensor cwise_product(const Tensor& a, const Tensor& b) { return elementwise(Op::kMul, a, b); }
Tensor affine(const Tensor& x, Scalar scale, Scalar shift) { return unary(Op::kAffine, x, scale, shift); }
Tensor operator*(Scalar s, const Tensor& x) { return affine(x, s, 0.0); }

Tensor scalar_mul(const Tensor& s, const Tensor& x) {
  Tape& t = same_tape(Op::kScalarMul, s, x);
  if (s.shape().rank != 0) mismatch(Op::kScalarMul, s.shape(), x.shape());
  return record(t, Op::kScalarMul, {s.id(), x.id()}, x.shape());
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& t = parts[0].tape();
  const Shape& s0 = parts[0].shape();
  if (s0.rank != 1 && s0.rank != 2) bad_shape(Op::kConcat, s0, "expected rank 1 or 2");
  std::vector<NodeId> ids;
  Index total = 0;
  for (const Tensor& p : parts) {
    same_tape(Op::kConcat, parts[0], p);
    const Shape& s = p.shape();
    if (s.rank != s0.rank || (s0.rank == 2 && s.dims[1] != s0.dims[1])) mismatch(Op::kConcat, s0, s);
    total += s.dims[0];
    ids.push_back(p.id());
  }
  const Shape out = s0.rank == 1 ? Shape::vector(total) : Shape::matrix(total, s0.dims[1]);
  return record(t, Op::kConcat, std::move(ids), out);
}

Tensor slice(const Tensor& x, Index offset, Index length) {
  const Shape& s = x.shape();
  if (s.rank != 1 && s.rank != 2) bad_shape(Op::kSlice, s, "expected rank 1 or 2");
  if (offset < 0 || length < 0 || offset + length > s.dims[0])
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") out of bounds for shape " + s.str());
  const Shape out = s.rank == 1 ? Shape::vector(length) : Shape::matrix(length, s.dims[1]);
  return record(x.tape(), Op::kSlice, {x.id()}, out, 0.0, 0.0, offset);
}

Tensor pad(const Tensor& x, Index offset, Index total) {
  const Shape& s = x.shape();
  if (s.rank != 1 && s.rank != 2) bad_shape(Op::kPad, s, "expected rank 1 or 2");
  if (offset < 0 || offset + s.dims[0] > total)
    throw ShapeError("pad: shape " + s.str() + " does not fit at offset " + std::to_string(offset));
  const Shape out = s.rank == 1 ? Shape::vector(total) : Shape::matrix(total, s.dims[1]);
  return record(x.tape(), Op::kPad, {x.id()}, out, 0.0, 0.0, offset);
}

Tensor sum(const Tensor& x) { return record(x.tape(), Op::kSum, {x.id()}, Shape::scalar()); }
Tensor mean(const Tensor& x) { return record(x.tape(), Op::kMean, {x.id()}, Shape::scalar()); }

Tensor broadcast(const Tensor& s, const Shape& shape) {
  if (s.shape().rank != 0) mismatch(Op::kBroadcast, s.shape(), shape);
  return record(s.tape(), Op::kBroadcast, {s.id()}, shape);
}

Tensor square(const Tensor& x) { return unary(Op::kSquare, x); }
Tensor sqrt(const Tensor& x) { return unary(Op::kSqrt, x); }
Tensor reciprocal(const Tensor& x) { return unary(Op::kReciprocal, x); }
Tensor exp(const Tensor& x) { return unary(Op::kExp, x); }
Tensor log(const Tensor& x) { return unary(Op::kLog, x); }
Tensor sigmoid(const Tensor& x) { return unary(Op::kSigmoid, x); }
Tensor tanh(const Tensor& x) { return unary(Op::kTanh, x); }
Tensor relu(const Tensor& x) { return unary(Op::kRelu, x); }

Tensor indicator(const Tensor& x, Scalar c, bool less_equal) {
  return unary(Op::kIndicator, x, c, 0.0, less_equal ? 1 : 0);
}

Tensor outer(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(Op::kOuter, a, b);
  if (a.shape().rank != 1 || b.shape().rank != 1) mismatch(Op::kOuter, a.shape(), b.shape());
  return record(t, Op::kOuter, {a.id(), b.id()}, Shape::matrix(a.shape().dims[0], b.shape().dims[0]));
}

Tensor l2_norm(const Tensor& x) { return record(x.tape(), Op::kL2Norm, {x.id()}, Shape::scalar()); }

Tensor min_const(const Tensor& x, Scalar c) { return unary(Op::kMinConst, x, c); }

Tensor plastic_update(const Tensor& w, const Tensor& alpha, const Tensor& pre, const Tensor& post,
                      const Tensor& eta) {
  Tape& t = same_tape(Op::kPlasticUpdate, w, alpha);
  same_tape(Op::kPlasticUpdate, w, pre);
  same_tape(Op::kPlasticUpdate, w, post);
  same_tape(Op::kPlasticUpdate, w, eta);
  const Shape& sw = w.shape();
  if (sw.rank != 2) bad_shape(Op::kPlasticUpdate, sw, "plastic weight must be a matrix");
  if (!(alpha.shape() == sw)) mismatch(Op::kPlasticUpdate, sw, alpha.shape());
  if (pre.shape().rank != 1 || pre.shape().dims[0] != sw.dims[0]) mismatch(Op::kPlasticUpdate, sw, pre.shape());
  if (post.shape().rank != 1 || post.shape().dims[0] != sw.dims[1])
    mismatch(Op::kPlasticUpdate, sw, post.shape());
  if (eta.shape().rank != 0) mismatch(Op::kPlasticUpdate, sw, eta.shape());
  return record(t, Op::kPlasticUpdate, {w.id(), alpha.id(), pre.id(), post.id(), eta.id()}, sw);
}

Tensor detach(const Tensor& x) { return x.tape().leaf(x.value(), x.shape()); }

// ---------------------------------------------------------------------------
// Vector-Jacobian products recorded as tape operations.

namespace {

Tensor vjp_tensor(Tape& tape, NodeId id, const Tensor& g, int k) {
  const Tape::Node& n = tape.node(id);
  auto parent = [&](int j) { return Tensor(&tape, n.parents[static_cast<std::size_t>(j)]); };
  const Tensor self(&tape, id);
  switch (n.op) {
    case Op::kLeaf:
    case Op::kIndicator:
      return {};
    case Op::kMatMul: {
      const Tensor a = parent(0), b = parent(1);
      const int ra = a.shape().rank, rb = b.shape().rank;
      if (ra == 2 && rb == 2) return k == 0 ? matmul(g, transpose(b)) : matmul(transpose(a), g);
      if (ra == 1 && rb == 2) return k == 0 ? matmul(b, g) : outer(a, g);
      if (ra == 2 && rb == 1) return k == 0 ? outer(g, b) : matmul(g, a);
      return k == 0 ? scalar_mul(g, b) : scalar_mul(g, a);
    }
    case Op::kTranspose: return transpose(g);
    case Op::kAdd: return g;
    case Op::kSub: return k == 0 ? g : affine(g, -1.0, 0.0);
    case Op::kMul: return cwise_product(g, parent(1 - k));
    case Op::kAffine: return affine(g, n.c0, 0.0);
    case Op::kScalarMul:
      if (k == 0) return sum(cwise_product(g, parent(1)));
      return scalar_mul(parent(0), g);
    case Op::kConcat: {
      Index off = 0;
      for (int j = 0; j < k; ++j) off += tape.node(n.parents[static_cast<std::size_t>(j)]).shape.dims[0];
      return slice(g, off, parent(k).shape().dims[0]);
    }
    case Op::kSlice: return pad(g, n.i0, parent(0).shape().dims[0]);
    case Op::kPad: return slice(g, n.i0, parent(0).shape().dims[0]);
    case Op::kSum: return broadcast(g, parent(0).shape());
    case Op::kMean: {
      const Shape& s = parent(0).shape();
      return affine(broadcast(g, s), 1.0 / static_cast<Scalar>(s.size()), 0.0);
    }
    case Op::kBroadcast: return sum(g);
    case Op::kSquare: return cwise_product(g, affine(parent(0), 2.0, 0.0));
    case Op::kSqrt: return cwise_product(g, affine(reciprocal(self), 0.5, 0.0));
    case Op::kReciprocal: return cwise_product(g, affine(square(self), -1.0, 0.0));
    case Op::kExp: return cwise_product(g, self);
    case Op::kLog: return cwise_product(g, reciprocal(parent(0)));
    case Op::kSigmoid: return cwise_product(g, cwise_product(self, affine(self, -1.0, 1.0)));
    case Op::kTanh: return cwise_product(g, affine(square(self), -1.0, 1.0));
    case Op::kRelu: return cwise_product(g, indicator(parent(0), 0.0, false));
    case Op::kOuter: return k == 0 ? matmul(g, parent(1)) : matmul(parent(0), g);
    case Op::kL2Norm: {
      if (self.item() == 0.0) return {};
      return scalar_mul(cwise_product(g, reciprocal(self)), parent(0));
    }
    case Op::kMinConst: return cwise_product(g, indicator(parent(0), n.c0, true));
    case Op::kPlasticUpdate: {
      const Tensor w = parent(0), alpha = parent(1), a = parent(2), b = parent(3), eta = parent(4);
      switch (k) {
        case 0: return scalar_mul(affine(eta, -1.0, 1.0), g);
        case 1: return scalar_mul(eta, cwise_product(g, outer(a, b)));
        case 2: return matmul(scalar_mul(eta, cwise_product(g, alpha)), b);
        case 3: return matmul(a, scalar_mul(eta, cwise_product(g, alpha)));
        default: return sum(cwise_product(g, cwise_product(alpha, outer(a, b)) - w));
      }
    }
  }
  return {};
}

// Same products evaluated directly. `acc` is empty on first contribution.
template <typename Expr>
void accumulate(Mat& acc, bool& has, const Expr& e) {
  if (has) {
    acc += e;
  } else {
    acc = e;
    has = true;
  }
}

void vjp_value(const Tape& tape, const Tape::Node& n, NodeId id, const Mat& g, int k, Mat& acc, bool& has) {
  auto pval = [&](int j) -> const Mat& { return tape.node(n.parents[static_cast<std::size_t>(j)]).value; };
  auto pshape = [&](int j) -> const Shape& { return tape.node(n.parents[static_cast<std::size_t>(j)]).shape; };
  const Mat& y = n.value;
  switch (n.op) {
    case Op::kLeaf:
    case Op::kIndicator:
      return;
    case Op::kMatMul: {
      const Mat& a = pval(0);
      const Mat& b = pval(1);
      const int ra = pshape(0).rank, rb = pshape(1).rank;
      if (ra == 2 && rb == 2) {
        if (k == 0) accumulate(acc, has, g * b.transpose());
        else accumulate(acc, has, a.transpose() * g);
      } else if (ra == 1 && rb == 2) {
        // a: 1 x k, b: k x n, g: 1 x n
        if (k == 0) {
          accumulate(acc, has, (b * g.transpose()).transpose());
        } else if (has) {
          acc.noalias() += a.transpose() * g;
        } else {
          acc.noalias() = a.transpose() * g;
          has = true;
        }
      } else if (ra == 2 && rb == 1) {
        // a: m x k, b: 1 x k, g: 1 x m
        if (k == 0) {
          if (has) acc.noalias() += g.transpose() * b;
          else {
            acc.noalias() = g.transpose() * b;
            has = true;
          }
        } else {
          accumulate(acc, has, g * a);
        }
      } else {
        accumulate(acc, has, g(0, 0) * (k == 0 ? b : a));
      }
      return;
    }
    case Op::kTranspose:
      if (pshape(0).rank < 2) accumulate(acc, has, g);
      else accumulate(acc, has, g.transpose());
      return;
    case Op::kAdd: accumulate(acc, has, g); return;
    case Op::kSub:
      if (k == 0) accumulate(acc, has, g);
      else accumulate(acc, has, -g);
      return;
    case Op::kMul: accumulate(acc, has, g.cwiseProduct(pval(1 - k))); return;
    case Op::kAffine: accumulate(acc, has, n.c0 * g); return;
    case Op::kScalarMul:
      if (k == 0) {
        Mat r(1, 1);
        r(0, 0) = g.cwiseProduct(pval(1)).sum();
        accumulate(acc, has, r);
      } else {
        accumulate(acc, has, pval(0)(0, 0) * g);
      }
      return;
    case Op::kConcat: {
      Index off = 0;
      for (int j = 0; j < k; ++j) off += pshape(j).dims[0];
      const Index len = pshape(k).dims[0];
      if (n.shape.rank == 2) accumulate(acc, has, g.middleRows(off, len));
      else accumulate(acc, has, g.middleCols(off, len));
      return;
    }
    case Op::kSlice: {
      const Shape& s = pshape(0);
      if (!has) {
        acc = Mat::Zero(s.rows(), s.cols());
        has = true;
      }
      if (s.rank == 2) acc.middleRows(n.i0, g.rows()) += g;
      else acc.middleCols(n.i0, g.cols()) += g;
      return;
    }
    case Op::kPad: {
      const Shape& s = pshape(0);
      if (s.rank == 2) accumulate(acc, has, g.middleRows(n.i0, s.dims[0]));
      else accumulate(acc, has, g.middleCols(n.i0, s.dims[0]));
      return;
    }
    case Op::kSum: {
      const Shape& s = pshape(0);
      accumulate(acc, has, Mat::Constant(s.rows(), s.cols(), g(0, 0)));
      return;
    }
    case Op::kMean: {
      const Shape& s = pshape(0);
      accumulate(acc, has, Mat::Constant(s.rows(), s.cols(), g(0, 0) / static_cast<Scalar>(s.size())));
      return;
    }
    case Op::kBroadcast: {
      Mat r(1, 1);
      r(0, 0) = g.sum();
      accumulate(acc, has, r);
      return;
    }
    case Op::kSquare: accumulate(acc, has, (2.0 * g.array() * pval(0).array()).matrix()); return;
    case Op::kSqrt: accumulate(acc, has, (0.5 * g.array() / y.array()).matrix()); return;
    case Op::kReciprocal: accumulate(acc, has, (-g.array() * y.array().square()).matrix()); return;
    case Op::kExp: accumulate(acc, has, g.cwiseProduct(y)); return;
    case Op::kLog: accumulate(acc, has, (g.array() / pval(0).array()).matrix()); return;
    case Op::kSigmoid: accumulate(acc, has, (g.array() * y.array() * (1.0 - y.array())).matrix()); return;
    case Op::kTanh: accumulate(acc, has, (g.array() * (1.0 - y.array().square())).matrix()); return;
    case Op::kRelu:
      accumulate(acc, has, (pval(0).array() > 0.0).select(g, Mat::Zero(g.rows(), g.cols())));
      return;
    case Op::kOuter:
      // y = a^T b with a: 1 x m, b: 1 x n, g: m x n
      if (k == 0) accumulate(acc, has, (g * pval(1).transpose()).transpose());
      else accumulate(acc, has, pval(0) * g);
      return;
    case Op::kL2Norm: {
      const Scalar norm = y(0, 0);
      if (norm == 0.0) return;
      accumulate(acc, has, (g(0, 0) / norm) * pval(0));
      return;
    }
    case Op::kMinConst:
      accumulate(acc, has, (pval(0).array() <= n.c0).select(g, Mat::Zero(g.rows(), g.cols())));
      return;
    case Op::kPlasticUpdate: {
      const Mat& w = pval(0);
      const Mat& alpha = pval(1);
      const Mat& a = pval(2);
      const Mat& b = pval(3);
      const Scalar eta = pval(4)(0, 0);
      switch (k) {
        case 0: accumulate(acc, has, (1.0 - eta) * g); return;
        case 1: {
          if (!has) {
            acc.setZero(g.rows(), g.cols());
            has = true;
          }
          for (Index i = 0; i < g.rows(); ++i) acc.row(i) += (eta * a(0, i)) * g.row(i).cwiseProduct(b);
          return;
        }
        case 2: {
          Mat r(1, g.rows());
          for (Index i = 0; i < g.rows(); ++i) r(0, i) = eta * g.row(i).cwiseProduct(alpha.row(i)).dot(b.row(0));
          accumulate(acc, has, r);
          return;
        }
        case 3: {
          Mat r = Mat::Zero(1, g.cols());
          for (Index i = 0; i < g.rows(); ++i) r.row(0) += (eta * a(0, i)) * g.row(i).cwiseProduct(alpha.row(i));
          accumulate(acc, has, r);
          return;
        }
        default: {
          // d/d eta = sum(g o (alpha o a b^T - w)) = sum_i a_i <g_i o alpha_i, b> - <g, w>
          Scalar s = 0.0;
          for (Index i = 0; i < g.rows(); ++i) s += a(0, i) * g.row(i).cwiseProduct(alpha.row(i)).dot(b.row(0));
          s -= g.cwiseProduct(w).sum();
          Mat r(1, 1);
          r(0, 0) = s;
          accumulate(acc, has, r);
          return;
        }
      }
    }
  }
  (void)id;
}

struct SweepPlan {
  NodeId lo = 0;
  NodeId top = 0;
  std::vector<char> relevant;  // indexed by id - lo
  bool reachable = false;
};

SweepPlan plan_sweep(const Tape& tape, const Tensor& y, std::span<const Tensor> wrt) {
  SweepPlan plan;
  plan.top = y.id();
  plan.lo = plan.top;
  for (const Tensor& t : wrt) {
    if (&t.tape() != &tape) throw std::invalid_argument("grad: target on a different tape");
    if (t.id() <= plan.top) plan.lo = std::min(plan.lo, t.id());
  }
  plan.relevant.assign(static_cast<std::size_t>(plan.top - plan.lo + 1), 0);
  for (const Tensor& t : wrt)
    if (t.id() <= plan.top && t.id() >= plan.lo) plan.relevant[static_cast<std::size_t>(t.id() - plan.lo)] = 1;
  for (NodeId id = plan.lo; id <= plan.top; ++id) {
    auto& r = plan.relevant[static_cast<std::size_t>(id - plan.lo)];
    if (r) continue;
    for (NodeId p : tape.node(id).parents) {
      if (p >= plan.lo && plan.relevant[static_cast<std::size_t>(p - plan.lo)]) {
        r = 1;
        break;
      }
    }
  }
  plan.reachable = plan.relevant.back() != 0;
  return plan;
}

}  // namespace

std::vector<Tensor> grad(const Tensor& y, std::span<const Tensor> wrt) {
  if (!y.valid()) throw std::invalid_argument("grad: unbound tensor");
  if (y.shape().rank != 0) throw ShapeError("grad: expected a rank-0 tensor, got " + y.shape().str());
  Tape& tape = y.tape();
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  if (wrt.empty()) return out;
  const SweepPlan plan = plan_sweep(tape, y, wrt);
  std::vector<Tensor> adj(plan.relevant.size());
  if (plan.reachable) {
    adj.back() = tape.scalar(1.0);
    for (NodeId id = plan.top; id >= plan.lo; --id) {
      const std::size_t slot = static_cast<std::size_t>(id - plan.lo);
      if (!adj[slot].valid()) continue;
      const std::vector<NodeId> parents = tape.node(id).parents;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        const NodeId p = parents[k];
        if (p < plan.lo || !plan.relevant[static_cast<std::size_t>(p - plan.lo)]) continue;
        const Tensor c = vjp_tensor(tape, id, adj[slot], static_cast<int>(k));
        if (!c.valid()) continue;
        Tensor& dst = adj[static_cast<std::size_t>(p - plan.lo)];
        dst = dst.valid() ? dst + c : c;
      }
    }
  }
  for (const Tensor& t : wrt) {
    const bool in_range = t.id() >= plan.lo && t.id() <= plan.top;
    const Tensor& a = in_range ? adj[static_cast<std::size_t>(t.id() - plan.lo)] : Tensor();
    out.push_back(a.valid() ? a : tape.zeros(t.shape()));
  }
  return out;
}

std::vector<Mat> gradient_values(const Tensor& y, std::span<const Tensor> wrt) {
  if (!y.valid()) throw std::invalid_argument("gradient_values: unbound tensor");
  if (y.shape().rank != 0) throw ShapeError("gradient_values: expected a rank-0 tensor, got " + y.shape().str());
  const Tape& tape = y.tape();
  std::vector<Mat> out;
  out.reserve(wrt.size());
  if (wrt.empty()) return out;
  const SweepPlan plan = plan_sweep(tape, y, wrt);
  const std::size_t n = plan.relevant.size();
  std::vector<Mat> adj(n);
  std::vector<char> has(n, 0);
  std::vector<char> keep(n, 0);
  for (const Tensor& t : wrt)
    if (t.id() >= plan.lo && t.id() <= plan.top) keep[static_cast<std::size_t>(t.id() - plan.lo)] = 1;
  if (plan.reachable && n > 0) {
    adj[n - 1] = Mat::Ones(1, 1);
    has[n - 1] = 1;
    for (NodeId id = plan.top; id >= plan.lo; --id) {
      const std::size_t slot = static_cast<std::size_t>(id - plan.lo);
      if (!has[slot]) continue;
      const Tape::Node& node = tape.node(id);
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        const NodeId p = node.parents[k];
        if (p < plan.lo) continue;
        const std::size_t ps = static_cast<std::size_t>(p - plan.lo);
        if (!plan.relevant[ps]) continue;
        bool h = has[ps] != 0;
        vjp_value(tape, node, id, adj[slot], static_cast<int>(k), adj[ps], h);
        has[ps] = h ? 1 : 0;
      }
      if (!keep[slot]) adj[slot] = Mat();
    }
  }
  for (const Tensor& t : wrt) {
    const bool in_range = t.id() >= plan.lo && t.id() <= plan.top;
    const std::size_t slot = in_range ? static_cast<std::size_t>(t.id() - plan.lo) : 0;
    if (in_range && has[slot])
      out.push_back(adj[slot]);
    else
      out.push_back(Mat::Zero(t.shape().rows(), t.shape().cols()));
  }
  return out;
}

Mat finite_difference_oracle(const std::function<Scalar(const Mat&)>& f, const Mat& point, Scalar epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_difference_oracle: epsilon must be positive");
  Mat g(point.rows(), point.cols());
  Mat x = point;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar orig = x.data()[i];
    x.data()[i] = orig + epsilon;
    const Scalar fp = f(x);
    x.data()[i] = orig - epsilon;
    const Scalar fm = f(x);
    x.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * epsilon);
  }
  return g;
}

}  // namespace plrnn
