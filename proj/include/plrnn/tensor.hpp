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

#ifndef PLRNN_TENSOR_HPP_
#define PLRNN_TENSOR_HPP_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plrnn {

using Scalar = double;
using Index = Eigen::Index;

// Row-major storage for every value on the tape. Vectors are 1 x n, scalars
// are 1 x 1.
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

struct Shape {
  int rank = 0;
  std::array<Index, 3> dims{1, 1, 1};

  static Shape scalar() { return {}; }
  static Shape vector(Index n) { return {1, {n, 1, 1}}; }
  static Shape matrix(Index r, Index c) { return {2, {r, c, 1}}; }

  Index size() const {
    Index n = 1;
    for (int i = 0; i < rank; ++i) n *= dims[i];
    return n;
  }
  // Storage geometry of the row-major value.
  Index rows() const { return rank == 2 ? dims[0] : 1; }
  Index cols() const { return rank == 0 ? 1 : (rank == 1 ? dims[0] : dims[1]); }

  std::string str() const;
  friend bool operator==(const Shape& a, const Shape& b) {
    if (a.rank != b.rank) return false;
    for (int i = 0; i < a.rank; ++i)
      if (a.dims[i] != b.dims[i]) return false;
    return true;
  }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kTranspose,
  kAdd,
  kSub,
  kMul,        // elementwise
  kAffine,     // a * x + b with constants a, b
  kScalarMul,  // rank-0 tensor times tensor
  kConcat,
  kSlice,
  kPad,        // adjoint of slice: embed into zeros
  kSum,
  kMean,
  kBroadcast,  // rank-0 to shape
  kSquare,
  kSqrt,
  kReciprocal,
  kExp,
  kLog,
  kSigmoid,
  kTanh,
  kRelu,
  kIndicator,  // 0/1 mask, zero derivative
  kOuter,
  kL2Norm,
  kMinConst,
  kPlasticUpdate,  // (1 - eta) w + eta * alpha o (a b^T)
};

const char* op_name(Op op);

using NodeId = std::int32_t;

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; the value itself is
/// owned by the tape and never changes once recorded.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  const Mat& value() const;
  const Shape& shape() const;
  // Value of a rank-0 tensor.
  Scalar item() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = -1;
};

/// Append-only record of operations. A tape is single-owner: record on it
/// from one thread at a time. Parents always precede their consumers, so the
/// node order is a topological order.
class Tape {
 public:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<NodeId> parents;
    Shape shape;
    Mat value;
    Scalar c0 = 0.0;  // op constants (affine scale, min bound, ...)
    Scalar c1 = 0.0;
    Index i0 = 0;     // slice offset / pad offset / indicator mode
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Mat value, const Shape& shape);
  Tensor scalar(Scalar v);
  Tensor vector(const Eigen::Ref<const RowVec>& v);
  Tensor matrix(const Eigen::Ref<const Mat>& m);
  Tensor zeros(const Shape& shape);
  Tensor ones(const Shape& shape);

  Tensor push(Node node);

  const Node& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  /// Recomputes every non-leaf node from its parents and returns true when
  /// each result is bit-identical to the recorded value.
  bool replay_matches() const;

 private:
  std::deque<Node> nodes_;
};

Mat evaluate_node(const Tape& tape, const Tape::Node& node);

// ---------------------------------------------------------------------------
// Recording free functions. Each checks its shape rule and throws ShapeError
// naming the op and both operand shapes.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a);
Tensor cwise_product(const Tensor& a, const Tensor& b);
Tensor affine(const Tensor& x, Scalar scale, Scalar shift);
Tensor operator*(Scalar s, const Tensor& x);
Tensor scalar_mul(const Tensor& s, const Tensor& x);
Tensor concat(std::span<const Tensor> parts);
Tensor slice(const Tensor& x, Index offset, Index length);
Tensor pad(const Tensor& x, Index offset, Index total);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor broadcast(const Tensor& s, const Shape& shape);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor reciprocal(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
// 1 where x > c (mode 0) or x <= c (mode 1), else 0.
Tensor indicator(const Tensor& x, Scalar c, bool less_equal);
Tensor outer(const Tensor& a, const Tensor& b);
Tensor l2_norm(const Tensor& x);
Tensor min_const(const Tensor& x, Scalar c);
Tensor plastic_update(const Tensor& w, const Tensor& alpha, const Tensor& pre,
                      const Tensor& post, const Tensor& eta);
// Leaf with the same value; gradients do not flow through it.
Tensor detach(const Tensor& x);

// ---------------------------------------------------------------------------
// Differentiation.

/// Reverse-mode gradients of a rank-0 tensor with respect to each target.
/// Targets may be leaves or intermediate nodes; an intermediate target is
/// treated as an independent variable. The returned tensors are recorded on
/// the same tape, so they can be differentiated again. Unreachable targets
/// yield zero tensors of the target's shape.
std::vector<Tensor> grad(const Tensor& scalar, std::span<const Tensor> wrt);

/// Same derivatives as grad() but computed as plain values without
/// recording anything. Used where no further differentiation is needed.
std::vector<Mat> gradient_values(const Tensor& scalar, std::span<const Tensor> wrt);

/// Central-difference gradient of a scalar function.
Mat finite_difference_oracle(const std::function<Scalar(const Mat&)>& f,
                             const Mat& point, Scalar epsilon);

}  // namespace plrnn

#endif  // PLRNN_TENSOR_HPP_
