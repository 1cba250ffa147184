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

#ifndef PLRNN_GRADCHECK_HPP_
#define PLRNN_GRADCHECK_HPP_

// Finite-difference and closed-form oracles for the differentiation
// machinery. Shared by the `gradcheck` subcommand and the test suites.

#include <cstdint>
#include <string>
#include <vector>

#include "plrnn/models.hpp"
#include "plrnn/random.hpp"
#include "plrnn/tensor.hpp"

namespace plrnn {

struct OracleReport {
  std::string name;
  int cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  int worst_case = -1;

  bool pass() const { return cases > 0 && max_error < tolerance; }
};

/// Relative error between two gradient vectors: max abs difference over
/// max(1, max |reference|).
double relative_error(const Eigen::Ref<const Mat>& got, const Eigen::Ref<const Mat>& reference);

/// Random composite graph over fixed-shape inputs. The structure depends on
/// the seed only, so the same graph can be rebuilt at perturbed inputs.
struct RandomGraph {
  std::uint64_t seed = 0;
  int ops = 12;
  bool allow_kinks = true;  // relu, min_const and indicator masks

  static constexpr Index kRows = 3;
  static constexpr Index kCols = 4;

  /// Random input point, packed as one row: matrix, row vector, column
  /// vector, scalar.
  Mat sample_point(Rng& rng) const;
  std::vector<Tensor> leaves(Tape& tape, const Mat& point) const;
  Tensor build(const std::vector<Tensor>& inputs) const;
  Scalar evaluate(const Mat& point) const;
};

/// grad() against central differences on `graphs` random graphs.
OracleReport first_order_oracle(int graphs, std::uint64_t seed, double tolerance = 1e-6);

/// Hessian-vector products through grad-of-grad against central differences
/// of gradient_values().
OracleReport second_order_oracle(int graphs, std::uint64_t seed, double tolerance = 1e-5);

/// The gradient-rule readout update against the closed Hebbian form
/// p (q o v)^T with v = 2 w_out^2 / dim(o). Error is the max abs difference.
OracleReport readout_hebbian_oracle(int states, std::uint64_t seed, double tolerance = 1e-10);

/// Outer gradient of the meta-loss on a tiny network against central
/// differences at `params` sampled coordinates.
OracleReport meta_gradient_oracle(PlasticityRule rule, Backbone backbone, int params, std::uint64_t seed,
                                  double epsilon = 1e-4, double tolerance = 1e-4);

/// Overwrites every parameter with draws that exercise all code paths
/// (nonzero alpha and beta, w_out away from 1).
void randomize_parameters(PlasticNetwork& net, Rng& rng, double scale = 0.5);

}  // namespace plrnn

#endif  // PLRNN_GRADCHECK_HPP_
