// Copyright 2026 The pmdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Matrix-valued reverse-mode differentiation.
//
// A Tape records every operation applied to its Vars together with a closure
// that maps the output cotangent to input cotangents. Calling backward() on a
// 1x1 Var walks the record in reverse. Only the primitives needed by the
// policy, critic and temperature losses are provided.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace pmdlab::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 Var.
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives the tape, the id of the node being processed and its cotangent.
  using Backprop = std::function<void(Tape&, int self, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose gradient is tracked.
  Var variable(Matrix value);
  /// Leaf treated as a constant (no gradient flows into it).
  Var constant(Matrix value);

  /// Reverse sweep from a 1x1 loss. Throws NumericalError if the loss is not
  /// finite.
  void backward(Var loss);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  /// Gradient accumulated by backward(); zero-shaped if none reached it.
  const Matrix& grad(Var v) const;

  /// Used by the primitives below.
  Var push(Matrix value, bool needs_grad, Backprop backprop);
  void accumulate(int id, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Backprop backprop;
  };
  std::vector<Node> nodes_;
};

// Elementwise arithmetic. Shapes must match exactly.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var shift(Var a, double c);
/// a * s for a 1x1 Var s.
Var scale_by(Var a, Var s);
Var minimum(Var a, Var b);

Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var pow(Var a, double exponent);
/// max(a, lo) elementwise; gradient is zero where the floor is active.
Var clamp_min(Var a, double lo);

/// x * W^T + 1 b^T, with x: B x in, W: out x in, b: out x 1.
Var affine(Var x, Var weight, Var bias);

Var softmax_rows(Var a);
/// B x n -> B x 1.
Var row_sum(Var a);
/// B x n -> B x 1, routing the gradient to the lowest maximizing column.
Var row_max(Var a);
/// B x n -> B x 1 picking column index[r] in row r.
Var gather(Var a, std::span<const int> index);
/// Any shape -> 1 x 1.
Var sum(Var a);
Var mean(Var a);

/// Row-wise softmax without a tape.
Matrix softmax_rows(const Matrix& logits);

}  // namespace pmdlab::nn
