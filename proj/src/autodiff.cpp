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

#include "pmdlab/autodiff.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pmdlab/errors.hpp"

namespace pmdlab::nn {
namespace {

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw UsageError("Var is not attached to a tape");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw UsageError("Vars belong to different tapes");
  return tape_of(a);
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                            "x" + std::to_string(b.cols()));
  }
}

// Unary elementwise op whose derivative is a function of input and output.
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(fwd(a.value()), t.needs_grad(ia),
                [ia, deriv](Tape& tp, int self, const Matrix& g) {
                  tp.accumulate(ia, g.cwiseProduct(deriv(tp.value(ia), tp.value(self))));
                });
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw PreconditionError("scalar() on a non 1x1 Var");
  return v(0, 0);
}

Var Tape::variable(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::push(Matrix value, bool needs_grad, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& node = nodes_[static_cast<std::size_t>(id)];
  if (!node.needs_grad) return;
  if (!node.has_grad) {
    node.grad = g;
    node.has_grad = true;
  } else {
    node.grad += g;
  }
}

const Matrix& Tape::grad(Var v) const {
  static const Matrix kEmpty;
  const Node& node = nodes_[static_cast<std::size_t>(v.id())];
  return node.has_grad ? node.grad : kEmpty;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("backward: loss belongs to another tape");
  const Matrix& lv = loss.value();
  if (lv.size() != 1) throw PreconditionError("backward: loss must be 1x1");
  if (!std::isfinite(lv(0, 0))) {
    throw NumericalError("non-finite loss (" + std::to_string(lv(0, 0)) + ") on a tape of " +
                         std::to_string(nodes_.size()) + " nodes");
  }
  for (Node& n : nodes_) n.has_grad = false;
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.has_grad || !node.backprop) continue;
    node.backprop(*this, id, node.grad);
  }
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int, const Matrix& g) {
                  tp.accumulate(ia, g);
                  tp.accumulate(ib, g);
                });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int, const Matrix& g) {
                  tp.accumulate(ia, g);
                  if (tp.needs_grad(ib)) tp.accumulate(ib, -g);
                });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseProduct(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int, const Matrix& g) {
                  if (tp.needs_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
                  if (tp.needs_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
                });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(a.value() * c, t.needs_grad(ia),
                [ia, c](Tape& tp, int, const Matrix& g) { tp.accumulate(ia, g * c); });
}

Var shift(Var a, double c) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push((a.value().array() + c).matrix(), t.needs_grad(ia),
                [ia](Tape& tp, int, const Matrix& g) { tp.accumulate(ia, g); });
}

Var scale_by(Var a, Var s) {
  Tape& t = tape_of(a, s);
  if (s.value().size() != 1) throw PreconditionError("scale_by: scale must be 1x1");
  const int ia = a.id(), is = s.id();
  return t.push(a.value() * s.scalar(), t.needs_grad(ia) || t.needs_grad(is),
                [ia, is](Tape& tp, int, const Matrix& g) {
                  if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value(is)(0, 0));
                  if (tp.needs_grad(is)) {
                    tp.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(tp.value(ia)).sum()));
                  }
                });
}

Var minimum(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "minimum");
  const int ia = a.id(), ib = b.id();
  return t.push(a.value().cwiseMin(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                [ia, ib](Tape& tp, int, const Matrix& g) {
                  // Ties route to the first argument.
                  const auto take_a = (tp.value(ia).array() <= tp.value(ib).array());
                  if (tp.needs_grad(ia)) tp.accumulate(ia, take_a.select(g.array(), 0.0).matrix());
                  if (tp.needs_grad(ib)) tp.accumulate(ib, take_a.select(0.0, g.array()).matrix());
                });
}

Var tanh(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().tanh(); },
      [](const Matrix&, const Matrix& y) -> Matrix { return (1.0 - y.array().square()).matrix(); });
}

Var exp(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp(); },
      [](const Matrix&, const Matrix& y) -> Matrix { return y; });
}

Var log(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().log(); },
      [](const Matrix& x, const Matrix&) -> Matrix { return x.array().inverse(); });
}

Var pow(Var a, double e) {
  return unary(
      a, [e](const Matrix& x) -> Matrix { return x.array().pow(e); },
      [e](const Matrix& x, const Matrix&) -> Matrix { return (e * x.array().pow(e - 1.0)).matrix(); });
}

Var clamp_min(Var a, double lo) {
  return unary(
      a, [lo](const Matrix& x) -> Matrix { return x.array().max(lo); },
      [lo](const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() >= lo).select(Matrix::Ones(x.rows(), x.cols()), 0.0);
      });
}

Var affine(Var x, Var weight, Var bias) {
  Tape& t = tape_of(x, weight);
  if (bias.tape() != x.tape()) throw UsageError("affine: bias on another tape");
  if (x.cols() != weight.cols() || bias.rows() != weight.rows() || bias.cols() != 1) {
    throw PreconditionError("affine: input has " + std::to_string(x.cols()) +
                            " features, layer expects " + std::to_string(weight.cols()));
  }
  Matrix out = x.value() * weight.value().transpose();
  out.rowwise() += bias.value().col(0).transpose();
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  const bool ng = t.needs_grad(ix) || t.needs_grad(iw) || t.needs_grad(ib);
  return t.push(std::move(out), ng, [ix, iw, ib](Tape& tp, int, const Matrix& g) {
    if (tp.needs_grad(ix)) tp.accumulate(ix, g * tp.value(iw));
    if (tp.needs_grad(iw)) tp.accumulate(iw, g.transpose() * tp.value(ix));
    if (tp.needs_grad(ib)) tp.accumulate(ib, g.colwise().sum().transpose());
  });
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.push(softmax_rows(a.value()), t.needs_grad(ia), [ia](Tape& tp, int self, const Matrix& g) {
    // dL/dz = p * (g - <g, p>) row by row.
    const Matrix& p = tp.value(self);
    const Vector inner = g.cwiseProduct(p).rowwise().sum();
    Matrix dz = g;
    dz.colwise() -= inner;
    tp.accumulate(ia, dz.cwiseProduct(p));
  });
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Eigen::Index n = a.cols();
  return t.push(a.value().rowwise().sum(), t.needs_grad(ia), [ia, n](Tape& tp, int, const Matrix& g) {
    tp.accumulate(ia, g.col(0).replicate(1, n));
  });
}

Var row_max(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Matrix& v = a.value();
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(v.rows()));
  Matrix out(v.rows(), 1);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    Eigen::Index j = 0;
    for (Eigen::Index c = 1; c < v.cols(); ++c) {
      if (v(r, c) > v(r, j)) j = c;
    }
    arg[static_cast<std::size_t>(r)] = j;
    out(r, 0) = v(r, j);
  }
  const Eigen::Index cols = v.cols();
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, arg = std::move(arg), cols](Tape& tp, int, const Matrix& g) {
                  Matrix d = Matrix::Zero(g.rows(), cols);
                  for (Eigen::Index r = 0; r < g.rows(); ++r) d(r, arg[static_cast<std::size_t>(r)]) = g(r, 0);
                  tp.accumulate(ia, d);
                });
}

Var gather(Var a, std::span<const int> index) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  if (static_cast<Eigen::Index>(index.size()) != v.rows()) {
    throw PreconditionError("gather: index length does not match row count");
  }
  Matrix out(v.rows(), 1);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const int c = index[static_cast<std::size_t>(r)];
    if (c < 0 || c >= v.cols()) throw PreconditionError("gather: column index out of range");
    out(r, 0) = v(r, c);
  }
  const int ia = a.id();
  const Eigen::Index cols = v.cols();
  std::vector<int> idx(index.begin(), index.end());
  return t.push(std::move(out), t.needs_grad(ia),
                [ia, idx = std::move(idx), cols](Tape& tp, int, const Matrix& g) {
                  Matrix d = Matrix::Zero(g.rows(), cols);
                  for (Eigen::Index r = 0; r < g.rows(); ++r) d(r, idx[static_cast<std::size_t>(r)]) = g(r, 0);
                  tp.accumulate(ia, d);
                });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), t.needs_grad(ia),
                [ia, r, c](Tape& tp, int, const Matrix& g) {
                  tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw PreconditionError("mean of an empty Var");
  return scale(sum(a), 1.0 / n);
}

}  // namespace pmdlab::nn
