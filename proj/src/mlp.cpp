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

#include "pmdlab/mlp.hpp"

#include <Eigen/QR>
#include <cmath>

#include "pmdlab/errors.hpp"

namespace pmdlab::nn {
namespace {

Matrix orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
  // QR of a Gaussian matrix with the sign correction that makes the result
  // uniformly distributed over orthogonal matrices.
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  Matrix a(big, small);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(big, small);
  const Matrix r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Matrix w = rows >= cols ? q : Matrix(q.transpose());
  return gain * w;
}

}  // namespace

MlpParams::MlpParams(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw ConfigError("MLP layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    layers_.push_back({Matrix::Zero(sizes_[i + 1], sizes_[i]), Vector::Zero(sizes_[i + 1])});
  }
}

MlpParams MlpParams::orthogonal(std::vector<int> sizes, double hidden_gain, double output_gain,
                                Rng& rng) {
  MlpParams p(std::move(sizes));
  for (std::size_t i = 0; i < p.layers_.size(); ++i) {
    const bool last = i + 1 == p.layers_.size();
    Layer& l = p.layers_[i];
    l.weight = orthogonal_matrix(static_cast<int>(l.weight.rows()), static_cast<int>(l.weight.cols()),
                                 last ? output_gain : hidden_gain, rng);
  }
  return p;
}

Matrix MlpParams::forward(const Matrix& x) const {
  if (x.cols() != input_size()) {
    throw PreconditionError("MLP input has " + std::to_string(x.cols()) + " features, expected " +
                            std::to_string(input_size()));
  }
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = h * layers_[i].weight.transpose();
    z.rowwise() += layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) {
      h = z.array().tanh();
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Eigen::Index MlpParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Vector MlpParams::flatten() const {
  Vector out(parameter_count());
  Eigen::Index k = 0;
  for (const Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out[k++] = l.weight(r, c);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out[k++] = l.bias[r];
  }
  return out;
}

void MlpParams::assign(const Vector& flat) {
  if (flat.size() != parameter_count()) {
    throw PreconditionError("flat parameter vector has " + std::to_string(flat.size()) +
                            " entries, expected " + std::to_string(parameter_count()));
  }
  Eigen::Index k = 0;
  for (Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[k++];
  }
}

bool MlpParams::same_shape(const MlpParams& other) const { return sizes_ == other.sizes_; }

bool MlpParams::all_finite() const {
  for (const Layer& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) {
      return false;
    }
  }
  return true;
}

BoundMlp bind(Tape& tape, const MlpParams& params, bool trainable) {
  BoundMlp net;
  for (const Layer& l : params.layers()) {
    net.weights.push_back(trainable ? tape.variable(l.weight) : tape.constant(l.weight));
    net.biases.push_back(trainable ? tape.variable(l.bias) : tape.constant(l.bias));
  }
  return net;
}

Var forward(const BoundMlp& net, Var x) {
  Var h = x;
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    h = affine(h, net.weights[i], net.biases[i]);
    if (i + 1 < net.weights.size()) h = tanh(h);
  }
  return h;
}

MlpParams gradient_of(const Tape& tape, const BoundMlp& net, const MlpParams& like) {
  MlpParams g(like.sizes());
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    const Matrix& gw = tape.grad(net.weights[i]);
    const Matrix& gb = tape.grad(net.biases[i]);
    if (gw.size() != 0) g.layers()[i].weight = gw;
    if (gb.size() != 0) g.layers()[i].bias = gb.col(0);
  }
  return g;
}

MlpParams grad(const LossFn& loss, const MlpParams& params, double* loss_value) {
  Tape tape;
  const BoundMlp net = bind(tape, params, true);
  const Var l = loss(tape, net);
  if (loss_value != nullptr) *loss_value = l.scalar();
  tape.backward(l);
  return gradient_of(tape, net, params);
}

MlpParams polyak_update(const MlpParams& target, const MlpParams& online, double tau) {
  if (!target.same_shape(online)) throw PreconditionError("polyak_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("polyak_update: tau must lie in [0, 1]");
  MlpParams out = target;
  for (std::size_t i = 0; i < out.layers().size(); ++i) {
    Layer& l = out.layers()[i];
    const Layer& o = online.layers()[i];
    l.weight = tau * l.weight + (1.0 - tau) * o.weight;
    l.bias = tau * l.bias + (1.0 - tau) * o.bias;
  }
  return out;
}

reg::ActionDistribution policy_dist(const PolicyHead& head, std::span<const double> obs) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (n != head.params().input_size()) {
    throw PreconditionError("observation has " + std::to_string(n) + " entries, policy expects " +
                            std::to_string(head.params().input_size()));
  }
  Matrix x(1, n);
  for (Eigen::Index i = 0; i < n; ++i) x(0, i) = obs[static_cast<std::size_t>(i)];
  const Matrix p = head.probs(x);
  return reg::ActionDistribution(std::vector<double>(p.data(), p.data() + p.size()));
}

Matrix TwinCritic::min_online(const Matrix& obs) const {
  return q1.forward(obs).cwiseMin(q2.forward(obs));
}

Matrix TwinCritic::min_target(const Matrix& obs) const {
  return target1.forward(obs).cwiseMin(target2.forward(obs));
}

nlohmann::json to_json(const MlpParams& params) {
  const Vector flat = params.flatten();
  return {{"format", "pmdlab.mlp"},
          {"version", 1},
          {"sizes", params.sizes()},
          {"params", std::vector<double>(flat.data(), flat.data() + flat.size())}};
}

MlpParams mlp_from_json(const nlohmann::json& blob) {
  try {
    if (blob.at("format").get<std::string>() != "pmdlab.mlp") throw StorageError("not an MLP blob");
    if (blob.at("version").get<int>() != 1) throw StorageError("unsupported MLP blob version");
    MlpParams p(blob.at("sizes").get<std::vector<int>>());
    const auto values = blob.at("params").get<std::vector<double>>();
    p.assign(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw StorageError(std::string("malformed MLP blob: ") + e.what());
  } catch (const PreconditionError& e) {
    throw StorageError(std::string("malformed MLP blob: ") + e.what());
  }
}

}  // namespace pmdlab::nn
