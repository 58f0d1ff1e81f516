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

#pragma once

#include <functional>
#include <json.hpp>
#include <vector>

#include "pmdlab/autodiff.hpp"
#include "pmdlab/random.hpp"
#include "pmdlab/regularizers.hpp"

namespace pmdlab::nn {

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Weights of a tanh multilayer perceptron with a linear output layer.
class MlpParams {
 public:
  MlpParams() = default;
  /// All-zero parameters for layer sizes {input, hidden..., output}.
  explicit MlpParams(std::vector<int> sizes);

  /// Orthogonal weights scaled by `hidden_gain` (hidden layers) and
  /// `output_gain` (last layer); zero biases.
  static MlpParams orthogonal(std::vector<int> sizes, double hidden_gain, double output_gain,
                              Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Batched forward pass, x: B x input -> B x output.
  Matrix forward(const Matrix& x) const;

  Eigen::Index parameter_count() const;
  /// Layer by layer: weight row-major, then bias.
  Vector flatten() const;
  void assign(const Vector& flat);

  bool same_shape(const MlpParams& other) const;
  bool all_finite() const;

  friend bool operator==(const MlpParams& a, const MlpParams& b);

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

/// MlpParams recorded on a Tape.
struct BoundMlp {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

BoundMlp bind(Tape& tape, const MlpParams& params, bool trainable);
Var forward(const BoundMlp& net, Var x);
/// Gradient accumulated on `net` after tape.backward(), shaped like `like`.
MlpParams gradient_of(const Tape& tape, const BoundMlp& net, const MlpParams& like);

using LossFn = std::function<Var(Tape&, const BoundMlp&)>;

/// Reverse-mode gradient of a scalar loss built from the tape primitives.
/// Throws NumericalError on a non-finite loss.
MlpParams grad(const LossFn& loss, const MlpParams& params, double* loss_value = nullptr);

/// tau * target + (1 - tau) * online. tau = 1 keeps the target.
MlpParams polyak_update(const MlpParams& target, const MlpParams& online, double tau);

/// Softmax policy over the network's outputs.
class PolicyHead {
 public:
  PolicyHead() = default;
  explicit PolicyHead(MlpParams net) : net_(std::move(net)) {}

  MlpParams& params() { return net_; }
  const MlpParams& params() const { return net_; }
  int action_count() const { return net_.output_size(); }

  /// Batched probabilities, B x actions.
  Matrix probs(const Matrix& obs) const { return softmax_rows(net_.forward(obs)); }

 private:
  MlpParams net_;
};

/// Throws PreconditionError on an observation of the wrong size.
reg::ActionDistribution policy_dist(const PolicyHead& head, std::span<const double> obs);

/// Two independent Q networks plus their Polyak-averaged targets.
struct TwinCritic {
  MlpParams q1, q2;
  MlpParams target1, target2;

  /// Elementwise min over the two online networks.
  Matrix min_online(const Matrix& obs) const;
  Matrix min_target(const Matrix& obs) const;
};

/// Checkpoint blob: {"format": "pmdlab.mlp", "version": 1, "sizes": [...],
/// "params": [flat parameters in flatten() order]}.
nlohmann::json to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& blob);

}  // namespace pmdlab::nn
