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

#include "pmdlab/optimizer.hpp"

#include <cmath>
#include <string>

#include "pmdlab/errors.hpp"

namespace pmdlab::nn {

OptimizerState OptimizerState::for_size(Eigen::Index n, AdamConfig config) {
  return {Vector::Zero(n), Vector::Zero(n), 0, config};
}

double clip_by_global_norm(Vector& g, double max_norm) {
  const double norm = g.norm();
  if (max_norm > 0.0 && std::isfinite(max_norm) && norm > max_norm) g *= max_norm / norm;
  return norm;
}

void adam_step(OptimizerState& state, Eigen::Ref<Vector> params, Vector grad, double max_grad_norm) {
  if (grad.size() != params.size() || state.m.size() != params.size()) {
    throw PreconditionError("optimizer: gradient, moments and parameters differ in size");
  }
  if (!grad.allFinite()) {
    throw NumericalError("optimizer: non-finite gradient at step " + std::to_string(state.step));
  }
  clip_by_global_norm(grad, max_grad_norm);
  const AdamConfig& c = state.config;
  state.step += 1;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grad;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params.array() -= c.learning_rate * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + c.epsilon);
}

void optimizer_step(OptimizerState& state, MlpParams& params, const MlpParams& grad,
                    double max_grad_norm) {
  if (!params.same_shape(grad)) throw PreconditionError("optimizer: gradient shape mismatch");
  Vector flat = params.flatten();
  adam_step(state, flat, grad.flatten(), max_grad_norm);
  params.assign(flat);
}

}  // namespace pmdlab::nn
