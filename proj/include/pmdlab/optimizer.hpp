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

#include "pmdlab/mlp.hpp"

namespace pmdlab::nn {

struct AdamConfig {
  double learning_rate = 0.0025;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments over a flat parameter vector.
struct OptimizerState {
  Vector m;
  Vector v;
  long step = 0;
  AdamConfig config;

  static OptimizerState for_size(Eigen::Index n, AdamConfig config = {});
};

/// Rescales `g` in place so that ||g|| <= max_norm. Returns the norm before
/// clipping. A non-positive or infinite max_norm disables clipping.
double clip_by_global_norm(Vector& g, double max_norm);

/// Clip, then apply one Adam update to `params`. Throws NumericalError on a
/// non-finite gradient and PreconditionError on a size mismatch.
void adam_step(OptimizerState& state, Eigen::Ref<Vector> params, Vector grad, double max_grad_norm);

void optimizer_step(OptimizerState& state, MlpParams& params, const MlpParams& grad,
                    double max_grad_norm);

}  // namespace pmdlab::nn
