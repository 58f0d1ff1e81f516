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

// Independent reference computations for tests. Nothing here calls the
// tape: losses are re-evaluated from plain forward passes and the scalar
// regularizer functions, gradients come from central differences.

#pragma once

#include <functional>
#include <vector>

#include "pmdlab/agent.hpp"
#include "pmdlab/random.hpp"
#include "pmdlab/regularizers.hpp"

namespace pmdlab::testing {

/// Dirichlet(1) draw on the n-simplex.
std::vector<double> random_simplex(Rng& rng, std::size_t n);
reg::ActionDistribution random_dist(Rng& rng, std::size_t n);

/// sum p log(p / q) over p > 0.
double kl_bruteforce(const std::vector<double>& p, const std::vector<double>& q);

/// Every regularizer kind, with Tsallis and Lp at representative exponents.
std::vector<reg::RegularizerSpec> all_regularizers();
/// Reverse KL, forward KL and the Bregman divergence of every regularizer.
std::vector<reg::DriftSpec> all_drifts();

/// Central differences of f at x with step h.
nn::Vector central_difference(const std::function<double(const nn::Vector&)>& f, const nn::Vector& x,
                              double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(const nn::Vector& a, const nn::Vector& b, double floor);

/// Row-wise softmax of the network output.
nn::Matrix plain_probs(const nn::MlpParams& policy, const nn::Matrix& obs);

/// The actor objective evaluated state by state with reg::h_value and
/// reg::drift_value.
double actor_loss_oracle(const agent::AgentConfig& config, const nn::MlpParams& policy, const nn::Matrix& obs,
                         const nn::Matrix& old_probs, const nn::Matrix& q_hat, double alpha, double lambda);

/// Bootstrap targets evaluated transition by transition.
nn::Vector critic_targets_oracle(const agent::AgentConfig& config, const nn::TwinCritic& critics,
                                 const nn::MlpParams& policy, const agent::Batch& batch, double alpha);

double critic_loss_oracle(const nn::MlpParams& q1, const nn::MlpParams& q2, const agent::Batch& batch,
                          const nn::Vector& targets);

/// exp(log_alpha) * (h_bar - mean h) with h from reg::h_value.
double alpha_loss_oracle(const agent::AgentConfig& config, const nn::MlpParams& snapshot, const nn::Matrix& obs,
                         double log_alpha, double h_bar);

/// Random network with normal(0, scale) weights and biases.
nn::MlpParams random_mlp(const std::vector<int>& sizes, Rng& rng, double scale);

/// Random batch of b transitions over obs_dim features and n actions.
agent::Batch random_batch(Rng& rng, int b, int obs_dim, int n_actions, double done_rate);

}  // namespace pmdlab::testing
