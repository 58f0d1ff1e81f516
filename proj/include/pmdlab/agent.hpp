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

// Off-policy MDPO(h, D): twin-critic evaluation of the regularized Q-value
// and a policy step that trades the critic's value against the MDP
// regularizer h (temperature alpha) and a drift D to the iteration-start
// policy (temperature lambda).

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmdlab/environments.hpp"
#include "pmdlab/mlp.hpp"
#include "pmdlab/optimizer.hpp"
#include "pmdlab/regularizers.hpp"
#include "pmdlab/replay_buffer.hpp"
#include "pmdlab/schedule.hpp"

namespace pmdlab::agent {

struct AgentConfig {
  reg::RegularizerSpec regularizer = reg::RegularizerSpec::neg_shannon();
  reg::DriftSpec drift = reg::DriftSpec::reverse_kl();
  TemperatureSchedule alpha_schedule = TemperatureSchedule::constant(0.01);
  TemperatureSchedule lambda_schedule = TemperatureSchedule::constant(0.1);
  /// false drops the -alpha * h term from the critic target (APMD).
  bool use_regularized_q = true;

  double gamma = 0.99;
  int env_count = 16;
  int steps_per_update = 256;
  int batch_size = 512;
  int critic_epochs = 1;
  int actor_epochs = 2;
  double tau = 0.95;
  long total_env_steps = 1'000'000;
  double learning_rate = 0.0025;
  double max_grad_norm = 1.0;
  std::size_t replay_capacity = 100'000;
  std::vector<int> hidden = {64, 64};

  void validate() const;

  /// floor(total_env_steps / steps_per_update)
  long iteration_count() const { return total_env_steps / steps_per_update; }
};

// ---------------------------------------------------------------------------
// Regularizers on the tape. Each maps a B x n probability Var to a B x 1 Var.

nn::Var h_rows(const reg::RegularizerSpec& spec, nn::Var probs);
/// D(probs; old_probs) per row; old_probs is a constant.
nn::Var drift_rows(const reg::DriftSpec& spec, nn::Var probs, const nn::Matrix& old_probs);

/// h evaluated row by row without a tape.
nn::Vector h_rows(const reg::RegularizerSpec& spec, const nn::Matrix& probs);

// ---------------------------------------------------------------------------
// Losses. Each returns the loss value with reverse-mode gradients.

struct ActorLossResult {
  double value = 0.0;
  nn::MlpParams grad;
};

/// mean_s [ sum_a pi(a|s) (-Qhat(s,a)) + alpha h(pi(.|s)) + lambda D(pi; pi_old | s) ]
/// with Qhat the detached min of the online critics.
ActorLossResult actor_loss(const AgentConfig& config, const nn::PolicyHead& policy,
                           const nn::PolicyHead& snapshot, const nn::TwinCritic& critics,
                           const Batch& batch, double alpha, double lambda);

/// Same loss with the snapshot probabilities and Qhat precomputed (B x n).
ActorLossResult actor_loss(const AgentConfig& config, const nn::PolicyHead& policy,
                           const nn::Matrix& obs, const nn::Matrix& old_probs,
                           const nn::Matrix& q_hat, double alpha, double lambda);

/// Bootstrap targets r + gamma (1 - d) [ sum_a' pi(a'|s') min_i Qtarget_i(s',a')
///                                       - alpha h(pi(.|s')) ]
/// where the h term is present only when config.use_regularized_q.
nn::Vector critic_targets(const AgentConfig& config, const nn::TwinCritic& critics,
                          const nn::PolicyHead& policy, const Batch& batch, double alpha);

struct CriticLossResult {
  double value = 0.0;
  nn::MlpParams grad_q1;
  nn::MlpParams grad_q2;
};

/// mean (Q1(s,a) - y)^2 + mean (Q2(s,a) - y)^2 with detached targets y.
CriticLossResult critic_loss(const AgentConfig& config, const nn::TwinCritic& critics,
                             const nn::PolicyHead& policy, const Batch& batch, double alpha);

CriticLossResult critic_loss(const nn::TwinCritic& critics, const Batch& batch,
                             const nn::Vector& targets);

struct AlphaLossResult {
  double value = 0.0;
  double grad_log_alpha = 0.0;
};

/// J(alpha) = mean_s [ -alpha h(pi(.|s)) + alpha h_bar ], alpha = exp(log_alpha).
AlphaLossResult alpha_loss(const AgentConfig& config, const nn::PolicyHead& snapshot,
                           const Batch& batch, double log_alpha, double h_bar);

// ---------------------------------------------------------------------------

struct IterationLog {
  long iteration = 0;
  long env_steps = 0;  // after this iteration's collection
  double mean_return = 0.0;  // over episodes finished while collecting; NaN if none
  int episodes = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  double h_bar = 0.0;  // learned-alpha target, 0 otherwise
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double alpha_loss = 0.0;
};

class MdpoAgent {
 public:
  MdpoAgent(AgentConfig config, env::EnvConfig env_config, std::uint64_t seed);

  /// Runs env_count instances for n_steps / env_count steps each, sampling
  /// actions from the current policy. Throws PreconditionError unless n_steps
  /// is a multiple of env_count.
  void collect(int n_steps);

  /// collect -> sample batch -> snapshot -> actor epochs -> alpha step ->
  /// critic epochs -> Polyak -> advance schedules.
  IterationLog train_iteration();

  /// Runs iteration_count() iterations, invoking `on_iteration` after each.
  std::vector<IterationLog> train(const std::function<void(const IterationLog&)>& on_iteration = {});

  double current_alpha() const;
  double current_lambda() const;
  /// Learned-alpha target at the current step (0 when alpha is not learned).
  double current_h_bar() const;

  const AgentConfig& config() const { return config_; }
  const env::EnvConfig& env_config() const { return env_config_; }
  const nn::PolicyHead& policy() const { return policy_; }
  nn::PolicyHead& policy() { return policy_; }
  const nn::TwinCritic& critics() const { return critics_; }
  nn::TwinCritic& critics() { return critics_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  long env_steps() const { return env_steps_; }
  long iterations_done() const { return iteration_; }
  double log_alpha() const { return log_alpha_; }

  /// Hook for tests: called after each actor step with the snapshot policy.
  std::function<void(const nn::PolicyHead& current, const nn::PolicyHead& snapshot)> after_actor_step;

 private:
  struct Slot {
    env::EnvState state;
    std::vector<double> obs;
    double episode_return = 0.0;
  };

  void reset_slot(Slot& slot);

  AgentConfig config_;
  env::EnvConfig env_config_;
  Rng rng_;      // action sampling and minibatches
  Rng env_rng_;  // reset seeds
  nn::PolicyHead policy_;
  nn::TwinCritic critics_;
  nn::OptimizerState actor_opt_;
  nn::OptimizerState critic_opt_;
  nn::OptimizerState alpha_opt_;
  double log_alpha_ = 0.0;
  double h_bar0_ = 0.0;
  ReplayBuffer buffer_;
  std::vector<Slot> slots_;
  long env_steps_ = 0;
  long iteration_ = 0;
  std::vector<double> finished_returns_;
};

/// Runs `episodes` complete episodes sampling actions stochastically from
/// the policy; returns raw (scaled, unnormalized) returns.
std::vector<double> evaluate(const nn::PolicyHead& policy, const env::EnvConfig& env_config,
                             int episodes, std::uint64_t seed);

}  // namespace pmdlab::agent
