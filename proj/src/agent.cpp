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

#include "pmdlab/agent.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "pmdlab/errors.hpp"

namespace pmdlab::agent {
namespace {

using nn::Matrix;

constexpr double kHiddenGain = std::numbers::sqrt2;
constexpr double kPolicyOutputGain = 0.01;
constexpr double kCriticOutputGain = 1.0;

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

Matrix row_matrix(const std::vector<double>& v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

}  // namespace

void AgentConfig::validate() const {
  regularizer.validate();
  drift.validate();
  alpha_schedule.validate();
  lambda_schedule.validate();
  if (lambda_schedule.learned()) throw ConfigError("the drift temperature cannot be learned");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (env_count <= 0 || steps_per_update <= 0 || batch_size <= 0 || critic_epochs <= 0 ||
      actor_epochs <= 0 || total_env_steps <= 0 || replay_capacity == 0) {
    throw ConfigError("agent counts must be positive");
  }
  if (steps_per_update % env_count != 0) {
    throw ConfigError("steps_per_update must be a multiple of env_count");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("hidden layer sizes must be positive");
  }
}

MdpoAgent::MdpoAgent(AgentConfig config, env::EnvConfig env_config, std::uint64_t seed)
    : config_(std::move(config)),
      env_config_(env_config),
      rng_(derive_seed(seed, 1)),
      env_rng_(derive_seed(seed, 2)),
      buffer_(config_.replay_capacity, env::observation_size(env_config)) {
  config_.validate();
  env_config_.validate();
  const int obs_dim = env::observation_size(env_config_);
  const int actions = env::action_count(env_config_);

  Rng init_rng(derive_seed(seed, 3));
  policy_ = nn::PolicyHead(nn::MlpParams::orthogonal(layer_sizes(obs_dim, config_.hidden, actions),
                                                     kHiddenGain, kPolicyOutputGain, init_rng));
  const auto critic_sizes = layer_sizes(obs_dim, config_.hidden, actions);
  critics_.q1 = nn::MlpParams::orthogonal(critic_sizes, kHiddenGain, kCriticOutputGain, init_rng);
  critics_.q2 = nn::MlpParams::orthogonal(critic_sizes, kHiddenGain, kCriticOutputGain, init_rng);
  critics_.target1 = critics_.q1;
  critics_.target2 = critics_.q2;

  const nn::AdamConfig adam{config_.learning_rate};
  actor_opt_ = nn::OptimizerState::for_size(policy_.params().parameter_count(), adam);
  critic_opt_ = nn::OptimizerState::for_size(
      critics_.q1.parameter_count() + critics_.q2.parameter_count(), adam);
  alpha_opt_ = nn::OptimizerState::for_size(1, adam);
  if (config_.alpha_schedule.learned()) {
    log_alpha_ = std::log(config_.alpha_schedule.initial_alpha);
    h_bar0_ = -reg::h_bound(config_.regularizer, static_cast<std::size_t>(actions));
  }

  slots_.resize(static_cast<std::size_t>(config_.env_count));
  for (Slot& s : slots_) reset_slot(s);
}

void MdpoAgent::reset_slot(Slot& slot) {
  auto outcome = env::reset(env_config_, env_rng_.next());
  slot.state = outcome.state;
  slot.obs = std::move(outcome.observation);
  slot.episode_return = 0.0;
}

double MdpoAgent::current_alpha() const {
  if (config_.alpha_schedule.learned()) return std::exp(log_alpha_);
  return config_.alpha_schedule.at(env_steps_, config_.total_env_steps);
}

double MdpoAgent::current_lambda() const {
  return config_.lambda_schedule.at(env_steps_, config_.total_env_steps);
}

double MdpoAgent::current_h_bar() const {
  if (!config_.alpha_schedule.learned()) return 0.0;
  return config_.alpha_schedule.at(env_steps_, config_.total_env_steps) * h_bar0_;
}

void MdpoAgent::collect(int n_steps) {
  if (n_steps <= 0 || n_steps % config_.env_count != 0) {
    throw PreconditionError("collect: n_steps must be a positive multiple of env_count");
  }
  const auto n_env = static_cast<Eigen::Index>(slots_.size());
  const auto obs_dim = static_cast<Eigen::Index>(buffer_.obs_dim());
  Matrix obs(n_env, obs_dim);
  for (int t = 0; t < n_steps / config_.env_count; ++t) {
    for (Eigen::Index i = 0; i < n_env; ++i) {
      const auto& o = slots_[static_cast<std::size_t>(i)].obs;
      for (Eigen::Index c = 0; c < obs_dim; ++c) obs(i, c) = o[static_cast<std::size_t>(c)];
    }
    const Matrix probs = policy_.probs(obs);
    // Instances advance in a fixed order so the action stream is reproducible.
    for (Eigen::Index i = 0; i < n_env; ++i) {
      Slot& slot = slots_[static_cast<std::size_t>(i)];
      const Eigen::RowVectorXd row = probs.row(i);
      const int action = static_cast<int>(
          rng_.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
      auto next = env::step(env_config_, slot.state, action);
      buffer_.push(slot.obs, action, next.result.reward, next.result.observation, next.result.done);
      slot.episode_return += next.result.reward;
      if (next.result.done) {
        finished_returns_.push_back(slot.episode_return);
        reset_slot(slot);
      } else {
        slot.state = next.state;
        slot.obs = std::move(next.result.observation);
      }
    }
  }
}

IterationLog MdpoAgent::train_iteration() {
  IterationLog log;
  log.iteration = iteration_;
  log.alpha = current_alpha();
  log.lambda = current_lambda();
  log.h_bar = current_h_bar();

  finished_returns_.clear();
  collect(config_.steps_per_update);
  log.episodes = static_cast<int>(finished_returns_.size());
  if (finished_returns_.empty()) {
    log.mean_return = std::numeric_limits<double>::quiet_NaN();
  } else {
    double s = 0.0;
    for (double r : finished_returns_) s += r;
    log.mean_return = s / static_cast<double>(finished_returns_.size());
  }

  const Batch batch = buffer_.sample(static_cast<std::size_t>(config_.batch_size), rng_);
  const nn::PolicyHead snapshot = policy_;
  const Matrix old_probs = snapshot.probs(batch.obs);
  const Matrix q_hat = critics_.min_online(batch.obs);

  // Policy improvement.
  for (int e = 0; e < config_.actor_epochs; ++e) {
    const auto res = actor_loss(config_, policy_, batch.obs, old_probs, q_hat, log.alpha, log.lambda);
    log.actor_loss = res.value;
    nn::optimizer_step(actor_opt_, policy_.params(), res.grad, config_.max_grad_norm);
    if (after_actor_step) after_actor_step(policy_, snapshot);
  }

  if (config_.alpha_schedule.learned()) {
    const auto res = alpha_loss(config_, snapshot, batch, log_alpha_, log.h_bar);
    log.alpha_loss = res.value;
    Eigen::Matrix<double, 1, 1> p{log_alpha_};
    nn::Vector pv = p;
    nn::adam_step(alpha_opt_, pv, nn::Vector::Constant(1, res.grad_log_alpha), config_.max_grad_norm);
    log_alpha_ = pv[0];
  }

  // Policy evaluation against the updated policy.
  for (int e = 0; e < config_.critic_epochs; ++e) {
    const auto res = critic_loss(config_, critics_, policy_, batch, log.alpha);
    log.critic_loss = res.value;
    const nn::Vector q1 = critics_.q1.flatten();
    const nn::Vector q2 = critics_.q2.flatten();
    nn::Vector flat(q1.size() + q2.size());
    flat << q1, q2;
    nn::Vector g(flat.size());
    g << res.grad_q1.flatten(), res.grad_q2.flatten();
    nn::adam_step(critic_opt_, flat, std::move(g), config_.max_grad_norm);
    critics_.q1.assign(flat.head(q1.size()));
    critics_.q2.assign(flat.tail(q2.size()));
  }

  critics_.target1 = nn::polyak_update(critics_.target1, critics_.q1, config_.tau);
  critics_.target2 = nn::polyak_update(critics_.target2, critics_.q2, config_.tau);

  env_steps_ += config_.steps_per_update;
  log.env_steps = env_steps_;
  ++iteration_;
  return log;
}

std::vector<IterationLog> MdpoAgent::train(const std::function<void(const IterationLog&)>& on_iteration) {
  std::vector<IterationLog> logs;
  const long n = config_.iteration_count();
  logs.reserve(static_cast<std::size_t>(n));
  while (iteration_ < n) {
    logs.push_back(train_iteration());
    if (on_iteration) on_iteration(logs.back());
  }
  return logs;
}

std::vector<double> evaluate(const nn::PolicyHead& policy, const env::EnvConfig& env_config,
                             int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw PreconditionError("evaluate needs at least one episode");
  Rng rng(seed);
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    auto [state, obs] = env::reset(env_config, rng.next());
    double total = 0.0;
    while (true) {
      const Matrix p = policy.probs(row_matrix(obs));
      const int action = static_cast<int>(
          rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size()))));
      auto next = env::step(env_config, state, action);
      total += next.result.reward;
      if (next.result.done) break;
      state = next.state;
      obs = std::move(next.result.observation);
    }
    returns.push_back(total);
  }
  return returns;
}

}  // namespace pmdlab::agent
