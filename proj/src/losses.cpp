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

#include <cmath>

#include "pmdlab/agent.hpp"
#include "pmdlab/errors.hpp"

namespace pmdlab::agent {
namespace {

using nn::Matrix;
using nn::Tape;
using nn::Var;
using nn::Vector;
using reg::kProbFloor;

reg::ActionDistribution row_dist(const Matrix& probs, Eigen::Index r) {
  std::vector<double> v(static_cast<std::size_t>(probs.cols()));
  for (Eigen::Index c = 0; c < probs.cols(); ++c) v[static_cast<std::size_t>(c)] = probs(r, c);
  return reg::ActionDistribution(std::move(v));
}

void require_batch(const Batch& batch) {
  if (batch.size() == 0) throw PreconditionError("loss evaluated on an empty batch");
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite");
}

}  // namespace

Var h_rows(const reg::RegularizerSpec& spec, Var probs) {
  switch (spec.kind) {
    case reg::RegularizerKind::NegShannon:
      return nn::row_sum(nn::mul(probs, nn::log(nn::clamp_min(probs, kProbFloor))));
    case reg::RegularizerKind::NegTsallis: {
      const double m = spec.param;
      const Var base = m < 1.0 ? nn::clamp_min(probs, kProbFloor) : probs;
      return nn::scale(nn::row_sum(nn::sub(probs, nn::pow(base, m))), -1.0 / (m - 1.0));
    }
    case reg::RegularizerKind::Lp:
      return nn::row_sum(nn::pow(probs, spec.param));
    case reg::RegularizerKind::Max:
      return nn::row_max(probs);
  }
  throw DomainError("h_rows: unsupported regularizer");
}

Vector h_rows(const reg::RegularizerSpec& spec, const Matrix& probs) {
  Vector out(probs.rows());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) out[r] = reg::h_value(spec, row_dist(probs, r));
  return out;
}

Var drift_rows(const reg::DriftSpec& spec, Var probs, const Matrix& old_probs) {
  Tape& tape = *probs.tape();
  if (old_probs.rows() != probs.rows() || old_probs.cols() != probs.cols()) {
    throw PreconditionError("drift_rows: snapshot probabilities have the wrong shape");
  }
  switch (spec.kind) {
    case reg::DriftKind::ReverseKL: {
      const Var log_old = tape.constant(old_probs.array().max(kProbFloor).log().matrix());
      const Var log_new = nn::log(nn::clamp_min(probs, kProbFloor));
      return nn::row_sum(nn::mul(probs, nn::sub(log_new, log_old)));
    }
    case reg::DriftKind::ForwardKL: {
      const Matrix log_old = old_probs.array().max(kProbFloor).log().matrix();
      const Var old = tape.constant(old_probs);
      const Var log_new = nn::log(nn::clamp_min(probs, kProbFloor));
      return nn::row_sum(nn::mul(old, nn::sub(tape.constant(log_old), log_new)));
    }
    case reg::DriftKind::Bregman: {
      // h(p) - [h(q) - <g(q), q>] - <g(q), p> with g a subgradient at the
      // constant snapshot q.
      const Eigen::Index b = old_probs.rows(), n = old_probs.cols();
      Matrix g(b, n);
      Matrix offset(b, 1);
      for (Eigen::Index r = 0; r < b; ++r) {
        const auto q = row_dist(old_probs, r);
        const auto gr = reg::h_subgradient(spec.potential, q);
        double inner = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) {
          g(r, c) = gr[static_cast<std::size_t>(c)];
          inner += g(r, c) * old_probs(r, c);
        }
        offset(r, 0) = reg::h_value(spec.potential, q) - inner;
      }
      const Var linear = nn::row_sum(nn::mul(tape.constant(g), probs));
      return nn::sub(nn::sub(h_rows(spec.potential, probs), tape.constant(offset)), linear);
    }
  }
  throw DomainError("drift_rows: unsupported drift");
}

ActorLossResult actor_loss(const AgentConfig& config, const nn::PolicyHead& policy,
                           const Matrix& obs, const Matrix& old_probs, const Matrix& q_hat,
                           double alpha, double lambda) {
  if (obs.rows() == 0) throw PreconditionError("actor loss evaluated on an empty batch");
  Tape tape;
  const nn::BoundMlp net = nn::bind(tape, policy.params(), true);
  const Var probs = nn::softmax_rows(nn::forward(net, tape.constant(obs)));
  if (q_hat.rows() != probs.rows() || q_hat.cols() != probs.cols()) {
    throw PreconditionError("actor loss: critic values have the wrong shape");
  }
  Var per_state = nn::row_sum(nn::mul(probs, tape.constant(-q_hat)));
  // Zero temperatures drop their term entirely.
  if (alpha != 0.0) {
    per_state = nn::add(per_state, nn::scale(h_rows(config.regularizer, probs), alpha));
  }
  if (lambda != 0.0) {
    per_state = nn::add(per_state, nn::scale(drift_rows(config.drift, probs, old_probs), lambda));
  }
  const Var loss = nn::mean(per_state);
  ActorLossResult out;
  out.value = loss.scalar();
  tape.backward(loss);
  out.grad = nn::gradient_of(tape, net, policy.params());
  return out;
}

ActorLossResult actor_loss(const AgentConfig& config, const nn::PolicyHead& policy,
                           const nn::PolicyHead& snapshot, const nn::TwinCritic& critics,
                           const Batch& batch, double alpha, double lambda) {
  require_batch(batch);
  return actor_loss(config, policy, batch.obs, snapshot.probs(batch.obs),
                    critics.min_online(batch.obs), alpha, lambda);
}

Vector critic_targets(const AgentConfig& config, const nn::TwinCritic& critics,
                      const nn::PolicyHead& policy, const Batch& batch, double alpha) {
  require_batch(batch);
  const Matrix next_probs = policy.probs(batch.next_obs);
  const Matrix next_q = critics.min_target(batch.next_obs);
  Vector soft_value = next_probs.cwiseProduct(next_q).rowwise().sum();
  if (config.use_regularized_q && alpha != 0.0) {
    soft_value -= alpha * h_rows(config.regularizer, next_probs);
  }
  Vector y(batch.size());
  for (Eigen::Index r = 0; r < batch.size(); ++r) {
    y[r] = batch.dones[r] != 0.0 ? batch.rewards[r]
                                 : batch.rewards[r] + config.gamma * soft_value[r];
  }
  return y;
}

CriticLossResult critic_loss(const nn::TwinCritic& critics, const Batch& batch, const Vector& targets) {
  require_batch(batch);
  Tape tape;
  const nn::BoundMlp n1 = nn::bind(tape, critics.q1, true);
  const nn::BoundMlp n2 = nn::bind(tape, critics.q2, true);
  const Var obs = tape.constant(batch.obs);
  const Var y = tape.constant(targets);
  const Var d1 = nn::sub(nn::gather(nn::forward(n1, obs), batch.actions), y);
  const Var d2 = nn::sub(nn::gather(nn::forward(n2, obs), batch.actions), y);
  const Var loss = nn::add(nn::mean(nn::mul(d1, d1)), nn::mean(nn::mul(d2, d2)));
  CriticLossResult out;
  out.value = loss.scalar();
  tape.backward(loss);
  out.grad_q1 = nn::gradient_of(tape, n1, critics.q1);
  out.grad_q2 = nn::gradient_of(tape, n2, critics.q2);
  return out;
}

CriticLossResult critic_loss(const AgentConfig& config, const nn::TwinCritic& critics,
                             const nn::PolicyHead& policy, const Batch& batch, double alpha) {
  return critic_loss(critics, batch, critic_targets(config, critics, policy, batch, alpha));
}

AlphaLossResult alpha_loss(const AgentConfig& config, const nn::PolicyHead& snapshot,
                           const Batch& batch, double log_alpha, double h_bar) {
  require_batch(batch);
  const Vector h = h_rows(config.regularizer, snapshot.probs(batch.obs));
  Tape tape;
  const Var la = tape.variable(Matrix::Constant(1, 1, log_alpha));
  const Var coefficient = tape.constant(Matrix::Constant(1, 1, -h.mean() + h_bar));
  const Var loss = nn::mul(nn::exp(la), coefficient);
  AlphaLossResult out;
  out.value = loss.scalar();
  require_finite(out.value, "alpha loss");
  tape.backward(loss);
  out.grad_log_alpha = tape.grad(la)(0, 0);
  return out;
}

}  // namespace pmdlab::agent
