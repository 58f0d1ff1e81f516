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

#include "pmdlab/replay_buffer.hpp"

#include <algorithm>

#include "pmdlab/errors.hpp"

namespace pmdlab::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim)
    : capacity_(capacity), obs_dim_(obs_dim) {
  if (capacity == 0 || obs_dim <= 0) throw ConfigError("replay buffer needs positive capacity and width");
}

void ReplayBuffer::push(std::span<const double> obs, int action, double reward,
                        std::span<const double> next_obs, bool done) {
  const auto d = static_cast<std::size_t>(obs_dim_);
  if (obs.size() != d || next_obs.size() != d) {
    throw PreconditionError("transition width does not match the replay buffer");
  }
  if (size_ < capacity_) {
    // Storage grows lazily until the buffer first fills up.
    obs_.insert(obs_.end(), obs.begin(), obs.end());
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
    actions_.push_back(action);
    rewards_.push_back(reward);
    dones_.push_back(done ? 1 : 0);
    ++size_;
  } else {
    std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(head_ * d));
    std::copy(next_obs.begin(), next_obs.end(),
              next_obs_.begin() + static_cast<std::ptrdiff_t>(head_ * d));
    actions_[head_] = action;
    rewards_[head_] = reward;
    dones_[head_] = done ? 1 : 0;
  }
  head_ = (head_ + 1) % capacity_;
}

std::size_t ReplayBuffer::physical(std::size_t logical) const {
  return size_ < capacity_ ? logical : (head_ + logical) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw PreconditionError("replay index out of range");
  const std::size_t p = physical(i);
  const auto d = static_cast<std::size_t>(obs_dim_);
  Transition t;
  t.obs.assign(obs_.begin() + static_cast<std::ptrdiff_t>(p * d),
               obs_.begin() + static_cast<std::ptrdiff_t>((p + 1) * d));
  t.next_obs.assign(next_obs_.begin() + static_cast<std::ptrdiff_t>(p * d),
                    next_obs_.begin() + static_cast<std::ptrdiff_t>((p + 1) * d));
  t.action = actions_[p];
  t.reward = rewards_[p];
  t.done = dones_[p] != 0;
  return t;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw UsageError("cannot sample from an empty replay buffer");
  const auto b = static_cast<Eigen::Index>(batch_size);
  const auto d = static_cast<Eigen::Index>(obs_dim_);
  Batch batch;
  batch.obs.resize(b, d);
  batch.next_obs.resize(b, d);
  batch.actions.resize(batch_size);
  batch.rewards.resize(b);
  batch.dones.resize(b);
  for (Eigen::Index r = 0; r < b; ++r) {
    // Contents are stored in physical order; uniform over slots is uniform over contents.
    const auto p = static_cast<std::size_t>(rng.below(size_));
    const double* o = obs_.data() + p * static_cast<std::size_t>(d);
    const double* n = next_obs_.data() + p * static_cast<std::size_t>(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      batch.obs(r, c) = o[c];
      batch.next_obs(r, c) = n[c];
    }
    batch.actions[static_cast<std::size_t>(r)] = actions_[p];
    batch.rewards[r] = rewards_[p];
    batch.dones[r] = dones_[p];
  }
  return batch;
}

}  // namespace pmdlab::agent
