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

#include <cstddef>
#include <span>
#include <vector>

#include "pmdlab/autodiff.hpp"
#include "pmdlab/random.hpp"

namespace pmdlab::agent {

struct Transition {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

/// Minibatch in matrix form; row i is one transition.
struct Batch {
  nn::Matrix obs;
  nn::Matrix next_obs;
  std::vector<int> actions;
  nn::Vector rewards;
  nn::Vector dones;  // 1.0 where the episode ended

  Eigen::Index size() const { return obs.rows(); }
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim);

  void push(std::span<const double> obs, int action, double reward,
            std::span<const double> next_obs, bool done);
  void push(const Transition& t) { push(t.obs, t.action, t.reward, t.next_obs, t.done); }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }

  /// i-th stored transition, 0 = oldest.
  Transition at(std::size_t i) const;

  /// Uniform sampling with replacement. Throws UsageError when empty.
  Batch sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t physical(std::size_t logical) const;

  std::size_t capacity_;
  int obs_dim_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // next slot to write
  std::vector<double> obs_, next_obs_, rewards_;
  std::vector<int> actions_;
  std::vector<unsigned char> dones_;
};

}  // namespace pmdlab::agent
