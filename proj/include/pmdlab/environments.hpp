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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pmdlab::env {

enum class EnvKind { CartPole, Acrobot, Catch, DeepSea };

/// Environment selection plus reward rescaling and size parameters.
struct EnvConfig {
  EnvKind kind = EnvKind::CartPole;
  double reward_scale = 1.0;
  int catch_rows = 10;
  int catch_cols = 5;
  int deepsea_size = 8;
  /// 0 selects the per-kind default (see default_max_episode_steps).
  int max_episode_steps = 0;

  /// Throws ConfigError for non-positive scale, undersized boards, etc.
  void validate() const;

  /// Stable identifier used as the env key in run records,
  /// e.g. "cartpole", "cartpole@0.4", "catch_20x10", "deepsea_8".
  std::string id() const;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

/// Inverse of EnvConfig::id(); reward scales round-trip to 6 significant digits.
EnvConfig parse_env_id(const std::string& id);

std::string kind_name(EnvKind kind);
EnvKind parse_kind(const std::string& name);

/// 500 for CartPole and Acrobot, rows for Catch, 2 * size for DeepSea.
int default_max_episode_steps(const EnvConfig& config);
int max_episode_steps(const EnvConfig& config);

/// Explicit environment state. Only the fields of the configured kind are
/// meaningful.
struct EnvState {
  // CartPole: x, x_dot, theta, theta_dot. Acrobot: theta1, theta2, dtheta1, dtheta2.
  std::array<double, 4> physics{};
  int ball_x = 0, ball_y = 0, paddle_x = 0;  // Catch
  int row = 0, col = 0;                      // DeepSea
  int step_count = 0;
  bool done = false;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

struct ResetOutcome {
  EnvState state;
  std::vector<double> observation;
};

struct StepOutcome {
  EnvState state;
  StepResult result;
};

struct ReturnBounds {
  double r_max = 1.0;
  double r_min = 0.0;
};

ResetOutcome reset(const EnvConfig& config, std::uint64_t seed);

/// Throws PreconditionError for an out-of-range action and UsageError when
/// `state` is already done.
StepOutcome step(const EnvConfig& config, const EnvState& state, int action);

int action_count(const EnvConfig& config);
int observation_size(const EnvConfig& config);
std::vector<double> observe(const EnvConfig& config, const EnvState& state);

/// Normalization bounds in scaled return units.
ReturnBounds bounds(const EnvConfig& config);

/// CartPole with reward scales giving maximum returns from 1000 down to 5.
std::vector<EnvConfig> rescaled_cartpole_suite();

/// The default Catch board scaled by 2 and by 3 in both dimensions.
std::vector<EnvConfig> upscaled_catch_suite();

/// CartPole, Acrobot, Catch and DeepSea with default settings.
std::vector<EnvConfig> standard_suite();

}  // namespace pmdlab::env
