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

#include <string>

namespace pmdlab::agent {

/// How a temperature evolves over training.
///
/// Constant and LinearAnneal emit the temperature directly. LearnedAlpha
/// learns log(alpha) against the target h_bar = w * h_bar0; `value` is then
/// the weight w (or its initial value w0 when `target_annealed`).
struct TemperatureSchedule {
  enum class Mode { Constant, LinearAnneal, LearnedAlpha };

  Mode mode = Mode::Constant;
  double value = 0.0;
  bool target_annealed = false;
  double initial_alpha = 0.01;

  static TemperatureSchedule constant(double v) { return {Mode::Constant, v, false, 0.01}; }
  static TemperatureSchedule linear(double v0) { return {Mode::LinearAnneal, v0, false, 0.01}; }
  static TemperatureSchedule learned(double w, bool annealed, double initial_alpha = 0.01) {
    return {Mode::LearnedAlpha, w, annealed, initial_alpha};
  }

  bool learned() const { return mode == Mode::LearnedAlpha; }

  /// Constant/LinearAnneal: the temperature after `step` of `total_steps`
  /// environment steps (linear decay reaches exactly 0 at total_steps).
  /// LearnedAlpha: the target weight w_k.
  double at(long step, long total_steps) const;

  void validate() const;

  /// constant | linear | learned_constant | learned_linear
  std::string mode_name() const;
  static TemperatureSchedule from_mode(const std::string& mode, double value);
};

}  // namespace pmdlab::agent
