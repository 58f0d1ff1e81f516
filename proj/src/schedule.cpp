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

#include "pmdlab/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "pmdlab/errors.hpp"

namespace pmdlab::agent {

double TemperatureSchedule::at(long step, long total_steps) const {
  const bool anneal = mode == Mode::LinearAnneal || (mode == Mode::LearnedAlpha && target_annealed);
  if (!anneal) return value;
  if (total_steps <= 0 || step >= total_steps) return 0.0;
  const double frac = static_cast<double>(std::max(step, 0L)) / static_cast<double>(total_steps);
  return std::max(0.0, value * (1.0 - frac));
}

void TemperatureSchedule::validate() const {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ConfigError("temperature schedule value must be finite and non-negative");
  }
  if (mode == Mode::LearnedAlpha && !(initial_alpha > 0.0)) {
    throw ConfigError("learned temperature needs a positive initial alpha");
  }
}

std::string TemperatureSchedule::mode_name() const {
  switch (mode) {
    case Mode::Constant:
      return "constant";
    case Mode::LinearAnneal:
      return "linear";
    case Mode::LearnedAlpha:
      return target_annealed ? "learned_linear" : "learned_constant";
  }
  return "?";
}

TemperatureSchedule TemperatureSchedule::from_mode(const std::string& mode, double value) {
  if (mode == "constant") return constant(value);
  if (mode == "linear") return linear(value);
  if (mode == "learned_constant") return learned(value, false);
  if (mode == "learned_linear") return learned(value, true);
  throw ConfigError("unknown schedule '" + mode +
                    "' (expected constant, linear, learned_constant, learned_linear)");
}

}  // namespace pmdlab::agent
