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

#include "pmdlab/environments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "pmdlab/errors.hpp"
#include "pmdlab/random.hpp"

namespace pmdlab::env {
namespace {

using std::numbers::pi;

// Classic-control constants, identical to the gymnax/gym implementations.
namespace cartpole {
constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kTotalMass = kMassCart + kMassPole;
constexpr double kLength = 0.5;
constexpr double kPoleMassLength = kMassPole * kLength;
constexpr double kForceMag = 10.0;
constexpr double kTau = 0.02;
constexpr double kThetaThreshold = 12.0 * 2.0 * pi / 360.0;
constexpr double kXThreshold = 2.4;
}  // namespace cartpole

namespace acrobot {
constexpr double kDt = 0.2;
constexpr double kLinkLength1 = 1.0;
constexpr double kLinkMass1 = 1.0;
constexpr double kLinkMass2 = 1.0;
constexpr double kLinkCom1 = 0.5;
constexpr double kLinkCom2 = 0.5;
constexpr double kLinkMoi = 1.0;
constexpr double kMaxVel1 = 4.0 * pi;
constexpr double kMaxVel2 = 9.0 * pi;
constexpr double kGravity = 9.8;
constexpr std::array<double, 3> kTorques = {-1.0, 0.0, 1.0};

using Vec = std::array<double, 4>;

// "book" dynamics of Sutton & Barto, torque held constant over the step.
Vec dsdt(const Vec& s, double torque) {
  const double m1 = kLinkMass1, m2 = kLinkMass2, l1 = kLinkLength1;
  const double lc1 = kLinkCom1, lc2 = kLinkCom2, i1 = kLinkMoi, i2 = kLinkMoi;
  const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
  const double d1 =
      m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
  const double phi2 = m2 * lc2 * kGravity * std::cos(theta1 + theta2 - pi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                      2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                      (m1 * lc1 + m2 * l1) * kGravity * std::cos(theta1 - pi / 2.0) + phi2;
  const double ddtheta2 =
      (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
      (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

Vec axpy(const Vec& y, double a, const Vec& k) {
  return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]};
}

Vec rk4(const Vec& y0, double torque) {
  const double dt = kDt;
  const Vec k1 = dsdt(y0, torque);
  const Vec k2 = dsdt(axpy(y0, dt / 2.0, k1), torque);
  const Vec k3 = dsdt(axpy(y0, dt / 2.0, k2), torque);
  const Vec k4 = dsdt(axpy(y0, dt, k3), torque);
  Vec out;
  for (int i = 0; i < 4; ++i) out[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

double wrap(double x, double lo, double hi) {
  const double diff = hi - lo;
  while (x > hi) x -= diff;
  while (x < lo) x += diff;
  return x;
}
}  // namespace acrobot

std::string format_scale(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string kind_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::CartPole:
      return "cartpole";
    case EnvKind::Acrobot:
      return "acrobot";
    case EnvKind::Catch:
      return "catch";
    case EnvKind::DeepSea:
      return "deepsea";
  }
  return "?";
}

EnvKind parse_kind(const std::string& name) {
  if (name == "cartpole") return EnvKind::CartPole;
  if (name == "acrobot") return EnvKind::Acrobot;
  if (name == "catch") return EnvKind::Catch;
  if (name == "deepsea") return EnvKind::DeepSea;
  throw ConfigError("unknown environment '" + name + "' (expected cartpole, acrobot, catch, deepsea)");
}

void EnvConfig::validate() const {
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) {
    throw ConfigError("reward_scale must be positive, got " + format_scale(reward_scale));
  }
  if (max_episode_steps < 0) throw ConfigError("max_episode_steps must be positive");
  if (kind == EnvKind::Catch && (catch_rows < 3 || catch_cols < 2)) {
    throw ConfigError("Catch board must be at least 3 rows by 2 columns");
  }
  if (kind == EnvKind::DeepSea && deepsea_size < 2) {
    throw ConfigError("DeepSea size must be at least 2");
  }
}

std::string EnvConfig::id() const {
  std::string s = kind_name(kind);
  if (kind == EnvKind::Catch && (catch_rows != 10 || catch_cols != 5)) {
    s += "_" + std::to_string(catch_rows) + "x" + std::to_string(catch_cols);
  }
  if (kind == EnvKind::DeepSea && deepsea_size != 8) s += "_" + std::to_string(deepsea_size);
  if (max_episode_steps != 0 && max_episode_steps != default_max_episode_steps(*this)) {
    s += "_t" + std::to_string(max_episode_steps);
  }
  if (reward_scale != 1.0) s += "@" + format_scale(reward_scale);
  return s;
}

EnvConfig parse_env_id(const std::string& id) {
  const auto fail = [&]() -> EnvConfig { throw ConfigError("malformed environment id '" + id + "'"); };
  EnvConfig cfg;
  std::string rest = id;
  if (const auto at = rest.find('@'); at != std::string::npos) {
    const std::string scale = rest.substr(at + 1);
    std::size_t used = 0;
    try {
      cfg.reward_scale = std::stod(scale, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != scale.size()) return fail();
    rest.resize(at);
  }
  std::vector<std::string> parts;
  for (std::size_t start = 0;;) {
    const auto sep = rest.find('_', start);
    parts.push_back(rest.substr(start, sep == std::string::npos ? std::string::npos : sep - start));
    if (sep == std::string::npos) break;
    start = sep + 1;
  }
  cfg.kind = parse_kind(parts[0]);
  const auto to_int = [&](const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) fail();
    return std::stoi(text);
  };
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (!p.empty() && p[0] == 't') {
      cfg.max_episode_steps = to_int(p.substr(1));
    } else if (cfg.kind == EnvKind::Catch && p.find('x') != std::string::npos && i == 1) {
      const auto x = p.find('x');
      cfg.catch_rows = to_int(p.substr(0, x));
      cfg.catch_cols = to_int(p.substr(x + 1));
    } else if (cfg.kind == EnvKind::DeepSea && i == 1) {
      cfg.deepsea_size = to_int(p);
    } else {
      fail();
    }
  }
  cfg.validate();
  return cfg;
}

int default_max_episode_steps(const EnvConfig& config) {
  switch (config.kind) {
    case EnvKind::CartPole:
    case EnvKind::Acrobot:
      return 500;
    case EnvKind::Catch:
      return config.catch_rows;
    case EnvKind::DeepSea:
      return 2 * config.deepsea_size;
  }
  return 500;
}

int max_episode_steps(const EnvConfig& config) {
  return config.max_episode_steps > 0 ? config.max_episode_steps
                                      : default_max_episode_steps(config);
}

int action_count(const EnvConfig& config) {
  switch (config.kind) {
    case EnvKind::CartPole:
    case EnvKind::DeepSea:
      return 2;
    case EnvKind::Acrobot:
    case EnvKind::Catch:
      return 3;
  }
  return 2;
}

int observation_size(const EnvConfig& config) {
  switch (config.kind) {
    case EnvKind::CartPole:
      return 4;
    case EnvKind::Acrobot:
      return 6;
    case EnvKind::Catch:
      return config.catch_rows * config.catch_cols;
    case EnvKind::DeepSea:
      return config.deepsea_size * config.deepsea_size;
  }
  return 0;
}

std::vector<double> observe(const EnvConfig& config, const EnvState& s) {
  switch (config.kind) {
    case EnvKind::CartPole:
      return {s.physics.begin(), s.physics.end()};
    case EnvKind::Acrobot:
      return {std::cos(s.physics[0]), std::sin(s.physics[0]), std::cos(s.physics[1]),
              std::sin(s.physics[1]),  s.physics[2],           s.physics[3]};
    case EnvKind::Catch: {
      std::vector<double> board(static_cast<std::size_t>(config.catch_rows * config.catch_cols), 0.0);
      board[static_cast<std::size_t>(s.ball_y * config.catch_cols + s.ball_x)] = 1.0;
      board[static_cast<std::size_t>((config.catch_rows - 1) * config.catch_cols + s.paddle_x)] = 1.0;
      return board;
    }
    case EnvKind::DeepSea: {
      const int n = config.deepsea_size;
      std::vector<double> grid(static_cast<std::size_t>(n * n), 0.0);
      if (s.row < n) grid[static_cast<std::size_t>(s.row * n + s.col)] = 1.0;
      return grid;
    }
  }
  return {};
}

ResetOutcome reset(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  EnvState s;
  switch (config.kind) {
    case EnvKind::CartPole:
      for (double& x : s.physics) x = rng.uniform(-0.05, 0.05);
      break;
    case EnvKind::Acrobot:
      for (double& x : s.physics) x = rng.uniform(-0.1, 0.1);
      break;
    case EnvKind::Catch:
      s.ball_x = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.catch_cols)));
      s.ball_y = 0;
      s.paddle_x = config.catch_cols / 2;
      break;
    case EnvKind::DeepSea:
      s.row = 0;
      s.col = 0;
      break;
  }
  return {s, observe(config, s)};
}

StepOutcome step(const EnvConfig& config, const EnvState& state, int action) {
  if (action < 0 || action >= action_count(config)) {
    throw PreconditionError("action " + std::to_string(action) + " out of range for " +
                            config.id());
  }
  if (state.done) throw UsageError("step called on a finished episode; reset first");

  EnvState s = state;
  double reward = 0.0;
  bool terminal = false;

  switch (config.kind) {
    case EnvKind::CartPole: {
      using namespace cartpole;
      auto& [x, x_dot, theta, theta_dot] = s.physics;
      const double force = action == 1 ? kForceMag : -kForceMag;
      const double cos_t = std::cos(theta);
      const double sin_t = std::sin(theta);
      const double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
      const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                               (kLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
      const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;
      x = x + kTau * x_dot;
      x_dot = x_dot + kTau * x_acc;
      theta = theta + kTau * theta_dot;
      theta_dot = theta_dot + kTau * theta_acc;
      reward = 1.0;
      terminal = x < -kXThreshold || x > kXThreshold || theta < -kThetaThreshold ||
                 theta > kThetaThreshold;
      break;
    }
    case EnvKind::Acrobot: {
      using namespace acrobot;
      const Vec next = rk4(s.physics, kTorques[static_cast<std::size_t>(action)]);
      s.physics[0] = wrap(next[0], -pi, pi);
      s.physics[1] = wrap(next[1], -pi, pi);
      s.physics[2] = std::clamp(next[2], -kMaxVel1, kMaxVel1);
      s.physics[3] = std::clamp(next[3], -kMaxVel2, kMaxVel2);
      terminal = -std::cos(s.physics[0]) - std::cos(s.physics[1] + s.physics[0]) > 1.0;
      reward = terminal ? 0.0 : -1.0;
      break;
    }
    case EnvKind::Catch: {
      s.paddle_x = std::clamp(s.paddle_x + action - 1, 0, config.catch_cols - 1);
      s.ball_y += 1;
      terminal = s.ball_y == config.catch_rows - 1;
      if (terminal) reward = s.ball_x == s.paddle_x ? 1.0 : -1.0;
      break;
    }
    case EnvKind::DeepSea: {
      const int n = config.deepsea_size;
      const bool right = action == 1;
      if (right && s.col == n - 1) reward = 1.0;
      s.col = right ? std::min(s.col + 1, n - 1) : std::max(s.col - 1, 0);
      s.row += 1;
      terminal = s.row == n;
      break;
    }
  }

  s.step_count += 1;
  s.done = terminal || s.step_count >= max_episode_steps(config);
  StepResult result{observe(config, s), reward * config.reward_scale, s.done};
  return {s, std::move(result)};
}

ReturnBounds bounds(const EnvConfig& config) {
  const double c = config.reward_scale;
  switch (config.kind) {
    case EnvKind::CartPole:
      return {500.0 * c, 0.0};
    case EnvKind::Acrobot:
      return {-75.0 * c, -500.0 * c};
    case EnvKind::Catch:
      return {1.0 * c, -1.0 * c};
    case EnvKind::DeepSea:
      return {1.0 * c, 0.0};
  }
  return {};
}

std::vector<EnvConfig> rescaled_cartpole_suite() {
  const double scales[] = {2.0, 1.5, 1.0, 0.8, 2.0 / 3.0, 0.6, 0.4, 1.0 / 3.5, 0.2, 0.1, 0.01};
  std::vector<EnvConfig> out;
  for (double c : scales) {
    EnvConfig cfg;
    cfg.kind = EnvKind::CartPole;
    cfg.reward_scale = c;
    out.push_back(cfg);
  }
  return out;
}

std::vector<EnvConfig> upscaled_catch_suite() {
  std::vector<EnvConfig> out;
  for (int factor : {2, 3}) {
    EnvConfig cfg;
    cfg.kind = EnvKind::Catch;
    cfg.catch_rows = 10 * factor;
    cfg.catch_cols = 5 * factor;
    out.push_back(cfg);
  }
  return out;
}

std::vector<EnvConfig> standard_suite() {
  std::vector<EnvConfig> out;
  for (EnvKind k : {EnvKind::CartPole, EnvKind::Acrobot, EnvKind::Catch, EnvKind::DeepSea}) {
    EnvConfig cfg;
    cfg.kind = k;
    out.push_back(cfg);
  }
  return out;
}

}  // namespace pmdlab::env
