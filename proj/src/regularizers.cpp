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

#include "pmdlab/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "pmdlab/errors.hpp"

namespace pmdlab::reg {
namespace {

double floored(double x) { return std::max(x, kProbFloor); }

std::string format_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

double parse_param(const std::string& text, const std::string& whole) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed regularizer parameter in '" + whole + "'");
  }
}

void require_same_size(const ActionDistribution& p, const ActionDistribution& q) {
  if (p.size() != q.size()) {
    throw PreconditionError("distributions over different action counts (" +
                            std::to_string(p.size()) + " vs " + std::to_string(q.size()) +
                            ")");
  }
}

std::size_t lowest_argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

ActionDistribution::ActionDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw PreconditionError("action distribution needs at least 2 entries");
  double sum = 0.0;
  for (double x : probs_) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
      throw PreconditionError("action distribution entry outside [0, 1]: " + format_param(x));
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw PreconditionError("action distribution sums to " + format_param(sum));
  }
}

ActionDistribution ActionDistribution::uniform(std::size_t n) {
  return ActionDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

RegularizerSpec RegularizerSpec::neg_tsallis(double m) {
  RegularizerSpec s{RegularizerKind::NegTsallis, m};
  s.validate();
  return s;
}

RegularizerSpec RegularizerSpec::lp(double p) {
  RegularizerSpec s{RegularizerKind::Lp, p};
  s.validate();
  return s;
}

void RegularizerSpec::validate() const {
  switch (kind) {
    case RegularizerKind::NegTsallis:
      if (!(param > 0.0) || param == 1.0 || !std::isfinite(param)) {
        throw ConfigError("Tsallis index must satisfy m > 0 and m != 1, got " +
                          format_param(param));
      }
      break;
    case RegularizerKind::Lp:
      if (!(param >= 1.0) || !std::isfinite(param)) {
        throw ConfigError("Lp exponent must be >= 1, got " + format_param(param));
      }
      break;
    case RegularizerKind::NegShannon:
    case RegularizerKind::Max:
      break;
  }
}

std::string RegularizerSpec::name() const {
  switch (kind) {
    case RegularizerKind::NegShannon:
      return "neg_shannon";
    case RegularizerKind::NegTsallis:
      return "neg_tsallis:" + format_param(param);
    case RegularizerKind::Lp:
      return param == 2.0 ? "sq_l2" : "lp:" + format_param(param);
    case RegularizerKind::Max:
      return "max";
  }
  return "?";
}

RegularizerSpec RegularizerSpec::parse(const std::string& text) {
  if (text == "neg_shannon") return neg_shannon();
  if (text == "sq_l2") return sq_l2();
  if (text == "max") return max();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const double v = parse_param(text.substr(colon + 1), text);
    if (head == "neg_tsallis") return neg_tsallis(v);
    if (head == "lp") return lp(v);
  }
  throw ConfigError("unknown regularizer '" + text +
                    "' (expected neg_shannon, neg_tsallis:<m>, sq_l2, lp:<p>, max)");
}

void DriftSpec::validate() const {
  if (kind == DriftKind::Bregman) potential.validate();
}

std::string DriftSpec::name() const {
  switch (kind) {
    case DriftKind::ReverseKL:
      return "rkl";
    case DriftKind::ForwardKL:
      return "fkl";
    case DriftKind::Bregman:
      return "bregman:" + potential.name();
  }
  return "?";
}

DriftSpec DriftSpec::parse(const std::string& text) {
  if (text == "rkl") return reverse_kl();
  if (text == "fkl") return forward_kl();
  const std::string prefix = "bregman:";
  if (text.rfind(prefix, 0) == 0) return bregman_of(RegularizerSpec::parse(text.substr(prefix.size())));
  throw ConfigError("unknown drift '" + text + "' (expected rkl, fkl, bregman:<regularizer>)");
}

double h_value(const RegularizerSpec& spec, const ActionDistribution& p) {
  spec.validate();
  const auto probs = p.probs();
  switch (spec.kind) {
    case RegularizerKind::NegShannon: {
      double acc = 0.0;
      for (double x : probs) acc += x * std::log(floored(x));
      return acc;
    }
    case RegularizerKind::NegTsallis: {
      const double m = spec.param;
      double acc = 0.0;
      for (double x : probs) acc += x - std::pow(x, m);
      return -acc / (m - 1.0);
    }
    case RegularizerKind::Lp: {
      double acc = 0.0;
      for (double x : probs) acc += std::pow(x, spec.param);
      return acc;
    }
    case RegularizerKind::Max:
      return *std::max_element(probs.begin(), probs.end());
  }
  return 0.0;
}

std::vector<double> h_subgradient(const RegularizerSpec& spec, const ActionDistribution& p) {
  spec.validate();
  const auto probs = p.probs();
  std::vector<double> g(probs.size(), 0.0);
  switch (spec.kind) {
    case RegularizerKind::NegShannon:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(floored(probs[i])) + 1.0;
      break;
    case RegularizerKind::NegTsallis: {
      // d/dx [-(x - x^m)/(m-1)] = (m x^(m-1) - 1)/(m-1)
      const double m = spec.param;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = m < 1.0 ? floored(probs[i]) : probs[i];
        g[i] = (m * std::pow(x, m - 1.0) - 1.0) / (m - 1.0);
      }
      break;
    }
    case RegularizerKind::Lp: {
      const double e = spec.param;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = e * std::pow(probs[i], e - 1.0);
      break;
    }
    case RegularizerKind::Max:
      g[lowest_argmax(probs)] = 1.0;
      break;
  }
  return g;
}

double bregman_generic(const RegularizerSpec& potential, const ActionDistribution& p,
                       const ActionDistribution& q) {
  require_same_size(p, q);
  const auto g = h_subgradient(potential, q);
  double inner = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * (p[i] - q[i]);
  return h_value(potential, p) - h_value(potential, q) - inner;
}

double kl_divergence(const ActionDistribution& p, const ActionDistribution& q) {
  require_same_size(p, q);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i] * (std::log(floored(p[i])) - std::log(floored(q[i])));
  }
  return acc;
}

double bregman(const RegularizerSpec& potential, const ActionDistribution& p,
               const ActionDistribution& q) {
  potential.validate();
  require_same_size(p, q);
  const std::size_t n = p.size();
  switch (potential.kind) {
    case RegularizerKind::NegShannon:
      return kl_divergence(p, q);
    case RegularizerKind::NegTsallis: {
      // (1/(m-1)) sum p^m - m p q^(m-1) - (1-m) q^m
      const double m = potential.param;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double qi = m < 1.0 ? floored(q[i]) : q[i];
        acc += std::pow(p[i], m) - m * p[i] * std::pow(qi, m - 1.0) - (1.0 - m) * std::pow(q[i], m);
      }
      return acc / (m - 1.0);
    }
    case RegularizerKind::Lp: {
      // sum q^e - q'^e - e q q'^(e-1) + e q'^e
      const double e = potential.param;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += std::pow(p[i], e) - std::pow(q[i], e) - e * p[i] * std::pow(q[i], e - 1.0) +
               e * std::pow(q[i], e);
      }
      return acc;
    }
    case RegularizerKind::Max: {
      const std::size_t j = lowest_argmax(q.probs());
      const auto pp = p.probs();
      return *std::max_element(pp.begin(), pp.end()) - q[j] - (p[j] - q[j]);
    }
  }
  return 0.0;
}

double drift_value(const DriftSpec& spec, const ActionDistribution& p_new,
                   const ActionDistribution& p_old) {
  switch (spec.kind) {
    case DriftKind::ReverseKL:
      return kl_divergence(p_new, p_old);
    case DriftKind::ForwardKL:
      return kl_divergence(p_old, p_new);
    case DriftKind::Bregman:
      return bregman(spec.potential, p_new, p_old);
  }
  return 0.0;
}

double h_bound(const RegularizerSpec& spec, std::size_t n) {
  spec.validate();
  if (n < 2) throw PreconditionError("h_bound needs at least 2 actions");
  switch (spec.kind) {
    case RegularizerKind::NegShannon:
      return std::log(static_cast<double>(n));
    case RegularizerKind::NegTsallis: {
      const double m = spec.param;
      if (m > 1.0) return 1.0 / (m - 1.0);
      // max over [0, 1] of |y - y^m| is attained at y* = m^(1/(1-m)).
      const double y = std::pow(m, 1.0 / (1.0 - m));
      return static_cast<double>(n) / (1.0 - m) * std::abs(y - std::pow(y, m));
    }
    case RegularizerKind::Lp:
    case RegularizerKind::Max:
      return 1.0;
  }
  throw DomainError("h_bound: unsupported regularizer kind");
}

}  // namespace pmdlab::reg
