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
#include <string>
#include <vector>

namespace pmdlab::reg {

/// Entries are clamped to [kProbFloor, 1] before log and negative powers.
inline constexpr double kProbFloor = 1e-8;

/// Tolerance on |sum(p) - 1| accepted by ActionDistribution.
inline constexpr double kSimplexTolerance = 1e-9;

/// A point on the probability simplex over n >= 2 actions.
class ActionDistribution {
 public:
  /// Throws PreconditionError unless `probs` is a valid distribution.
  explicit ActionDistribution(std::vector<double> probs);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  static ActionDistribution uniform(std::size_t n);

 private:
  std::vector<double> probs_;
};

enum class RegularizerKind { NegShannon, NegTsallis, Lp, Max };

/// Convex MDP regularizer h on the simplex.
///
/// `param` is the Tsallis index m for NegTsallis and the exponent p for Lp
/// (h(q) = sum q^p); it is unused for the other kinds.
struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::NegShannon;
  double param = 0.0;

  static RegularizerSpec neg_shannon() { return {RegularizerKind::NegShannon, 0.0}; }
  static RegularizerSpec neg_tsallis(double m);
  static RegularizerSpec lp(double p);
  static RegularizerSpec sq_l2() { return lp(2.0); }
  static RegularizerSpec max() { return {RegularizerKind::Max, 0.0}; }

  /// Throws ConfigError on m <= 0, m == 1, or p < 1.
  void validate() const;

  /// Canonical name: neg_shannon, neg_tsallis:<m>, sq_l2, lp:<p>, max.
  std::string name() const;
  static RegularizerSpec parse(const std::string& text);

  friend bool operator==(const RegularizerSpec&, const RegularizerSpec&) = default;
};

enum class DriftKind { ReverseKL, ForwardKL, Bregman };

/// Drift regularizer D(pi_new; pi_old).
struct DriftSpec {
  DriftKind kind = DriftKind::ReverseKL;
  RegularizerSpec potential{};  // used by Bregman only

  static DriftSpec reverse_kl() { return {DriftKind::ReverseKL, {}}; }
  static DriftSpec forward_kl() { return {DriftKind::ForwardKL, {}}; }
  static DriftSpec bregman_of(RegularizerSpec h) { return {DriftKind::Bregman, h}; }

  void validate() const;

  /// Canonical name: rkl, fkl, bregman:<regularizer name>.
  std::string name() const;
  static DriftSpec parse(const std::string& text);

  friend bool operator==(const DriftSpec&, const DriftSpec&) = default;
};

double h_value(const RegularizerSpec& spec, const ActionDistribution& p);

/// An element of the subdifferential of h at p. For Max this is e_j with j
/// the lowest index attaining the maximum.
std::vector<double> h_subgradient(const RegularizerSpec& spec, const ActionDistribution& p);

/// B_h(p, q) using the closed form where one exists.
double bregman(const RegularizerSpec& potential, const ActionDistribution& p,
               const ActionDistribution& q);

/// B_h(p, q) = h(p) - h(q) - <g(q), p - q> evaluated from h_value and
/// h_subgradient.
double bregman_generic(const RegularizerSpec& potential, const ActionDistribution& p,
                       const ActionDistribution& q);

/// KL(p || q) with the probability floor applied inside the logarithms.
double kl_divergence(const ActionDistribution& p, const ActionDistribution& q);

double drift_value(const DriftSpec& spec, const ActionDistribution& p_new,
                   const ActionDistribution& p_old);

/// Upper bound on |h(p)| over the simplex with n actions.
double h_bound(const RegularizerSpec& spec, std::size_t n);

}  // namespace pmdlab::reg
