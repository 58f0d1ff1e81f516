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

// Normalized-return metrics over temperature grids.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmdlab/environments.hpp"

namespace pmdlab::metrics {

struct RunRecord {
  std::string config_id;
  std::string env;  // EnvConfig::id()
  std::uint64_t seed = 0;
  std::vector<double> eval_returns;  // raw, one per evaluation episode
};

/// (raw - r_min) / (r_max - r_min) clamped to [0, 1]. ConfigError when the
/// bounds coincide.
double normalize_return(double raw, const env::ReturnBounds& bounds);

/// Mean over environments of the mean normalized evaluation return. `bounds`
/// lists the suite; every env in it needs at least one record with at least
/// one evaluation (IncompleteDataError otherwise). Records for envs outside
/// the suite raise PreconditionError.
double aggregate(std::span<const RunRecord> records,
                 const std::map<std::string, env::ReturnBounds>& bounds);

struct Cell {
  double alpha = 0.0;
  double lambda = 0.0;
  double value = 0.0;  // aggregated normalized return in [0, 1]
  std::map<std::string, double> per_env;
};

class PerformanceTable {
 public:
  /// Adds or replaces the cell at (alpha, lambda). PreconditionError unless
  /// value lies in [0, 1].
  void set(double alpha, double lambda, double value, std::map<std::string, double> per_env = {});

  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  const Cell* find(double alpha, double lambda) const;

  /// Cells with alpha > 0 and lambda > 0.
  PerformanceTable positive_only() const;

 private:
  std::vector<Cell> cells_;  // kept sorted by (alpha, lambda)
};

/// Fraction of cells with value >= tau.
double perf_frequency(double tau, const PerformanceTable& table);

/// Normalized area under the frequency curve on [T, 1], in closed form.
/// DomainError unless 0 <= T < 1.
double robustness(double threshold, const PerformanceTable& table);

struct QuantileStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

/// Mean and standard deviation of the best ceil(q * count) cells; ties at the
/// cutoff go to the lexicographically smaller (alpha, lambda).
QuantileStats top_quantile_stats(double q, const PerformanceTable& table, bool restrict_positive);

enum class Axis { Alpha, Lambda };

inline constexpr double kDefaultSuccessThreshold = 0.85;
inline constexpr double kRelaxedSuccessThreshold = 0.75;
inline constexpr double kDefaultLambdaCap = 1e-3;  // when scanning alpha
inline constexpr double kDefaultAlphaCap = 0.002;  // when scanning lambda

double default_other_axis_cap(Axis axis);

/// Smallest temperature on `axis` whose cell reaches `threshold`, among
/// cells whose other temperature is at most `other_axis_cap`.
std::optional<double> min_required_temperature(Axis axis, double threshold,
                                               const PerformanceTable& table,
                                               double other_axis_cap);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_sd = 0.0;
  double x_mean = 0.0;
  double sxx = 0.0;
  std::size_t n = 0;
  double t_quantile = 0.0;  // two-sided 95% Student t, n - 2 dof

  double predict(double x) const { return intercept + slope * x; }
  /// 95% confidence interval of the fitted mean at x.
  std::pair<double, double> band(double x) const;
};

/// Ordinary least squares of y on x. PreconditionError below three points,
/// RankError when all x coincide.
LinearFit linear_fit(std::span<const std::pair<double, double>> points);

}  // namespace pmdlab::metrics
