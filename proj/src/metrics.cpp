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

#include "pmdlab/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "pmdlab/errors.hpp"

namespace pmdlab::metrics {

double normalize_return(double raw, const env::ReturnBounds& bounds) {
  if (!(bounds.r_max != bounds.r_min) || !std::isfinite(bounds.r_max) ||
      !std::isfinite(bounds.r_min)) {
    throw ConfigError("return bounds must be finite and distinct");
  }
  return std::clamp((raw - bounds.r_min) / (bounds.r_max - bounds.r_min), 0.0, 1.0);
}

double aggregate(std::span<const RunRecord> records,
                 const std::map<std::string, env::ReturnBounds>& bounds) {
  if (bounds.empty()) throw PreconditionError("aggregate needs at least one environment");
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const RunRecord& r : records) {
    const auto it = bounds.find(r.env);
    if (it == bounds.end()) throw PreconditionError("record for environment outside the suite: " + r.env);
    auto& [sum, count] = sums[r.env];
    for (double raw : r.eval_returns) {
      sum += normalize_return(raw, it->second);
      ++count;
    }
  }
  double total = 0.0;
  for (const auto& [env, b] : bounds) {
    const auto it = sums.find(env);
    if (it == sums.end() || it->second.second == 0) {
      throw IncompleteDataError("no evaluations recorded for environment " + env);
    }
    total += it->second.first / static_cast<double>(it->second.second);
  }
  return total / static_cast<double>(bounds.size());
}

void PerformanceTable::set(double alpha, double lambda, double value, std::map<std::string, double> per_env) {
  if (!(value >= 0.0 && value <= 1.0)) throw PreconditionError("table cells must lie in [0, 1]");
  const auto key = [](const Cell& c) { return std::pair(c.alpha, c.lambda); };
  const auto pos = std::lower_bound(cells_.begin(), cells_.end(), std::pair(alpha, lambda),
                                    [&](const Cell& c, const std::pair<double, double>& k) { return key(c) < k; });
  Cell cell{alpha, lambda, value, std::move(per_env)};
  if (pos != cells_.end() && key(*pos) == std::pair(alpha, lambda)) {
    *pos = std::move(cell);
  } else {
    cells_.insert(pos, std::move(cell));
  }
}

const Cell* PerformanceTable::find(double alpha, double lambda) const {
  for (const Cell& c : cells_) {
    if (c.alpha == alpha && c.lambda == lambda) return &c;
  }
  return nullptr;
}

PerformanceTable PerformanceTable::positive_only() const {
  PerformanceTable out;
  for (const Cell& c : cells_) {
    if (c.alpha > 0.0 && c.lambda > 0.0) out.cells_.push_back(c);
  }
  return out;
}

double perf_frequency(double tau, const PerformanceTable& table) {
  if (table.empty()) throw PreconditionError("frequency of an empty table");
  const auto hits = std::count_if(table.cells().begin(), table.cells().end(),
                                  [&](const Cell& c) { return c.value >= tau; });
  return static_cast<double>(hits) / static_cast<double>(table.size());
}

double robustness(double threshold, const PerformanceTable& table) {
  if (!(threshold >= 0.0 && threshold < 1.0)) throw DomainError("robustness threshold must lie in [0, 1)");
  if (table.empty()) throw PreconditionError("robustness of an empty table");
  double s = 0.0;
  for (const Cell& c : table.cells()) s += std::max(0.0, std::min(c.value, 1.0) - threshold);
  return s / ((1.0 - threshold) * static_cast<double>(table.size()));
}

QuantileStats top_quantile_stats(double q, const PerformanceTable& table, bool restrict_positive) {
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("quantile must lie in (0, 1]");
  const PerformanceTable source = restrict_positive ? table.positive_only() : table;
  if (source.empty()) throw IncompleteDataError("no cells left for the quantile");
  std::vector<Cell> cells = source.cells();
  // Cells arrive in (alpha, lambda) order, so a stable sort keeps that order among ties.
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.value > b.value; });
  const auto k = std::min(cells.size(),
                          static_cast<std::size_t>(std::ceil(q * static_cast<double>(cells.size()) - 1e-12)));
  QuantileStats out;
  out.count = std::max<std::size_t>(k, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < out.count; ++i) sum += cells[i].value;
  out.mean = sum / static_cast<double>(out.count);
  double ss = 0.0;
  for (std::size_t i = 0; i < out.count; ++i) ss += (cells[i].value - out.mean) * (cells[i].value - out.mean);
  out.stddev = std::sqrt(ss / static_cast<double>(out.count));
  return out;
}

double default_other_axis_cap(Axis axis) {
  return axis == Axis::Alpha ? kDefaultLambdaCap : kDefaultAlphaCap;
}

std::optional<double> min_required_temperature(Axis axis, double threshold,
                                               const PerformanceTable& table,
                                               double other_axis_cap) {
  std::optional<double> best;
  for (const Cell& c : table.cells()) {
    const double own = axis == Axis::Alpha ? c.alpha : c.lambda;
    const double other = axis == Axis::Alpha ? c.lambda : c.alpha;
    if (other > other_axis_cap || c.value < threshold) continue;
    if (!best || own < *best) best = own;
  }
  return best;
}

std::pair<double, double> LinearFit::band(double x) const {
  const double se = residual_sd * std::sqrt(1.0 / static_cast<double>(n) + (x - x_mean) * (x - x_mean) / sxx);
  const double y = predict(x);
  return {y - t_quantile * se, y + t_quantile * se};
}

LinearFit linear_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw PreconditionError("a linear fit needs at least three points");
  LinearFit fit;
  fit.n = points.size();
  const double n = static_cast<double>(fit.n);
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  fit.x_mean = sx / n;
  const double y_mean = sy / n;
  double sxy = 0.0;
  for (const auto& [x, y] : points) {
    fit.sxx += (x - fit.x_mean) * (x - fit.x_mean);
    sxy += (x - fit.x_mean) * (y - y_mean);
  }
  double scale = 0.0;
  for (const auto& [x, y] : points) scale = std::max(scale, std::abs(x - fit.x_mean));
  if (!(fit.sxx > 0.0) || scale == 0.0 || fit.sxx <= 1e-24 * scale * scale * n) {
    throw RankError("linear fit: all x values coincide");
  }
  fit.slope = sxy / fit.sxx;
  fit.intercept = y_mean - fit.slope * fit.x_mean;
  double rss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - fit.predict(x);
    rss += r * r;
  }
  fit.residual_sd = std::sqrt(rss / (n - 2.0));
  const boost::math::students_t dist(n - 2.0);
  fit.t_quantile = boost::math::quantile(boost::math::complement(dist, 0.025));
  return fit;
}

}  // namespace pmdlab::metrics
